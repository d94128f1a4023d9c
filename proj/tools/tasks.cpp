// Copyright 2026 The kqpd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kqpd/parallel.hpp"

namespace kqpd::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

json tolerances_json(const Scenario& s) {
  const Tolerances& t = s.tol;
  return json{{"hermitian", t.hermitian},
              {"unitary", t.unitary},
              {"trace", t.trace},
              {"positivity", t.positivity},
              {"eigen_residual", t.eigen_residual},
              {"binning", t.binning},
              {"prune", t.prune},
              {"imag_residual", t.imag_residual},
              {"normalization", t.normalization},
              {"pair_budget", t.pair_budget},
              {"overlap_floor", t.overlap_floor},
              {"trajectory_budget", s.budgets.trajectory_budget},
              {"max_support", s.budgets.max_support},
              {"aliasing_tolerance", s.budgets.aliasing_tolerance}};
}

TaskResult skeleton(const Scenario& s, const std::string& task) {
  TaskResult r;
  r.doc["schema_version"] = kSchemaVersion;
  r.doc["version"] = kVersion;
  r.doc["task"] = task;
  r.doc["inputs"] = json{{"scenario", s.raw}, {"tolerances", tolerances_json(s)}, {"seed", s.seed}};
  r.doc["result"] = json::object();
  r.doc["checks"] = json::object();
  r.doc["warnings"] = json::array();
  return r;
}

Table bar_plot(const QuasiDistribution& q) {
  Table t = distribution_table("plot", q);
  t.comments.push_back("bar data: one row per support point; a1..aN are the outcome values, weight the quasi-probability");
  if (q.tracks_interference()) t.columns.pop_back();
  for (auto& row : t.rows)
    if (q.tracks_interference()) row.pop_back();
  return t;
}

bool negativity_has_interference(const QuasiDistribution& q) {
  if (!q.tracks_interference()) return true;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q.weight(i) < -1e-12 && std::abs(q.interference()(i)) == 0.0) return false;
  return true;
}

void add_distribution_checks(json& checks, const QuasiDistribution& q, const Tolerances& tol) {
  checks["normalized"] = std::abs(q.total_weight() - 1.0) <= tol.normalization;
  checks["real"] = q.max_imag_residual() <= tol.imag_residual;
}

json means_json(const QuasiDistribution& q) {
  json out = json::array();
  if (q.empty()) return out;
  const Eigen::VectorXd m = mean(q);
  for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(m(i));
  return out;
}

double variance_1d(const QuasiDistribution& q) {
  const double m1 = moment(q, {1});
  return moment(q, {2}) - m1 * m1;
}

// ----------------------------------------------------------------- kqpd

QuasiDistribution scenario_kqpd(const Scenario& s, const SubsequentScenario& sc) {
  const BackActionVector g = build_backaction(s);
  if (!g.gammas.empty()) return kqpd_with_backaction(sc, g, s.engine());
  return sc.is_unitary() ? kqpd_subsequent(sc, s.engine()) : kqpd_subsequent_channels(sc, s.engine());
}

TaskResult run_kqpd(const Scenario& s) {
  TaskResult r = skeleton(s, "kqpd");
  const json& b = s.block("kqpd");
  const SubsequentScenario sc = build_subsequent(s, b.at("steps"), "kqpd.steps");
  const QuasiDistribution q = scenario_kqpd(s, sc);
  json& res = r.doc["result"];
  res["distribution"] = to_json(q);
  res["mean"] = means_json(q);
  json& checks = r.doc["checks"];
  add_distribution_checks(checks, q, s.tol);
  checks["negativity_has_interference"] = negativity_has_interference(q);

  if (b.contains("lambdas") && sc.is_unitary()) {
    const BackActionVector g = build_backaction(s);
    Table cf;
    cf.name = "characteristic";
    cf.comments.push_back("lambda_1..lambda_N, Re/Im of the characteristic function, Re/Im of the Fourier sum");
    for (std::size_t l = 0; l < sc.size(); ++l) cf.columns.push_back("lambda" + std::to_string(l + 1));
    for (const char* c : {"re_direct", "im_direct", "re_sum", "im_sum"}) cf.columns.push_back(c);
    double worst = 0.0;
    json rows = json::array();
    const json& ls = b.at("lambdas");
    for (std::size_t k = 0; k < ls.size(); ++k) {
      const json& lj = ls[k];
      if (!lj.is_array() || lj.size() != sc.size())
        fail(ErrorCode::InvalidArgument, "kqpd.lambdas[" + std::to_string(k) + "]: need one lambda per step");
      Eigen::VectorXd lam(static_cast<Eigen::Index>(sc.size()));
      for (std::size_t l = 0; l < sc.size(); ++l) lam(static_cast<Eigen::Index>(l)) = lj[l].get<double>();
      const auto direct = characteristic_function(sc, lam, g);
      const auto sum = fourier_sum(q, lam);
      worst = std::max(worst, std::abs(direct - sum));
      std::vector<double> row(lam.data(), lam.data() + lam.size());
      row.insert(row.end(), {direct.real(), direct.imag(), sum.real(), sum.imag()});
      cf.rows.push_back(row);
      rows.push_back(json{{"lambda", lj}, {"direct", to_json(direct)}, {"fourier_sum", to_json(sum)}});
    }
    res["characteristic"] = rows;
    res["characteristic_max_deviation"] = worst;
    checks["characteristic_agrees"] = worst <= 1e-8;
    r.tables.push_back(std::move(cf));
  }
  r.tables.insert(r.tables.begin(), distribution_table("distribution", q));
  r.plot = bar_plot(q);
  return r;
}

// -------------------------------------------------------------- measure

TaskResult run_measure(const Scenario& s) {
  TaskResult r = skeleton(s, "measure");
  const SubsequentScenario sc = build_subsequent(s, s.block("kqpd").at("steps"), "kqpd.steps");
  const json& b = s.block("measure");
  const auto dets = build_detectors(b.at("detectors"), "measure.detectors");
  ProbeGrid grid;
  if (b.contains("grid")) {
    const json& g = b.at("grid");
    grid.points_per_axis = g.value("points_per_axis", grid.points_per_axis);
    grid.sigma_span = g.value("sigma_span", grid.sigma_span);
    grid.max_total = g.value("max_total", grid.max_total);
  }
  const SignedGaussianMixture m = measured_subsequent(sc, dets, s.engine());
  json& res = r.doc["result"];
  json& checks = r.doc["checks"];
  res["mixture"] = to_json(m);
  json dj = json::array();
  bool all_ok = true;
  for (const auto& d : dets) {
    dj.push_back(to_json(d));
    all_ok = all_ok && d.heisenberg_ok();
  }
  res["detectors"] = dj;
  const double min_density = min_density_on_grid(m, grid);
  res["min_density"] = min_density;
  json moments = json::array();
  for (Eigen::Index a = 0; a < m.dims(); ++a) moments.push_back(json{{"mean", m.raw_moment(a, 1)}, {"second", m.raw_moment(a, 2)}});
  res["moments"] = moments;
  checks["normalized"] = std::abs(m.total_weight() - 1.0) <= s.tol.normalization;
  if (all_ok) checks["positive_on_grid"] = min_density >= -1e-9;
  for (const auto& w : m.warnings()) r.doc["warnings"].push_back(w);

  // Curves of the first axis; one series per final outcome when the last
  // axis is discrete and there are exactly two axes.
  Table plot;
  plot.name = "plot";
  plot.columns = {"series", "x", "density"};
  std::vector<std::pair<std::string, SignedGaussianMixture>> series;
  const bool conditional = m.dims() == 2 && m.discrete_axis(1) && !m.discrete_axis(0);
  json cond = json::array();
  if (conditional) {
    std::vector<double> finals;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double v = m.centers()(i, 1);
      if (std::none_of(finals.begin(), finals.end(), [&](double f) { return std::abs(f - v) <= 1e-9 * std::max(1.0, std::abs(v)); }))
        finals.push_back(v);
    }
    std::sort(finals.begin(), finals.end());
    for (double v : finals) {
      std::ostringstream label;
      label.precision(17);
      label << "final=" << v;
      try {
        series.emplace_back(label.str(), condition_final(m, v));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroProbability) throw;
        r.doc["warnings"].push_back(label.str() + " has zero probability");
      }
    }
  } else if (m.dims() == 1 && !m.discrete_axis(0)) {
    series.emplace_back("all", m);
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& mix = series[k].second;
    plot.comments.push_back("series " + std::to_string(k) + ": " + series[k].first);
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index i = 0; i < mix.size(); ++i) {
      lo = std::min(lo, mix.centers()(i, 0) - grid.sigma_span * mix.widths()(i, 0));
      hi = std::max(hi, mix.centers()(i, 0) + grid.sigma_span * mix.widths()(i, 0));
    }
    const int n = std::max(2, grid.points_per_axis);
    double best_x = lo, best = -1e300;
    for (int i = 0; i < n; ++i) {
      const double x = lo + (hi - lo) * i / (n - 1);
      const double d = mix.density({x});
      plot.rows.push_back({static_cast<double>(k), x, d});
      if (d > best) {
        best = d;
        best_x = x;
      }
    }
    if (conditional) {
      cond.push_back(json{{"label", series[k].first},
                          {"mixture", to_json(mix)},
                          {"argmax", best_x},
                          {"mean", mix.raw_moment(0, 1)}});
    }
  }
  plot.comments.insert(plot.comments.begin(), "curves: density of the first outcome on a uniform grid, per series");
  if (conditional) res["conditional"] = cond;

  if (b.contains("samples")) {
    const auto n = b.at("samples").get<std::size_t>();
    const Eigen::MatrixXd draws = sample(m, n, s.seed, grid);
    json emp = json::array();
    for (Eigen::Index a = 0; a < draws.cols(); ++a) {
      const double mu = draws.col(a).mean();
      const double sd = std::sqrt((draws.col(a).array() - mu).square().sum() / std::max<double>(1.0, n - 1.0));
      const double se = sd / std::sqrt(static_cast<double>(n));
      emp.push_back(json{{"mean", mu}, {"standard_error", se}});
      checks["sample_mean_axis" + std::to_string(a + 1)] = std::abs(mu - m.raw_moment(a, 1)) <= 3.0 * se + 1e-12;
    }
    res["samples"] = json{{"count", n}, {"axes", emp}};
  }

  Table comps;
  comps.name = "components";
  for (Eigen::Index a = 0; a < m.dims(); ++a) comps.columns.push_back("center" + std::to_string(a + 1));
  for (Eigen::Index a = 0; a < m.dims(); ++a) comps.columns.push_back("width" + std::to_string(a + 1));
  comps.columns.push_back("weight");
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::vector<double> row;
    for (Eigen::Index a = 0; a < m.dims(); ++a) row.push_back(m.centers()(i, a));
    for (Eigen::Index a = 0; a < m.dims(); ++a) row.push_back(m.widths()(i, a));
    row.push_back(m.weights()(i));
    comps.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(comps));
  r.tables.push_back(plot);
  r.plot = std::move(plot);
  return r;
}

// --------------------------------------------------------------- wigner

json grid_summary(const PhaseSpaceGrid& g) {
  return json{{"x", json{{"origin", g.x.origin}, {"spacing", g.x.spacing}, {"count", g.x.count}}},
              {"p", json{{"origin", g.p.origin}, {"spacing", g.p.spacing}, {"count", g.p.count}}},
              {"integral", g.integral()},
              {"min", g.values.minCoeff()},
              {"max", g.values.maxCoeff()}};
}

Table grid_table(const std::string& name, const PhaseSpaceGrid& g) {
  Table t;
  t.name = name;
  t.comments.push_back("long format: one row per grid point");
  t.columns = {"x", "p", "value"};
  for (Eigen::Index i = 0; i < g.x.count; ++i)
    for (Eigen::Index j = 0; j < g.p.count; ++j) t.rows.push_back({g.x.at(i), g.p.at(j), g.values(i, j)});
  return t;
}

TaskResult run_wigner(const Scenario& s) {
  TaskResult r = skeleton(s, "wigner");
  const json& b = s.block("wigner");
  const Wavefunction1D psi = build_wavefunction(s);
  const PhaseSpaceGrid w = wigner(psi);
  json& res = r.doc["result"];
  json& checks = r.doc["checks"];
  res["wigner"] = grid_summary(w);
  res["value_at_origin"] = w.at(0.0, 0.0);
  res["negativity_volume"] = negativity_volume(w);

  Eigen::VectorXd xd(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) xd(i) = std::norm(psi.amplitudes()(i));
  const double xdev = (w.x_marginal() - xd).cwiseAbs().maxCoeff();
  const double pdev = (w.p_marginal() - momentum_density(psi, w.p)).cwiseAbs().maxCoeff();
  res["x_marginal_deviation"] = xdev;
  res["p_marginal_deviation"] = pdev;
  checks["integral_is_one"] = std::abs(w.integral() - 1.0) <= 1e-6;
  checks["marginals_match"] = xdev <= 1e-6 && pdev <= 1e-6;

  std::ostringstream bin;
  write_grid_binary(w, bin);
  r.blobs.emplace_back("wigner.bin", bin.str());
  r.tables.push_back(grid_table("wigner", w));

  if (b.contains("husimi_sigma")) {
    const double sigma = b.at("husimi_sigma").get<double>();
    const PhaseSpaceGrid q = husimi(w, sigma);
    res["husimi"] = grid_summary(q);
    res["husimi"]["sigma"] = sigma;
    checks["husimi_nonnegative"] = q.values.minCoeff() >= -1e-9;
    const auto [dx, dp] = husimi_detectors(sigma);
    const PhaseSpaceGrid sim = simultaneous_xp(w, dx, dp);
    const double dev = (sim.values - q.values).cwiseAbs().maxCoeff();
    res["husimi"]["simultaneous_deviation"] = dev;
    checks["simultaneous_equals_husimi"] = dev <= 1e-8;
    r.tables.push_back(grid_table("husimi", q));
  }
  if (b.contains("detectors")) {
    const json& d = b.at("detectors");
    const GaussianDetector dx = build_detector(d.at("x"), "wigner.detectors.x");
    const GaussianDetector dp = build_detector(d.at("p"), "wigner.detectors.p");
    const std::string mode = d.value("mode", std::string("simultaneous"));
    PhaseSpaceGrid g;
    if (mode == "simultaneous") g = simultaneous_xp(w, dx, dp);
    else if (mode == "x_then_p") g = sequential_xp(w, dx, dp, MeasurementOrder::XThenP);
    else if (mode == "p_then_x") g = sequential_xp(w, dx, dp, MeasurementOrder::PThenX);
    else fail(ErrorCode::InvalidArgument, "wigner.detectors.mode: expected simultaneous, x_then_p or p_then_x");
    res["measured"] = grid_summary(g);
    res["measured"]["mode"] = mode;
    if (dx.heisenberg_ok() && dp.heisenberg_ok()) checks["measured_nonnegative"] = g.values.minCoeff() >= -1e-9;
    r.tables.push_back(grid_table("measured", g));
  }
  if (b.contains("momentum_check")) {
    json reps = json::array();
    bool ok = true;
    for (const auto& xv : b.at("momentum_check")) {
      const auto rep = momentum_weak_value_check(psi, xv.get<double>(), s.tol.overlap_floor);
      reps.push_back(json{{"x", rep.x},
                          {"row_x", rep.row_x},
                          {"wigner_mean", rep.wigner_mean},
                          {"local_momentum", rep.local_momentum},
                          {"deviation", rep.deviation}});
      ok = ok && rep.deviation <= 1e-4;
    }
    res["momentum_check"] = reps;
    checks["momentum_weak_value"] = ok;
  }

  Table plot;
  plot.name = "plot";
  plot.comments.push_back("curves: series 0 is the x marginal, series 1 the p marginal");
  plot.columns = {"series", "x", "density"};
  const Eigen::VectorXd xm = w.x_marginal(), pm = w.p_marginal();
  for (Eigen::Index i = 0; i < xm.size(); ++i) plot.rows.push_back({0.0, w.x.at(i), xm(i)});
  for (Eigen::Index j = 0; j < pm.size(); ++j) plot.rows.push_back({1.0, w.p.at(j), pm(j)});
  r.plot = std::move(plot);
  return r;
}

// ----------------------------------------------------------- weak value

TaskResult run_weak_value(const Scenario& s) {
  TaskResult r = skeleton(s, "weak-value");
  const WeakValueScenario wv = build_weak_value(s);
  const auto aw = weak_value(wv);
  const QuasiDistribution q = weak_kqpd(wv, s.engine());
  json& res = r.doc["result"];
  json& checks = r.doc["checks"];
  res["weak_value"] = to_json(aw);
  res["overlap"] = to_json(wv.overlap);
  res["distribution"] = to_json(q);
  const double var_closed = weak_variance(wv);
  const double var_dist = variance_1d(q);
  res["variance"] = json{{"closed_form", var_closed}, {"distribution", var_dist}};
  const bool anomalous = aw.real() > wv.observable.max_eigenvalue() + 1e-12 || aw.real() < wv.observable.min_eigenvalue() - 1e-12;
  res["anomalous"] = anomalous;
  add_distribution_checks(checks, q, s.tol);
  checks["mean_is_real_part"] = std::abs(moment(q, {1}) - aw.real()) <= 1e-10;
  checks["variance_paths_agree"] = std::abs(var_closed - var_dist) <= 1e-9;
  checks["anomaly_implies_negativity"] = !anomalous || q.min_weight() < 0.0;
  r.tables.push_back(distribution_table("distribution", q));
  r.plot = bar_plot(q);
  return r;
}

// --------------------------------------------------------- Leggett-Garg

json lg_json(const LGReport& rep) {
  return json{{"C21", rep.c21},
              {"C32", rep.c32},
              {"C31", rep.c31},
              {"K", rep.k},
              {"violated", rep.violated},
              {"min_weight", rep.min_weight},
              {"diagonal_mass", rep.diagonal_mass},
              {"zero_argument_mass", rep.zero_argument_mass},
              {"route_deviation", rep.route_deviation}};
}

TaskResult run_lg(const Scenario& s) {
  TaskResult r = skeleton(s, "leggett-garg");
  const LGScenario lg = build_lg(s);
  const LGReport rep = lg_test(lg, s.engine());
  r.doc["result"] = lg_json(rep);
  r.doc["result"]["kqpd"] = to_json(rep.kqpd);
  json& checks = r.doc["checks"];
  add_distribution_checks(checks, rep.kqpd, s.tol);
  checks["identities_hold"] = rep.identities_hold;
  checks["violation_implies_negativity"] = rep.implication_holds;
  checks["correlator_routes_agree"] = rep.route_deviation <= 1e-10;
  r.tables.push_back(distribution_table("distribution", rep.kqpd));
  r.plot = bar_plot(rep.kqpd);
  return r;
}

// ----------------------------------------------------------------- work

TaskResult run_work(const Scenario& s) {
  TaskResult r = skeleton(s, "work");
  const json& b = s.block("work");
  const WorkScenario w = build_work(s);
  const QuasiDistribution q = work_kqpd(w, s.engine());
  const QuasiDistribution tpm = tpm_distribution(w, s.tol.binning);
  json& res = r.doc["result"];
  json& checks = r.doc["checks"];
  res["kqpd"] = to_json(q);
  res["tpm"] = to_json(tpm);
  add_distribution_checks(checks, q, s.tol);

  const int kmax = b.value("moments", 3);
  const ComplexMatrix delta = heisenberg(w.work_part, w.evolution()) - w.work_part.matrix();
  json moments = json::array();
  bool identity_ok = true, paths_ok = true;
  ComplexMatrix dk = ComplexMatrix::Identity(w.rho0.dim(), w.rho0.dim());
  for (int k = 1; k <= kmax; ++k) {
    dk = dk * delta;
    const double closed = work_moments(w, k);
    const double dist = moment(q, {k});
    json m{{"k", k}, {"keldysh_sum", closed}, {"distribution", dist}};
    if (k <= 2) {
      const double trace = (dk * w.rho0.matrix()).trace().real();
      m["energy_difference_trace"] = trace;
      identity_ok = identity_ok && std::abs(closed - trace) <= 1e-10;
    }
    paths_ok = paths_ok && std::abs(closed - dist) <= 1e-9 * std::max(1.0, std::abs(closed));
    moments.push_back(std::move(m));
  }
  res["moments"] = moments;
  checks["low_moments_are_traces"] = identity_ok;
  checks["moment_paths_agree"] = paths_ok;
  const ComplexMatrix comm = w.rho0.matrix() * w.work_part.matrix() - w.work_part.matrix() * w.rho0.matrix();
  const bool commuting = max_abs(comm) <= 1e-12;
  res["initial_state_commutes"] = commuting;
  if (commuting) checks["matches_tpm"] = max_weight_deviation(q, tpm) <= 1e-10;

  if (b.contains("power_slices")) {
    const PowerFCSReport p = power_fcs_consistency(w, b.at("power_slices").get<int>(), s.fcs_options());
    res["power_fcs"] = json{{"commutator_norm", p.commutator_norm},
                            {"commuting", p.commuting},
                            {"method", p.method == FCSMethod::Trajectory ? "trajectory" : "spectral"},
                            {"distribution", to_json(p.power)},
                            {"max_deviation", p.max_deviation}};
    if (p.commuting) checks["power_fcs_matches"] = p.max_deviation <= 1e-6;
  }
  r.tables.push_back(distribution_table("kqpd", q));
  r.tables.push_back(distribution_table("tpm", tpm));
  r.plot = bar_plot(q);
  return r;
}

// ------------------------------------------------------------------ fcs

TaskResult run_fcs(const Scenario& s) {
  TaskResult r = skeleton(s, "fcs");
  const json& b = s.block("fcs");
  const FCSScenario f = build_fcs(s);
  const FCSOptions opt = s.fcs_options();
  const std::string method = b.value("method", std::string("spectral"));
  json& res = r.doc["result"];
  json& checks = r.doc["checks"];
  QuasiDistribution q;
  if (method == "trajectory" || method == "both") q = fcs_distribution(f, FCSMethod::Trajectory, opt);
  if (method == "spectral") q = fcs_distribution(f, FCSMethod::Spectral, opt);
  if (method == "both") {
    const QuasiDistribution sp = fcs_distribution(f, FCSMethod::Spectral, opt);
    const double dev = max_weight_deviation(q, sp, 1e-9 * std::max(1.0, f.duration));
    res["route_deviation"] = dev;
    checks["routes_agree"] = dev <= 1e-7;
  } else if (method != "trajectory" && method != "spectral") {
    fail(ErrorCode::InvalidArgument, "fcs.method: expected trajectory, spectral or both");
  }
  res["distribution"] = to_json(q);
  res["mean"] = moment(q, {1});
  res["variance"] = variance_1d(q);
  add_distribution_checks(checks, q, s.tol);
  checks["lambda_zero_is_one"] = std::abs(fcs_characteristic(f, 0.0) - 1.0) <= 1e-12;

  if (b.contains("lambdas")) {
    const json& l = b.at("lambdas");
    const Sweep grid{"lambda", l.at("from").get<double>(), l.at("to").get<double>(), l.at("count").get<int>()};
    Table cf;
    cf.name = "characteristic";
    cf.comments.push_back("lambda, Re and Im of the characteristic function");
    cf.columns = {"lambda", "re", "im"};
    std::vector<std::complex<double>> vals(static_cast<std::size_t>(std::max(0, grid.count)));
    parallel_for(grid.count, s.threads, [&](int i) { vals[static_cast<std::size_t>(i)] = fcs_characteristic(f, grid.at(i)); });
    for (int i = 0; i < grid.count; ++i) cf.rows.push_back({grid.at(i), vals[i].real(), vals[i].imag()});
    r.tables.push_back(std::move(cf));
  }
  if (b.contains("detector")) {
    const GaussianDetector det = build_detector(b.at("detector"), "fcs.detector");
    const SignedGaussianMixture m = measured_fcs(f, det, opt);
    res["measured"] = to_json(m);
    const double md = min_density_on_grid(m);
    res["measured"]["min_density"] = md;
    if (det.heisenberg_ok()) checks["measured_positive_on_grid"] = md >= -1e-9;
    for (const auto& w : m.warnings()) r.doc["warnings"].push_back(w);
  }
  r.tables.insert(r.tables.begin(), distribution_table("distribution", q));
  r.plot = bar_plot(q);
  return r;
}

TaskResult run_single(const Scenario& s, const std::string& task) {
  if (task == "kqpd") return run_kqpd(s);
  if (task == "measure") return run_measure(s);
  if (task == "wigner") return run_wigner(s);
  if (task == "weak-value") return run_weak_value(s);
  if (task == "leggett-garg") return run_lg(s);
  if (task == "work") return run_work(s);
  if (task == "fcs") return run_fcs(s);
  fail(ErrorCode::InvalidArgument, "unknown task '" + task + "'");
}

// ---------------------------------------------------------------- sweeps

// Scenario with the swept parameter applied.
Scenario at_point(const Scenario& s, const std::string& task, const Sweep& sw, double v) {
  Scenario p = s;
  p.threads = 1;
  if (task == "leggett-garg" && sw.key == "theta") {
    json& b = p.raw["leggett-garg"];
    const double tpt = b.contains("time_per_theta") ? b.at("time_per_theta").get<double>() : 1.0;
    const LGScenario base = build_lg(s);
    const double t1 = base.times[0];
    b["times"] = json::array({t1, t1 + v * tpt, t1 + 2.0 * v * tpt});
  } else if (task == "work" && sw.key == "tau") {
    p.raw["work"]["tau"] = v;
  } else if (task == "fcs" && (sw.key == "duration" || sw.key == "gamma")) {
    p.raw["fcs"][sw.key] = v;
  } else {
    fail(ErrorCode::InvalidArgument, "sweep key '" + sw.key + "' is not supported for task '" + task + "'");
  }
  return p;
}

TaskResult run_sweep(const Scenario& s, const std::string& task, const Sweep& sw) {
  TaskResult r = skeleton(s, task);
  r.doc["inputs"]["sweep"] = json{{"key", sw.key}, {"from", sw.from}, {"to", sw.to}, {"count", sw.count}};
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(sw.count));
  std::vector<json> checks(static_cast<std::size_t>(sw.count));
  parallel_for(sw.count, s.threads, [&](int i) {
    const double v = sw.at(i);
    const Scenario p = at_point(s, task, sw, v);
    const TaskResult one = run_single(p, task);
    const json& res = one.doc.at("result");
    if (task == "leggett-garg") {
      rows[i] = {v, res.at("K").get<double>(), res.at("min_weight").get<double>()};
    } else {
      const json& d = task == "work" ? res.at("kqpd") : res.at("distribution");
      const QuasiDistribution q = task == "work" ? work_kqpd(build_work(p), p.engine())
                                                 : fcs_distribution(build_fcs(p), FCSMethod::Spectral, p.fcs_options());
      rows[i] = {v, moment(q, {1}), variance_1d(q), d.at("min_weight").get<double>()};
    }
    checks[i] = one.doc.at("checks");
  });
  Table t;
  t.name = "sweep";
  if (task == "leggett-garg") {
    t.columns = {"theta", "K", "min_weight"};
    t.comments.push_back("K = C21 + C32 - C31 against the equal-gap angle; min_weight of the three-time distribution");
  } else {
    t.columns = {sw.key, "mean", "variance", "min_weight"};
    t.comments.push_back("long format: one row per swept value");
  }
  t.rows = rows;
  json pts = json::array();
  json& all = r.doc["checks"];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    json row;
    for (std::size_t c = 0; c < t.columns.size(); ++c) row[t.columns[c]] = rows[i][c];
    pts.push_back(std::move(row));
    for (auto it = checks[i].begin(); it != checks[i].end(); ++it) {
      const bool ok = it.value().get<bool>();
      all[it.key()] = all.contains(it.key()) ? all[it.key()].get<bool>() && ok : ok;
    }
  }
  r.doc["result"]["sweep"] = pts;
  if (task == "leggett-garg" && !rows.empty()) {
    const auto best = std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a[1] < b[1]; });
    r.doc["result"]["max_K"] = (*best)[1];
    r.doc["result"]["argmax_theta"] = (*best)[0];
  }
  r.tables.push_back(t);
  r.plot = t;
  r.plot.name = "plot";
  r.plot.comments.insert(r.plot.comments.begin(), "curves: swept parameter in the first column");
  return r;
}

}  // namespace

Sweep Sweep::parse(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "sweep '" + text + "' is not key=from:to:count");
  Sweep s;
  s.key = text.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream ss(text.substr(eq + 1));
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) fail(ErrorCode::InvalidArgument, "sweep '" + text + "' is not key=from:to:count");
  s.from = parse_real(parts[0]);
  s.to = parse_real(parts[1]);
  const double n = parse_real(parts[2]);
  if (!(n >= 1) || n != std::floor(n) || n > 1e6) fail(ErrorCode::InvalidArgument, "sweep count must be a positive integer");
  s.count = static_cast<int>(n);
  return s;
}

TaskResult run_task(const Scenario& s, const std::string& task, const std::optional<Sweep>& sweep) {
  if (sweep) return run_sweep(s, task, *sweep);
  return run_single(s, task);
}

int exit_code_for(ErrorCode code) {
  if (is_budget_error(code)) return 3;
  switch (code) {
    case ErrorCode::NotHermitian:
    case ErrorCode::NotUnitary:
    case ErrorCode::NotDensityMatrix:
    case ErrorCode::NotTracePreserving:
    case ErrorCode::DimMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::OverlapTooSmall:
    case ErrorCode::ZeroProbability:
      return 2;
    default:
      return 1;
  }
}

void emit_plotdata(const TaskResult& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  Table t = r.plot;
  if (t.columns.empty()) {
    t.comments = {"no plot data for this result"};
    t.columns = {"x", "value"};
  }
  write_csv(out, t);
}

}  // namespace kqpd::cli
