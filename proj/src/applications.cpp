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

#include "kqpd/applications.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kqpd/errors.hpp"

namespace kqpd {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<ComplexMatrix> powers(const ComplexMatrix& m, int k) {
  std::vector<ComplexMatrix> out{ComplexMatrix::Identity(m.rows(), m.cols())};
  for (int i = 1; i <= k; ++i) out.push_back(out.back() * m);
  return out;
}

HermitianObservable projector_onto(const ComplexVector& v) {
  const ComplexMatrix p = v * v.adjoint();
  return HermitianObservable::from_matrix((p + p.adjoint()) / 2.0);
}

}  // namespace

// ---------------------------------------------------------------- work

void WorkScenario::validate() const {
  require(hamiltonian.dim() == work_part.dim() && hamiltonian.dim() == rho0.dim(), ErrorCode::DimMismatch,
          "Hamiltonian, work-storage energy and state differ in dimension");
  require(std::isfinite(tau) && tau >= 0, ErrorCode::InvalidArgument, "tau must be finite and nonnegative");
}

SubsequentScenario WorkScenario::kqpd_scenario() const {
  validate();
  SubsequentScenario s{rho0, {}, {}};
  s.steps.push_back(Step{UnitaryPropagator::identity(rho0.dim()), work_part});
  s.steps.push_back(Step{evolution(), work_part});
  if (tau > 0) s.times = {0.0, tau};
  return s;
}

QuasiDistribution work_kqpd(const WorkScenario& s, const EngineOptions& opt) {
  const QuasiDistribution q = kqpd_subsequent(s.kqpd_scenario(), opt);
  Eigen::MatrixXd diff(1, 2);
  diff << -1.0, 1.0;
  return project(q, diff, opt.tol.binning, 2.0 * s.work_part.spectral_range());
}

QuasiDistribution tpm_distribution(const WorkScenario& s, double rel_tol) {
  s.validate();
  const ComplexMatrix u = s.evolution().matrix();
  const auto& levels = s.work_part.levels();
  const auto n = static_cast<int>(levels.size());
  std::vector<ComplexMatrix> proj;
  for (int l = 0; l < n; ++l) proj.push_back(s.work_part.projector(l));
  Eigen::MatrixXd pts(n * n, 1);
  Eigen::VectorXcd w(n * n);
  for (int i = 0; i < n; ++i) {
    const ComplexMatrix after = u * proj[i] * s.rho0.matrix() * proj[i] * u.adjoint();
    for (int f = 0; f < n; ++f) {
      pts(i * n + f, 0) = levels[f] - levels[i];
      w(i * n + f) = (proj[f] * after).trace().real();
    }
  }
  return bin_points(pts, w, rel_tol, nullptr, 2.0 * s.work_part.spectral_range());
}

double work_moments(const WorkScenario& s, int k) {
  s.validate();
  require(k >= 0, ErrorCode::InvalidArgument, "moment order must be nonnegative");
  const ComplexMatrix h0 = -s.work_part.matrix();
  const ComplexMatrix ht = heisenberg(s.work_part, s.evolution());
  const auto p0 = powers(h0, k);
  const auto pt = powers(ht, k);
  const auto d = s.rho0.dim();
  // Forward branch: later operators to the left; backward branch mirrored.
  auto forward = [&](int n) {
    ComplexMatrix t = ComplexMatrix::Zero(d, d);
    for (int j = 0; j <= n; ++j) t += binomial(n, j) * pt[j] * p0[n - j];
    return t;
  };
  auto backward = [&](int m) {
    ComplexMatrix t = ComplexMatrix::Zero(d, d);
    for (int i = 0; i <= m; ++i) t += binomial(m, i) * p0[m - i] * pt[i];
    return t;
  };
  std::complex<double> acc = 0.0;
  for (int n = 0; n <= k; ++n) acc += binomial(k, n) * (forward(n) * s.rho0.matrix() * backward(k - n)).trace();
  return std::ldexp(acc.real(), -k);
}

PowerFCSReport power_fcs_consistency(const WorkScenario& s, int slices, const FCSOptions& opt) {
  s.validate();
  const std::complex<double> i(0.0, 1.0);
  const ComplexMatrix& h = s.hamiltonian.matrix();
  const ComplexMatrix& hw = s.work_part.matrix();
  ComplexMatrix p = i * (h * hw - hw * h);
  p = (p + p.adjoint()) / 2.0;

  PowerFCSReport r;
  r.commutator_norm = max_abs(ComplexMatrix(p * h - h * p));
  const double scale = std::max(1.0, max_abs(h) * max_abs(p));
  r.commuting = r.commutator_norm <= 1e-10 * scale;

  FCSScenario f;
  f.counted = HermitianObservable::from_matrix(p);
  f.hamiltonian = s.hamiltonian;
  f.rho0 = s.rho0;
  f.duration = s.tau > 0 ? s.tau : 1.0;
  f.slices = slices;
  const double pairs = std::pow(static_cast<double>(s.rho0.dim()), 2.0 * slices);
  r.method = pairs <= static_cast<double>(opt.trajectory_budget) ? FCSMethod::Trajectory : FCSMethod::Spectral;
  r.power = fcs_distribution(f, r.method, opt);
  r.work = work_kqpd(s, opt.engine);
  const double match = 1e-6 * std::max(1.0, s.work_part.spectral_range());
  r.max_deviation = max_weight_deviation(r.power, r.work, match);
  return r;
}

// ---------------------------------------------------------- weak values

WeakValueScenario WeakValueScenario::make(HermitianObservable a, ComplexVector initial, ComplexVector final_state,
                                          double overlap_floor) {
  require(initial.size() == a.dim() && final_state.size() == a.dim(), ErrorCode::DimMismatch,
          "states and observable differ in dimension");
  require(initial.norm() > 0 && final_state.norm() > 0, ErrorCode::InvalidArgument, "states must be nonzero");
  WeakValueScenario s;
  s.observable = std::move(a);
  s.initial = initial / initial.norm();
  s.final_state = final_state / final_state.norm();
  s.overlap = s.final_state.dot(s.initial);
  s.overlap_floor = overlap_floor;
  if (!(std::abs(s.overlap) > overlap_floor)) {
    std::ostringstream os;
    os << "|<F|I>| = " << std::abs(s.overlap) << " is below the floor " << overlap_floor;
    fail(ErrorCode::OverlapTooSmall, os.str());
  }
  return s;
}

namespace {

void check_overlap(const WeakValueScenario& s) {
  if (!(std::abs(s.overlap) > s.overlap_floor)) {
    std::ostringstream os;
    os << "|<F|I>| = " << std::abs(s.overlap) << " is below the floor " << s.overlap_floor;
    fail(ErrorCode::OverlapTooSmall, os.str());
  }
}

std::complex<double> weak_of(const WeakValueScenario& s, const ComplexMatrix& op) {
  check_overlap(s);
  return s.final_state.dot(op * s.initial) / s.overlap;
}

}  // namespace

std::complex<double> weak_value(const WeakValueScenario& s) { return weak_of(s, s.observable.matrix()); }

QuasiDistribution weak_kqpd(const WeakValueScenario& s, const EngineOptions& opt) {
  check_overlap(s);
  const auto d = s.observable.dim();
  SubsequentScenario sc{DensityMatrix::pure(s.initial), {}, {}};
  sc.steps.push_back(Step{UnitaryPropagator::identity(d), s.observable});
  sc.steps.push_back(Step{UnitaryPropagator::identity(d), projector_onto(s.final_state)});
  const QuasiDistribution joint = kqpd_subsequent(sc, opt);
  const QuasiDistribution kept = slice(joint, 1, 1.0, 1e-9);
  const double born = std::norm(s.overlap);
  Eigen::VectorXd iw;
  if (kept.tracks_interference()) iw = kept.interference() / born;
  return QuasiDistribution(kept.support(), kept.weights() / born, kept.max_imag_residual() / born, std::move(iw));
}

double weak_variance(const WeakValueScenario& s) {
  const ComplexMatrix& a = s.observable.matrix();
  const std::complex<double> aw = weak_of(s, a);
  const std::complex<double> a2w = weak_of(s, a * a);
  return 0.5 * a2w.real() - 0.5 * aw.real() * aw.real() + 0.5 * aw.imag() * aw.imag();
}

std::array<double, 3> spin_weak_table(const SpinAmplitudes& amp) {
  const double cross = (amp.alpha * std::conj(amp.beta) * std::conj(amp.gamma) * amp.delta).real();
  const double norm = std::norm(amp.alpha * amp.delta - amp.beta * amp.gamma);
  require(norm > 1e-16, ErrorCode::OverlapTooSmall, "final state is orthogonal to the initial state");
  return {std::norm(amp.beta) * std::norm(amp.gamma) / norm, -2.0 * cross / norm,
          std::norm(amp.alpha) * std::norm(amp.delta) / norm};
}

MomentumWeakValueReport momentum_weak_value_check(const Wavefunction1D& psi, double x, double floor) {
  const Axis& ax = psi.axis();
  const auto row = static_cast<Eigen::Index>(std::lround((x - ax.origin) / ax.spacing));
  require(row >= 2 && row + 2 < psi.size(), ErrorCode::InvalidArgument, "position lies too close to the grid edge");
  const auto& a = psi.amplitudes();
  if (std::norm(a(row)) < floor) {
    std::ostringstream os;
    os << "|psi(x)|^2 = " << std::norm(a(row)) << " is below the floor " << floor;
    fail(ErrorCode::OverlapTooSmall, os.str());
  }
  MomentumWeakValueReport r;
  r.x = x;
  r.row_x = ax.at(row);
  const std::complex<double> deriv =
      (-a(row + 2) + 8.0 * a(row + 1) - 8.0 * a(row - 1) + a(row - 2)) / (12.0 * ax.spacing);
  r.local_momentum = (deriv / a(row)).imag();

  const PhaseSpaceGrid w = wigner(psi);
  double mass = 0.0, first = 0.0;
  for (Eigen::Index c = 0; c < w.p.count; ++c) {
    mass += w.values(row, c);
    first += w.p.at(c) * w.values(row, c);
  }
  r.wigner_mean = first / mass;
  r.deviation = std::abs(r.wigner_mean - r.local_momentum);
  return r;
}

// ------------------------------------------------------- Leggett-Garg

void LGScenario::validate() const {
  require(q.dim() == hamiltonian.dim() && q.dim() == rho0.dim(), ErrorCode::DimMismatch,
          "Q, Hamiltonian and state differ in dimension");
  const auto d = q.dim();
  const double defect = max_abs(ComplexMatrix(q.matrix() * q.matrix() - ComplexMatrix::Identity(d, d)));
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "Q is not dichotomic (|Q^2 - I| = " << defect << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  require(std::isfinite(times[0]) && times[0] >= 0 && times[0] <= times[1] && times[1] <= times[2] &&
              std::isfinite(times[2]),
          ErrorCode::InvalidArgument, "times must be finite, nonnegative and ascending");
}

SubsequentScenario LGScenario::kqpd_scenario() const {
  validate();
  SubsequentScenario s{rho0, {}, {}};
  double prev = 0.0;
  for (double t : times) {
    s.steps.push_back(Step{propagator(hamiltonian, t - prev), q});
    prev = t;
  }
  if (times[0] < times[1] && times[1] < times[2]) s.times.assign(times.begin(), times.end());
  return s;
}

double lg_correlator(const LGScenario& s, int i, int j, CorrelatorRoute route, const EngineOptions& opt) {
  s.validate();
  require(1 <= i && i <= 3 && 1 <= j && j <= 3 && i != j, ErrorCode::InvalidArgument,
          "correlator indices must be distinct and in 1..3");
  if (i > j) std::swap(i, j);
  const double ti = s.times[i - 1], tj = s.times[j - 1];
  switch (route) {
    case CorrelatorRoute::Anticommutator: {
      const ComplexMatrix qi = heisenberg(s.q, propagator(s.hamiltonian, ti));
      const ComplexMatrix qj = heisenberg(s.q, propagator(s.hamiltonian, tj));
      return 0.5 * ((qi * qj + qj * qi) * s.rho0.matrix()).trace().real();
    }
    case CorrelatorRoute::ThreeTimeMoment: {
      const QuasiDistribution q = kqpd_subsequent(s.kqpd_scenario(), opt);
      std::vector<int> k(3, 0);
      k[i - 1] = k[j - 1] = 1;
      return moment(q, k);
    }
    case CorrelatorRoute::Pairwise: {
      SubsequentScenario p{s.rho0, {}, {}};
      p.steps.push_back(Step{propagator(s.hamiltonian, ti), s.q});
      p.steps.push_back(Step{propagator(s.hamiltonian, tj - ti), s.q});
      return moment(kqpd_subsequent(p, opt), {1, 1});
    }
  }
  return 0.0;
}

LGReport lg_test(const LGScenario& s, const EngineOptions& opt) {
  s.validate();
  LGReport r;
  r.c21 = lg_correlator(s, 1, 2);
  r.c32 = lg_correlator(s, 2, 3);
  r.c31 = lg_correlator(s, 1, 3);
  r.k = r.c21 + r.c32 - r.c31;
  r.violated = r.k > 1.0 + 1e-10;
  r.kqpd = kqpd_subsequent(s.kqpd_scenario(), opt);
  r.min_weight = r.kqpd.min_weight();
  for (Eigen::Index n = 0; n < r.kqpd.size(); ++n) {
    bool any_zero = false;
    for (Eigen::Index l = 0; l < r.kqpd.dims(); ++l) any_zero = any_zero || std::abs(r.kqpd.support()(n, l)) < 1e-9;
    (any_zero ? r.zero_argument_mass : r.diagonal_mass) += r.kqpd.weight(n);
  }
  r.identities_hold = std::abs(r.diagonal_mass - 1.0) <= 1e-10 && std::abs(r.zero_argument_mass) <= 1e-10;
  r.implication_holds = !r.violated || r.min_weight < -1e-12;

  const std::array<std::pair<int, int>, 3> pairs{{{1, 2}, {2, 3}, {1, 3}}};
  const std::array<double, 3> direct{r.c21, r.c32, r.c31};
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    std::vector<int> k(3, 0);
    k[pairs[n].first - 1] = k[pairs[n].second - 1] = 1;
    const double three = moment(r.kqpd, k);
    const double two = lg_correlator(s, pairs[n].first, pairs[n].second, CorrelatorRoute::Pairwise, opt);
    r.route_deviation = std::max({r.route_deviation, std::abs(three - direct[n]), std::abs(two - direct[n])});
  }
  return r;
}

}  // namespace kqpd
