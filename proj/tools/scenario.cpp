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

#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace kqpd::cli {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorCode::InvalidArgument, where + ": " + what);
}

// Runs f, prefixing any library error with the scenario location.
template <typename F>
auto at(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.detail().rfind(where, 0) == 0) throw;
    throw Error(e.code(), where + ": " + e.detail());
  }
}

double number(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return parse_real(v.get<std::string>());
    } catch (const Error&) {
      bad(where, "cannot parse number '" + v.get<std::string>() + "'");
    }
  }
  bad(where, "expected a number");
}

std::complex<double> entry(const json& v, const std::string& where) {
  if (v.is_array()) {
    if (v.size() != 2) bad(where, "complex entries are [re, im] pairs");
    return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
  }
  return {number(v, where), 0.0};
}

const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) bad(where, "missing field '" + key + "'");
  return obj.at(key);
}

double real_field(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return number(obj.at(key), where + "." + key);
}

int int_field(const json& obj, const std::string& key, const std::string& where, int fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
  return v.get<int>();
}

ComplexMatrix builtin(const std::string& name, Eigen::Index dim) {
  if (name == "pauli_x" || name == "pauli_y" || name == "pauli_z") {
    if (dim != 2) fail(ErrorCode::DimMismatch, name + " needs dim = 2");
    return name == "pauli_x" ? pauli_x<>() : name == "pauli_y" ? pauli_y<>() : pauli_z<>();
  }
  if (name.rfind("identity_", 0) == 0) {
    const auto d = std::stol(name.substr(9));
    if (d != dim) fail(ErrorCode::DimMismatch, name + " does not match dim = " + std::to_string(dim));
    return ComplexMatrix::Identity(dim, dim);
  }
  return {};
}

}  // namespace

double parse_real(const std::string& text) {
  // Products and quotients of numbers and "pi", evaluated left to right.
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) fail(ErrorCode::InvalidArgument, "empty number");
  double sign = 1.0;
  if (s[0] == '-' || s[0] == '+') {
    if (s[0] == '-') sign = -1.0;
    s.erase(0, 1);
  }
  double value = 1.0;
  char op = '*';
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t end = pos;
    // Exponent signs belong to the number, so only split at * and /.
    while (end < s.size() && s[end] != '*' && s[end] != '/') ++end;
    const std::string tok = s.substr(pos, end - pos);
    double f;
    if (tok == "pi") {
      f = std::numbers::pi;
    } else if (!tok.empty() && tok.back() != 'i' && tok.find("pi") != std::string::npos) {
      fail(ErrorCode::InvalidArgument, "cannot parse '" + text + "'");
    } else if (tok.size() > 2 && tok.substr(tok.size() - 2) == "pi") {
      f = std::stod(tok.substr(0, tok.size() - 2)) * std::numbers::pi;
    } else {
      std::size_t used = 0;
      try {
        f = std::stod(tok, &used);
      } catch (const std::exception&) {
        fail(ErrorCode::InvalidArgument, "cannot parse '" + text + "'");
      }
      if (used != tok.size()) fail(ErrorCode::InvalidArgument, "cannot parse '" + text + "'");
    }
    value = op == '*' ? value * f : value / f;
    if (end >= s.size()) break;
    op = s[end];
    pos = end + 1;
  }
  return sign * value;
}

FCSOptions Scenario::fcs_options() const {
  FCSOptions o;
  o.engine = engine();
  o.trajectory_budget = budgets.trajectory_budget;
  o.max_support = budgets.max_support;
  o.aliasing_tolerance = budgets.aliasing_tolerance;
  return o;
}

const json& Scenario::block(const std::string& name) const { return field(raw, name, "scenario"); }

ComplexMatrix Scenario::matrix(const json& v, const std::string& where) const {
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (auto it = matrices.find(name); it != matrices.end()) return it->second;
    ComplexMatrix m = at(where, [&] { return builtin(name, dim); });
    if (m.size() == 0) bad(where, "unknown matrix '" + name + "'");
    return m;
  }
  if (!v.is_array() || v.size() != static_cast<std::size_t>(dim)) {
    bad(where, "expected a matrix name or a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
  }
  ComplexMatrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    const std::string rw = where + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != static_cast<std::size_t>(dim)) bad(rw, "row has the wrong length");
    for (Eigen::Index j = 0; j < dim; ++j)
      m(i, j) = entry(row[static_cast<std::size_t>(j)], rw + "[" + std::to_string(j) + "]");
  }
  return m;
}

ComplexVector Scenario::vector(const json& v, const std::string& where) const {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(dim))
    bad(where, "expected a vector of length " + std::to_string(dim));
  ComplexVector out(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    out(i) = entry(v[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
  return out;
}

HermitianObservable Scenario::observable(const json& v, const std::string& where) const {
  const ComplexMatrix m = matrix(v, where);
  const std::string label = v.is_string() ? where + " ('" + v.get<std::string>() + "')" : where;
  return at(label, [&] { return HermitianObservable::from_matrix(m, tol); });
}

DensityMatrix Scenario::state() const {
  const json& st = field(raw, "state", "scenario");
  const std::string where = "state";
  if (st.is_string() && st.get<std::string>() == "maximally_mixed") return DensityMatrix::maximally_mixed(dim);
  if (!st.is_object()) bad(where, "expected an object or \"maximally_mixed\"");
  if (st.contains("pure")) {
    const ComplexVector psi = vector(st.at("pure"), where + ".pure");
    return at(where + ".pure", [&] { return DensityMatrix::pure(psi); });
  }
  if (st.contains("matrix")) {
    const ComplexMatrix m = matrix(st.at("matrix"), where + ".matrix");
    return at(where + ".matrix", [&] { return DensityMatrix::from_matrix(m, tol); });
  }
  if (st.contains("bloch")) {
    if (dim != 2) bad(where + ".bloch", "Bloch states need dim = 2");
    const json& b = st.at("bloch");
    if (!b.is_array() || b.size() != 3) bad(where + ".bloch", "expected [nx, ny, nz]");
    const double nx = number(b[0], where + ".bloch[0]"), ny = number(b[1], where + ".bloch[1]"),
                 nz = number(b[2], where + ".bloch[2]");
    // Not normalized: |n| < 1 is a mixed state, |n| > 1 is rejected.
    const ComplexMatrix m =
        0.5 * (ComplexMatrix::Identity(2, 2) + nx * pauli_x<>() + ny * pauli_y<>() + nz * pauli_z<>());
    return at(where + ".bloch", [&] { return DensityMatrix::from_matrix(m, tol); });
  }
  bad(where, "expected one of pure, matrix, bloch or \"maximally_mixed\"");
}

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"kqpd", "measure", "wigner", "weak-value", "leggett-garg", "work", "fcs"};
  return names;
}

void apply_override(Scenario& s, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const double v = parse_real(assignment.substr(eq + 1));
  auto& t = s.tol;
  std::map<std::string, double*> reals{{"hermitian", &t.hermitian},
                                       {"unitary", &t.unitary},
                                       {"trace", &t.trace},
                                       {"positivity", &t.positivity},
                                       {"eigen_residual", &t.eigen_residual},
                                       {"binning", &t.binning},
                                       {"prune", &t.prune},
                                       {"imag_residual", &t.imag_residual},
                                       {"normalization", &t.normalization},
                                       {"overlap_floor", &t.overlap_floor},
                                       {"aliasing_tolerance", &s.budgets.aliasing_tolerance}};
  if (auto it = reals.find(key); it != reals.end()) {
    if (!(v >= 0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "override '" + key + "' must be >= 0");
    *it->second = v;
    return;
  }
  if (!(v >= 0) || v != std::floor(v) || v > 1.8e19)
    fail(ErrorCode::InvalidArgument, "override '" + key + "' must be a nonnegative integer");
  if (key == "pair_budget") t.pair_budget = static_cast<std::uint64_t>(v);
  else if (key == "trajectory_budget") s.budgets.trajectory_budget = static_cast<std::uint64_t>(v);
  else if (key == "max_support") s.budgets.max_support = static_cast<std::size_t>(v);
  else if (key == "seed") s.seed = static_cast<std::uint64_t>(v);
  else if (key == "threads") s.threads = static_cast<unsigned>(v);
  else fail(ErrorCode::InvalidArgument, "unknown override key '" + key + "'");
}

Scenario parse_scenario(const json& doc) {
  Scenario s;
  s.raw = doc;
  if (!doc.is_object()) bad("scenario", "top level must be an object");
  const json& ver = field(doc, "schema_version", "scenario");
  if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion)
    bad("schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  const json& task = field(doc, "task", "scenario");
  if (!task.is_string()) bad("task", "expected a string");
  s.task = task.get<std::string>();
  bool known = false;
  for (const auto& n : task_names()) known = known || n == s.task;
  if (!known) bad("task", "unknown task '" + s.task + "'");

  if (doc.contains("system")) {
    const json& sys = doc.at("system");
    s.dim = int_field(sys, "dim", "system", 0);
    if (s.dim < 1) bad("system.dim", "dimension must be a positive integer");
    if (sys.contains("matrices")) {
      const json& ms = sys.at("matrices");
      if (!ms.is_object()) bad("system.matrices", "expected an object of named matrices");
      for (auto it = ms.begin(); it != ms.end(); ++it)
        s.matrices[it.key()] = s.matrix(it.value(), "system.matrices." + it.key());
    }
  } else if (s.task != "wigner") {
    bad("scenario", "missing field 'system'");
  }

  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    if (!t.is_object()) bad("tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      std::ostringstream os;
      os.precision(17);
      os << number(it.value(), "tolerances." + it.key());
      at("tolerances." + it.key(), [&] { apply_override(s, it.key() + "=" + os.str()); });
    }
  }
  if (doc.contains("budgets")) {
    const json& b = doc.at("budgets");
    if (!b.is_object()) bad("budgets", "expected an object");
    for (auto it = b.begin(); it != b.end(); ++it) {
      std::ostringstream os;
      os.precision(17);
      os << number(it.value(), "budgets." + it.key());
      at("budgets." + it.key(), [&] { apply_override(s, it.key() + "=" + os.str()); });
    }
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) bad("seed", "expected a nonnegative integer");
    s.seed = doc.at("seed").get<std::uint64_t>();
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot read scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
  return parse_scenario(doc);
}

SubsequentScenario build_subsequent(const Scenario& s, const json& steps, const std::string& where) {
  if (!steps.is_array() || steps.empty()) bad(where, "expected a non-empty array of steps");
  SubsequentScenario out{s.state(), {}, {}};
  bool timed = true;
  for (std::size_t l = 0; l < steps.size(); ++l) {
    const json& st = steps[l];
    const std::string w = where + "[" + std::to_string(l) + "]";
    if (!st.is_object()) bad(w, "expected an object");
    Evolution evo = UnitaryPropagator::identity(s.dim);
    if (st.contains("hamiltonian")) {
      const HermitianObservable h = s.observable(st.at("hamiltonian"), w + ".hamiltonian");
      const double dt = number(field(st, "dt", w), w + ".dt");
      evo = at(w, [&] { return propagator(h, dt); });
    } else if (st.contains("unitary")) {
      const ComplexMatrix u = s.matrix(st.at("unitary"), w + ".unitary");
      evo = at(w + ".unitary", [&] { return UnitaryPropagator::from_matrix(u, "U", s.tol); });
    } else if (st.contains("kraus")) {
      const json& ks = st.at("kraus");
      if (!ks.is_array() || ks.empty()) bad(w + ".kraus", "expected a non-empty array of matrices");
      std::vector<ComplexMatrix> ops;
      for (std::size_t k = 0; k < ks.size(); ++k)
        ops.push_back(s.matrix(ks[k], w + ".kraus[" + std::to_string(k) + "]"));
      evo = at(w + ".kraus", [&] { return KrausChannel::from_operators(ops, s.tol); });
    }
    out.steps.push_back(Step{std::move(evo), s.observable(field(st, "observable", w), w + ".observable")});
    if (st.contains("time")) out.times.push_back(number(st.at("time"), w + ".time"));
    else timed = false;
  }
  if (!timed) out.times.clear();
  at(where, [&] { out.validate(); });
  return out;
}

BackActionVector build_backaction(const Scenario& s) {
  BackActionVector g;
  const json& b = s.block("kqpd");
  if (!b.contains("backaction")) return g;
  const json& v = b.at("backaction");
  if (!v.is_array()) bad("kqpd.backaction", "expected an array of gammas");
  for (std::size_t i = 0; i < v.size(); ++i)
    g.gammas.push_back(number(v[i], "kqpd.backaction[" + std::to_string(i) + "]"));
  return g;
}

GaussianDetector build_detector(const json& v, const std::string& where) {
  if (!v.is_object()) bad(where, "expected {sigma_imp, sigma_ba, chi}");
  const double chi = real_field(v, "chi", where, 1.0);
  const double imp = number(field(v, "sigma_imp", where), where + ".sigma_imp");
  if (v.contains("sigma_ba")) {
    const double ba = number(v.at("sigma_ba"), where + ".sigma_ba");
    return at(where, [&] { return GaussianDetector::make(imp, ba, chi); });
  }
  return at(where, [&] { return GaussianDetector::minimal(imp, chi); });
}

std::vector<GaussianDetector> build_detectors(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of detectors");
  std::vector<GaussianDetector> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(build_detector(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Wavefunction1D build_wavefunction(const Scenario& s) {
  const json& b = s.block("wigner");
  Axis ax = Wavefunction1D::default_axis();
  if (b.contains("grid")) {
    const json& g = b.at("grid");
    ax.origin = real_field(g, "x0", "wigner.grid", ax.origin);
    ax.spacing = real_field(g, "dx", "wigner.grid", ax.spacing);
    ax.count = int_field(g, "count", "wigner.grid", static_cast<int>(ax.count));
    if (!(ax.spacing > 0) || ax.count < 4) bad("wigner.grid", "need dx > 0 and count >= 4");
  }
  const json& st = field(b, "state", "wigner");
  const std::string w = "wigner.state";
  const json& kind = field(st, "kind", w);
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "gaussian") {
    return at(w, [&] {
      return Wavefunction1D::gaussian(ax, real_field(st, "center", w, 0.0), real_field(st, "width", w, 1.0),
                                      real_field(st, "p0", w, 0.0));
    });
  }
  if (k == "cat") {
    const std::complex<double> phase = st.contains("phase") ? entry(st.at("phase"), w + ".phase") : -1.0;
    const double a = number(field(st, "a", w), w + ".a");
    return at(w, [&] { return Wavefunction1D::cat(ax, a, phase); });
  }
  if (k == "samples") {
    const json& amps = field(st, "amplitudes", w);
    if (!amps.is_array() || amps.size() != static_cast<std::size_t>(ax.count))
      bad(w + ".amplitudes", "expected " + std::to_string(ax.count) + " samples");
    Eigen::VectorXcd v(ax.count);
    for (Eigen::Index i = 0; i < ax.count; ++i)
      v(i) = entry(amps[static_cast<std::size_t>(i)], w + ".amplitudes[" + std::to_string(i) + "]");
    return at(w, [&] { return Wavefunction1D::from_samples(ax, v); });
  }
  bad(w + ".kind", "expected gaussian, cat or samples");
}

WeakValueScenario build_weak_value(const Scenario& s) {
  const json& b = s.block("weak-value");
  const HermitianObservable a = s.observable(field(b, "observable", "weak-value"), "weak-value.observable");
  const ComplexVector i = s.vector(field(b, "initial", "weak-value"), "weak-value.initial");
  const ComplexVector f = s.vector(field(b, "final", "weak-value"), "weak-value.final");
  return at("weak-value", [&] { return WeakValueScenario::make(a, i, f, s.tol.overlap_floor); });
}

LGScenario build_lg(const Scenario& s) {
  const json& b = s.block("leggett-garg");
  LGScenario lg;
  lg.q = s.observable(field(b, "q", "leggett-garg"), "leggett-garg.q");
  lg.hamiltonian = s.observable(field(b, "hamiltonian", "leggett-garg"), "leggett-garg.hamiltonian");
  lg.rho0 = s.state();
  const json& t = field(b, "times", "leggett-garg");
  if (!t.is_array() || t.size() != 3) bad("leggett-garg.times", "expected [t1, t2, t3]");
  for (std::size_t i = 0; i < 3; ++i) lg.times[i] = number(t[i], "leggett-garg.times[" + std::to_string(i) + "]");
  at("leggett-garg", [&] { lg.validate(); });
  return lg;
}

WorkScenario build_work(const Scenario& s) {
  const json& b = s.block("work");
  WorkScenario w;
  w.hamiltonian = s.observable(field(b, "hamiltonian", "work"), "work.hamiltonian");
  w.work_part = s.observable(field(b, "work_part", "work"), "work.work_part");
  w.rho0 = s.state();
  w.tau = number(field(b, "tau", "work"), "work.tau");
  at("work", [&] { w.validate(); });
  return w;
}

FCSScenario build_fcs(const Scenario& s) {
  const json& b = s.block("fcs");
  FCSScenario f;
  f.counted = s.observable(field(b, "counted", "fcs"), "fcs.counted");
  f.hamiltonian = s.observable(field(b, "hamiltonian", "fcs"), "fcs.hamiltonian");
  f.rho0 = s.state();
  f.duration = real_field(b, "duration", "fcs", f.duration);
  f.slices = int_field(b, "slices", "fcs", f.slices);
  f.gamma = real_field(b, "gamma", "fcs", f.gamma);
  at("fcs", [&] { f.validate(); });
  return f;
}

void validate_scenario(const Scenario& s) {
  const std::string& t = s.task;
  if (t == "kqpd" || t == "measure") {
    const SubsequentScenario sc = build_subsequent(s, field(s.block("kqpd"), "steps", "kqpd"), "kqpd.steps");
    const BackActionVector g = build_backaction(s);
    if (!g.gammas.empty() && g.gammas.size() != sc.size()) bad("kqpd.backaction", "need one gamma per step");
    if (t == "measure") {
      const auto dets = build_detectors(field(s.block("measure"), "detectors", "measure"), "measure.detectors");
      if (dets.size() != sc.size() && dets.size() + 1 != sc.size())
        bad("measure.detectors", "need one detector per step, or one fewer for a projective last step");
    }
  } else if (t == "wigner") {
    build_wavefunction(s);
  } else if (t == "weak-value") {
    build_weak_value(s);
  } else if (t == "leggett-garg") {
    build_lg(s);
  } else if (t == "work") {
    build_work(s);
  } else if (t == "fcs") {
    build_fcs(s);
  }
}

}  // namespace kqpd::cli
