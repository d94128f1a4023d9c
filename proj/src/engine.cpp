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

#include "kqpd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>

#include "kqpd/errors.hpp"
#include "kqpd/parallel.hpp"

namespace kqpd {

bool SubsequentScenario::is_unitary() const {
  return std::all_of(steps.begin(), steps.end(), [](const Step& st) {
    if (std::holds_alternative<UnitaryPropagator>(st.evolution)) return true;
    return std::get<KrausChannel>(st.evolution).is_unitary();
  });
}

void SubsequentScenario::validate() const {
  require(!steps.empty(), ErrorCode::InvalidArgument, "scenario needs at least one probe");
  require(dim() > 0, ErrorCode::InvalidArgument, "scenario has no initial state");
  for (std::size_t l = 0; l < steps.size(); ++l) {
    const auto ed = std::visit([](const auto& e) { return e.dim(); }, steps[l].evolution);
    if (ed != dim() || steps[l].observable.dim() != dim()) {
      std::ostringstream os;
      os << "step " << l << " has dimension " << ed << "/" << steps[l].observable.dim() << ", state has " << dim();
      fail(ErrorCode::DimMismatch, os.str());
    }
  }
  if (!times.empty()) {
    require(times.size() == steps.size(), ErrorCode::InvalidArgument, "need one probe time per step");
    for (std::size_t l = 1; l < times.size(); ++l)
      require(times[l] > times[l - 1], ErrorCode::InvalidArgument, "probe times must be strictly ascending");
  }
}

ComplexMatrix evolve_operator(const Evolution& e, const ComplexMatrix& x) {
  if (const auto* u = std::get_if<UnitaryPropagator>(&e)) {
    require(x.rows() == u->dim(), ErrorCode::DimMismatch, "operator and propagator dimensions differ");
    return u->matrix() * x * u->matrix().adjoint();
  }
  return apply_kraus(std::get<KrausChannel>(e), x);
}

DensityMatrix evolve(const Evolution& e, const DensityMatrix& rho, const Tolerances& tol) {
  Tolerances relaxed = tol;
  relaxed.hermitian = std::max(tol.hermitian, 1e-10);
  return DensityMatrix::from_matrix(evolve_operator(e, rho.matrix()), relaxed);
}

namespace {

ComplexMatrix phase_operator(const HermitianObservable& a, double c) {
  ComplexVector ph(a.dim());
  for (Eigen::Index k = 0; k < a.dim(); ++k) ph(k) = std::polar(1.0, -c * a.eigenvalues()(k));
  return a.eigenvectors() * ph.asDiagonal() * a.eigenvectors().adjoint();
}

struct Accum {
  std::complex<double> weight;
  std::complex<double> interference;
};

using PartialMap = std::map<std::uint64_t, Accum>;

// Everything the depth-first walk needs, expressed in the eigenbases of the
// probed observables.
struct Prepared {
  int n = 0;
  int d = 0;
  ComplexMatrix initial;                          // rho(tau_1) in basis 0
  std::vector<std::vector<ComplexMatrix>> hops;   // hops[l]: Kraus ops basis l-1 -> l
  std::vector<ComplexMatrix> factors;
  std::vector<std::vector<int>> level;            // level_of per probe
  std::vector<ValueBinner> bins;
  std::vector<Eigen::MatrixXi> mid_bin;
  std::vector<std::uint64_t> stride;
  double prune = 0;

  std::complex<double> hop(int l, int a1, int b1, int a0, int b0) const {
    std::complex<double> c = 0;
    for (const auto& k : hops[static_cast<std::size_t>(l)]) c += k(a1, a0) * std::conj(k(b1, b0));
    return c;
  }

  std::complex<double> factor(int l, int a, int b) const {
    const auto& f = factors[static_cast<std::size_t>(l)];
    return f.size() == 0 ? std::complex<double>(1.0) : f(a, b);
  }

  bool differs(int l, int a, int b) const {
    const auto& lv = level[static_cast<std::size_t>(l)];
    return lv[static_cast<std::size_t>(a)] != lv[static_cast<std::size_t>(b)];
  }

  std::uint64_t key_step(int l, int a, int b) const {
    return static_cast<std::uint64_t>(mid_bin[static_cast<std::size_t>(l)](a, b)) * stride[static_cast<std::size_t>(l)];
  }
};

Prepared prepare(const SubsequentScenario& s, const PairFactors& factors, const Tolerances& tol) {
  s.validate();
  Prepared p;
  p.n = static_cast<int>(s.size());
  p.d = static_cast<int>(s.dim());
  p.prune = tol.prune;

  const double pairs = std::pow(static_cast<double>(p.d), 2.0 * p.n);
  if (pairs > static_cast<double>(tol.pair_budget)) {
    std::ostringstream os;
    os << "d^(2N) = " << pairs << " trajectory pairs exceeds the budget of " << tol.pair_budget;
    fail(ErrorCode::ScenarioTooLarge, os.str());
  }
  require(factors.empty() || factors.size() == s.size(), ErrorCode::DimMismatch, "need one pair factor per probe");

  const auto& obs0 = s.steps.front().observable;
  const ComplexMatrix rho1 = evolve_operator(s.steps.front().evolution, s.rho0.matrix());
  p.initial = obs0.eigenvectors().adjoint() * rho1 * obs0.eigenvectors();

  p.hops.resize(s.size());
  for (std::size_t l = 1; l < s.size(); ++l) {
    const auto& prev = s.steps[l - 1].observable.eigenvectors();
    const auto& next = s.steps[l].observable.eigenvectors();
    if (const auto* u = std::get_if<UnitaryPropagator>(&s.steps[l].evolution)) {
      p.hops[l].push_back(next.adjoint() * u->matrix() * prev);
    } else {
      for (const auto& k : std::get<KrausChannel>(s.steps[l].evolution).operators())
        p.hops[l].push_back(next.adjoint() * k * prev);
    }
  }

  p.factors.resize(s.size());
  for (std::size_t l = 0; l < factors.size(); ++l) {
    if (factors[l].size() == 0) continue;
    require(factors[l].rows() == p.d && factors[l].cols() == p.d, ErrorCode::DimMismatch, "pair factor has wrong shape");
    p.factors[l] = factors[l];
  }

  double key_space = 1.0;
  std::uint64_t stride = 1;
  for (std::size_t l = 0; l < s.size(); ++l) {
    const auto& obs = s.steps[l].observable;
    p.level.emplace_back();
    for (int k = 0; k < p.d; ++k) p.level.back().push_back(obs.level_of(k));
    // Midpoints are taken between level means so degenerate eigenvalues
    // land on one support point however the solver rounded them.
    const auto& lv = obs.levels();
    Eigen::VectorXd ev(p.d);
    for (int k = 0; k < p.d; ++k) ev(k) = lv[static_cast<std::size_t>(obs.level_of(k))];
    std::vector<double> mids;
    for (int a = 0; a < p.d; ++a)
      for (int b = 0; b < p.d; ++b) mids.push_back(0.5 * (ev(a) + ev(b)));
    p.bins.emplace_back(mids, tol.binning, lv.back() - lv.front());
    Eigen::MatrixXi mb(p.d, p.d);
    for (int a = 0; a < p.d; ++a)
      for (int b = 0; b < p.d; ++b) mb(a, b) = p.bins.back().bin_of(0.5 * (ev(a) + ev(b)));
    p.mid_bin.push_back(std::move(mb));
    p.stride.push_back(stride);
    key_space *= static_cast<double>(p.bins.back().bin_count());
    require(key_space < 9.0e18, ErrorCode::ScenarioTooLarge, "support key space exceeds 64 bits");
    stride *= static_cast<std::uint64_t>(p.bins.back().bin_count());
  }
  return p;
}

// Walks every continuation of the pair (a, b) selected at probe l, whose
// partial amplitude (including all factors up to l) is `amp`.
template <typename Leaf>
void descend(const Prepared& p, int l, int a, int b, std::complex<double> amp, std::uint64_t key, bool interfering,
             std::vector<int>& left, std::vector<int>& right, Leaf& leaf) {
  left[static_cast<std::size_t>(l)] = a;
  right[static_cast<std::size_t>(l)] = b;
  if (l == p.n - 1) {
    leaf(left, right, amp, key, interfering);
    return;
  }
  const int next = l + 1;
  const bool last = next == p.n - 1;
  for (int a1 = 0; a1 < p.d; ++a1) {
    for (int b1 = last ? a1 : 0; b1 < (last ? a1 + 1 : p.d); ++b1) {
      const std::complex<double> c = amp * p.hop(next, a1, b1, a, b) * p.factor(next, a1, b1);
      if (std::abs(c) < p.prune) continue;
      descend(p, next, a1, b1, c, key + p.key_step(next, a1, b1), interfering || p.differs(next, a1, b1), left, right,
              leaf);
    }
  }
}

// All leaves whose first left index is `a0`.
template <typename Leaf>
void walk_first_index(const Prepared& p, int a0, Leaf& leaf) {
  std::vector<int> left(static_cast<std::size_t>(p.n)), right(static_cast<std::size_t>(p.n));
  const bool last = p.n == 1;
  for (int b0 = last ? a0 : 0; b0 < (last ? a0 + 1 : p.d); ++b0) {
    const std::complex<double> c = p.initial(a0, b0) * p.factor(0, a0, b0);
    if (std::abs(c) < p.prune) continue;
    descend(p, 0, a0, b0, c, p.key_step(0, a0, b0), p.differs(0, a0, b0), left, right, leaf);
  }
}

}  // namespace

QuasiDistribution trajectory_sum(const SubsequentScenario& s, const PairFactors& factors, const EngineOptions& opt) {
  const Prepared p = prepare(s, factors, opt.tol);

  // One partial map per first left index, filled independently and merged
  // in index order, so the floating-point summation order never depends on
  // the worker count.
  std::vector<PartialMap> partial(static_cast<std::size_t>(p.d));
  parallel_for(p.d, opt.threads, [&](int a0) {
    PartialMap& out = partial[static_cast<std::size_t>(a0)];
    auto leaf = [&out](const std::vector<int>&, const std::vector<int>&, std::complex<double> amp, std::uint64_t key,
                       bool interfering) {
      Accum& acc = out[key];
      acc.weight += amp;
      if (interfering) acc.interference += amp;
    };
    walk_first_index(p, a0, leaf);
  });

  PartialMap total;
  for (const auto& part : partial) {
    for (const auto& [key, acc] : part) {
      Accum& t = total[key];
      t.weight += acc.weight;
      t.interference += acc.interference;
    }
  }

  const auto rows = static_cast<Eigen::Index>(total.size());
  Eigen::MatrixXd support(rows, p.n);
  Eigen::VectorXd weights(rows), interference(rows);
  double max_imag = 0.0;
  Eigen::Index r = 0;
  for (const auto& [key, acc] : total) {
    for (int l = 0; l < p.n; ++l) {
      const auto& bins = p.bins[static_cast<std::size_t>(l)];
      const auto bin = (key / p.stride[static_cast<std::size_t>(l)]) % bins.bin_count();
      support(r, l) = bins.centers()[bin];
    }
    weights(r) = acc.weight.real();
    interference(r) = acc.interference.real();
    max_imag = std::max(max_imag, std::abs(acc.weight.imag()));
    ++r;
  }
  if (max_imag > opt.tol.imag_residual) {
    std::ostringstream os;
    os << "residual imaginary weight " << max_imag << " exceeds " << opt.tol.imag_residual;
    fail(ErrorCode::ToleranceExceeded, os.str());
  }
  QuasiDistribution q(std::move(support), std::move(weights), max_imag, std::move(interference));
  if (std::abs(q.total_weight() - 1.0) > opt.tol.normalization) {
    std::ostringstream os;
    os << "total weight " << q.total_weight() << " differs from 1";
    fail(ErrorCode::ToleranceExceeded, os.str());
  }
  return q;
}

QuasiDistribution kqpd_subsequent(const SubsequentScenario& s, const EngineOptions& opt) {
  require(s.is_unitary(), ErrorCode::InvalidArgument, "scenario contains non-unitary channels");
  return trajectory_sum(s, {}, opt);
}

PairFactors backaction_factors(const SubsequentScenario& s, const BackActionVector& g) {
  require(g.gammas.size() == s.size(), ErrorCode::DimMismatch, "need one back-action parameter per probe");
  PairFactors f;
  for (std::size_t l = 0; l < s.size(); ++l) {
    const auto& ev = s.steps[l].observable.eigenvalues();
    ComplexMatrix m(ev.size(), ev.size());
    for (Eigen::Index a = 0; a < ev.size(); ++a)
      for (Eigen::Index b = 0; b < ev.size(); ++b) m(a, b) = std::polar(1.0, -g.gammas[l] * (ev(a) - ev(b)));
    f.push_back(std::move(m));
  }
  return f;
}

QuasiDistribution kqpd_with_backaction(const SubsequentScenario& s, const BackActionVector& g,
                                       const EngineOptions& opt) {
  require(s.is_unitary(), ErrorCode::InvalidArgument, "scenario contains non-unitary channels");
  return trajectory_sum(s, backaction_factors(s, g), opt);
}

QuasiDistribution kqpd_subsequent_channels(const SubsequentScenario& s, const EngineOptions& opt) {
  return trajectory_sum(s, {}, opt);
}

std::complex<double> characteristic_function(const SubsequentScenario& s, const Eigen::VectorXd& lambdas,
                                             const BackActionVector& g) {
  s.validate();
  require(static_cast<std::size_t>(lambdas.size()) == s.size(), ErrorCode::DimMismatch,
          "need one counting field per probe");
  require(g.gammas.empty() || g.gammas.size() == s.size(), ErrorCode::DimMismatch,
          "need one back-action parameter per probe");
  ComplexMatrix x = s.rho0.matrix();
  for (std::size_t l = 0; l < s.size(); ++l) {
    x = evolve_operator(s.steps[l].evolution, x);
    const double gamma = g.gammas.empty() ? 0.0 : g.gammas[l];
    const auto& a = s.steps[l].observable;
    x = phase_operator(a, lambdas(static_cast<Eigen::Index>(l)) / 2 + gamma) * x *
        phase_operator(a, lambdas(static_cast<Eigen::Index>(l)) / 2 - gamma);
  }
  return x.trace();
}

void for_each_trajectory_pair(const SubsequentScenario& s, const std::function<void(const TrajectoryPair&)>& visit,
                              const EngineOptions& opt) {
  const Prepared p = prepare(s, {}, opt.tol);
  TrajectoryPair pair;
  auto leaf = [&](const std::vector<int>& left, const std::vector<int>& right, std::complex<double> amp, std::uint64_t,
                  bool) {
    pair.left = left;
    pair.right = right;
    pair.amplitude = amp;
    visit(pair);
  };
  for (int a0 = 0; a0 < p.d; ++a0) walk_first_index(p, a0, leaf);
}

QuasiDistribution born_distribution(const HermitianObservable& a, const DensityMatrix& rho, double rel_tol) {
  require(a.dim() == rho.dim(), ErrorCode::DimMismatch, "observable and state dimensions differ");
  Eigen::MatrixXd points(a.dim(), 1);
  Eigen::VectorXcd w(a.dim());
  for (Eigen::Index k = 0; k < a.dim(); ++k) {
    points(k, 0) = a.levels()[static_cast<std::size_t>(a.level_of(k))];
    w(k) = a.eigenvectors().col(k).dot(rho.matrix() * a.eigenvectors().col(k));
  }
  return bin_points(points, w, rel_tol);
}

}  // namespace kqpd
