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

#include <gtest/gtest.h>

#include <numbers>

#include "kqpd/applications.hpp"
#include "oracles.hpp"

using namespace kqpd;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::NumericalFailure;
}

WorkScenario random_work(int d, std::mt19937_64& rng) {
  WorkScenario s;
  s.hamiltonian = HermitianObservable::from_matrix(oracle::random_hermitian(d, rng));
  s.work_part = HermitianObservable::from_matrix(oracle::random_hermitian(d, rng));
  s.rho0 = DensityMatrix::from_matrix(oracle::random_density(d, rng));
  s.tau = 0.8;
  return s;
}

// Moments of w = a2 - a1 from the brute-force projector oracle.
double oracle_work_moment(const WorkScenario& s, int k) {
  const auto d = s.rho0.dim();
  const ComplexMatrix u = oracle::evolution(s.hamiltonian.matrix(), s.tau);
  const auto t = oracle::projector_kqpd(s.rho0.matrix(), {ComplexMatrix::Identity(d, d), u},
                                        {s.work_part.matrix(), s.work_part.matrix()});
  double m = 0.0;
  for (const auto& [p, w] : t) m += std::pow(p[1] - p[0], k) * w;
  return m;
}

LGScenario precession(double theta) {
  LGScenario s;
  s.q = HermitianObservable::from_matrix(pauli_z<>());
  s.hamiltonian = HermitianObservable::from_matrix(0.5 * pauli_x<>());
  s.rho0 = DensityMatrix::maximally_mixed(2);
  s.times = {0.0, theta, 2.0 * theta};
  return s;
}

ComplexVector bloch_state(const Eigen::Vector3d& n) { return oracle::bloch_eigenvectors(n).first; }

}  // namespace

// ------------------------------------------------------------------ work

TEST(Work, NoDrivingIsDeltaAtZero) {
  std::mt19937_64 rng(50);
  WorkScenario s = random_work(3, rng);
  // Any function of the work-storage energy commutes with it.
  s.hamiltonian = HermitianObservable::from_matrix(s.work_part.matrix() * s.work_part.matrix());
  const auto q = work_kqpd(s);
  ASSERT_EQ(q.size(), 1);
  EXPECT_NEAR(q.support()(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(q.weight(0), 1.0, 1e-12);
  EXPECT_NEAR(work_moments(s, 1), 0.0, 1e-12);
  const auto t = tpm_distribution(s);
  EXPECT_NEAR(t.weight_at({0.0}), 1.0, 1e-12);
}

TEST(Work, FirstTwoMomentsAreEnergyTraces) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_work(2 + trial % 3, rng);
    const ComplexMatrix ht = heisenberg(s.work_part, s.evolution());
    const ComplexMatrix diff = ht - s.work_part.matrix();
    const auto q = work_kqpd(s);
    for (int k = 1; k <= 2; ++k) {
      ComplexMatrix pk = ComplexMatrix::Identity(diff.rows(), diff.cols());
      for (int j = 0; j < k; ++j) pk = pk * diff;
      const double trace = (pk * s.rho0.matrix()).trace().real();
      EXPECT_NEAR(work_moments(s, k), trace, 1e-10);
      EXPECT_NEAR(moment(q, {k}), trace, 1e-10);
    }
  }
}

TEST(Work, HigherMomentsMatchOracleDistribution) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_work(3, rng);
    const auto q = work_kqpd(s);
    for (int k = 0; k <= 4; ++k) {
      const double expect = oracle_work_moment(s, k);
      EXPECT_NEAR(work_moments(s, k), expect, 1e-9);
      EXPECT_NEAR(moment(q, {k}), expect, 1e-9);
    }
  }
}

TEST(Work, CommutingStateReproducesTwoPointStatistics) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    WorkScenario s = random_work(2 + trial % 3, rng);
    const auto d = s.rho0.dim();
    ComplexMatrix rho = ComplexMatrix::Zero(d, d);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (Eigen::Index k = 0; k < d; ++k) {
      const ComplexVector v = s.work_part.eigenvectors().col(k);
      rho += u(rng) * v * v.adjoint();
    }
    s.rho0 = DensityMatrix::from_matrix(rho / rho.trace().real());
    EXPECT_LT(max_weight_deviation(work_kqpd(s), tpm_distribution(s)), 1e-10);
  }
}

TEST(Work, CoherentQubitHasNegativeHalfIntegerWeights) {
  WorkScenario s;
  s.work_part = HermitianObservable::from_matrix(0.5 * pauli_z<>());
  // Rotation about y: |+x> is carried onto an energy eigenstate, so the
  // initial coherence shows up as negative weight.
  s.hamiltonian = HermitianObservable::from_matrix(0.5 * pauli_y<>());
  ComplexVector plus(2);
  plus << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
  s.rho0 = DensityMatrix::pure(plus);
  s.tau = kPi / 2;
  const auto q = work_kqpd(s);
  EXPECT_LT(q.min_weight(), -1e-6);
  bool negative_at_half = false;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double w = q.support()(i, 0);
    if (q.weight(i) < -1e-6 && std::abs(std::abs(w) - 0.5) < 1e-9) negative_at_half = true;
  }
  EXPECT_TRUE(negative_at_half);
  EXPECT_GE(tpm_distribution(s).min_weight(), 0.0);
}

TEST(PowerFCS, CommutingBlockDesign) {
  // H block-diagonal, H_w a projector onto one block: [H, H_w] = 0, so the
  // power operator vanishes and both sides are a delta at zero.
  std::mt19937_64 rng(54);
  ComplexMatrix h = ComplexMatrix::Zero(4, 4);
  h.topLeftCorner(2, 2) = oracle::random_hermitian(2, rng);
  h.bottomRightCorner(2, 2) = oracle::random_hermitian(2, rng);
  ComplexMatrix hw = ComplexMatrix::Zero(4, 4);
  hw(0, 0) = hw(1, 1) = 1.0;
  WorkScenario s;
  s.hamiltonian = HermitianObservable::from_matrix(h);
  s.work_part = HermitianObservable::from_matrix(hw);
  s.rho0 = DensityMatrix::from_matrix(oracle::random_density(4, rng));
  s.tau = 1.3;
  const auto r = power_fcs_consistency(s, 16);
  EXPECT_TRUE(r.commuting);
  EXPECT_LE(r.max_deviation, 1e-6);
  EXPECT_NEAR(r.power.weight_at({0.0}), 1.0, 1e-10);
  EXPECT_NEAR(r.work.weight_at({0.0}), 1.0, 1e-10);
}

TEST(PowerFCS, NonCommutingIsReported) {
  std::mt19937_64 rng(55);
  const auto s = random_work(2, rng);
  const auto r = power_fcs_consistency(s, 6);
  EXPECT_FALSE(r.commuting);
  EXPECT_GT(r.commutator_norm, 1e-3);
  EXPECT_GT(r.max_deviation, 1e-6);
}

// ----------------------------------------------------------- weak values

TEST(WeakValue, TangentExample) {
  const auto z = HermitianObservable::from_matrix(pauli_z<>());
  ComplexVector px(2), mx(2);
  px << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
  mx << 1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2;
  for (double phi : {0.1, 0.3 * kPi, 0.45 * kPi}) {
    const ComplexVector f = std::cos(phi) * px + std::sin(phi) * mx;
    const auto s = WeakValueScenario::make(z, px, f);
    const auto aw = weak_value(s);
    EXPECT_NEAR(aw.real(), std::tan(phi), 1e-12 * std::tan(phi));
    EXPECT_NEAR(aw.imag(), 0.0, 1e-12);
    const auto q = weak_kqpd(s);
    EXPECT_NEAR(moment(q, {1}), std::tan(phi), 1e-10);
    const double var = moment(q, {2}) - std::pow(moment(q, {1}), 2);
    EXPECT_NEAR(weak_variance(s), var, 1e-9);
    if (phi > kPi / 4) {
      EXPECT_LT(q.min_weight(), 0.0);
    }
  }
  EXPECT_GT(std::tan(0.45 * kPi), 6.3);
}

TEST(WeakValue, EigenstateCase) {
  std::mt19937_64 rng(56);
  const auto a = HermitianObservable::from_matrix(oracle::random_hermitian(3, rng));
  const ComplexVector v = a.eigenvectors().col(1);
  const auto s = WeakValueScenario::make(a, v, v);
  EXPECT_NEAR(weak_value(s).real(), a.eigenvalues()(1), 1e-12);
  EXPECT_NEAR(weak_variance(s), 0.0, 1e-12);
}

TEST(WeakValue, TrivialPostSelectionIsNonnegative) {
  // With |F> = |I> the conditioned weight of a pair (a, b) is p_a p_b at
  // the midpoint, so nothing is negative and the mean is <A>.
  std::mt19937_64 rng(57);
  const auto a = HermitianObservable::from_matrix(oracle::random_hermitian(3, rng));
  const ComplexVector i = oracle::random_state(3, rng);
  const auto q = weak_kqpd(WeakValueScenario::make(a, i, i));
  EXPECT_GE(q.min_weight(), -1e-12);
  const auto born = born_distribution(a, DensityMatrix::pure(i));
  oracle::Table t;
  for (Eigen::Index x = 0; x < born.size(); ++x)
    for (Eigen::Index y = 0; y < born.size(); ++y)
      oracle::add_point(t, {0.5 * (born.support()(x, 0) + born.support()(y, 0))}, born.weight(x) * born.weight(y));
  for (const auto& [p, w] : t) EXPECT_NEAR(q.weight_at({p[0]}), w, 1e-12);
  EXPECT_NEAR(moment(q, {1}), moment(born, {1}), 1e-12);
}

TEST(WeakValue, RandomScenariosMeanVarianceAndAnomaly) {
  std::mt19937_64 rng(58);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 2 + trial % 3;
    const auto a = HermitianObservable::from_matrix(oracle::random_hermitian(d, rng));
    const auto s = WeakValueScenario::make(a, oracle::random_state(d, rng), oracle::random_state(d, rng));
    const auto aw = weak_value(s);
    const auto q = weak_kqpd(s);
    EXPECT_NEAR(q.total_weight(), 1.0, 1e-10);
    EXPECT_NEAR(moment(q, {1}), aw.real(), 1e-10) << "trial " << trial;
    const double var = moment(q, {2}) - std::pow(moment(q, {1}), 2);
    EXPECT_NEAR(weak_variance(s), var, 1e-9 * std::max(1.0, std::abs(var))) << "trial " << trial;
    EXPECT_GE(q.support().minCoeff(), a.eigenvalues()(0) - 1e-12);
    EXPECT_LE(q.support().maxCoeff(), a.eigenvalues()(d - 1) + 1e-12);
    const bool anomalous = aw.real() > a.eigenvalues()(d - 1) + 1e-12 || aw.real() < a.eigenvalues()(0) - 1e-12;
    if (anomalous) {
      EXPECT_LT(q.min_weight(), 0.0) << "trial " << trial;
    }
  }
}

TEST(WeakValue, SpinTableAndAnomalyCondition) {
  std::mt19937_64 rng(59);
  int anomalous = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n0 = oracle::random_direction(rng), n1 = oracle::random_direction(rng), n2 = oracle::random_direction(rng);
    const auto amp = SpinAmplitudes::from_bloch(n0, n1, n2);
    const double denom = std::norm(amp.alpha * amp.delta - amp.beta * amp.gamma);
    if (denom < 1e-6) continue;
    const auto table = spin_weak_table(amp);
    const auto s =
        WeakValueScenario::make(HermitianObservable::from_matrix(oracle::bloch(n1)), bloch_state(n0), bloch_state(-n2));
    const auto q = weak_kqpd(s);
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(q.weight_at({double(k - 1)}), table[static_cast<std::size_t>(k)], 1e-9 / denom) << "trial " << trial;
    const double aw = weak_value(s).real();
    const double cross = (amp.alpha * std::conj(amp.beta) * std::conj(amp.gamma) * amp.delta).real();
    const double margin = cross - std::norm(amp.beta) * std::norm(amp.gamma);
    if (std::abs(margin) > 1e-9 && std::abs(aw - 1.0) > 1e-9) {
      EXPECT_EQ(aw > 1.0, margin > 0.0) << "trial " << trial;
      anomalous += aw > 1.0;
    }
  }
  EXPECT_GT(anomalous, 0);
}

TEST(WeakValue, OverlapFloor) {
  ComplexVector up(2), down(2);
  up << 1, 0;
  down << 0, 1;
  const auto x = HermitianObservable::from_matrix(pauli_x<>());
  EXPECT_EQ(code_of([&] { WeakValueScenario::make(x, up, down); }), ErrorCode::OverlapTooSmall);
}

TEST(MomentumCheck, RealGaussianHasZeroLocalMomentum) {
  const auto psi = Wavefunction1D::gaussian(Wavefunction1D::default_axis());
  const auto r = momentum_weak_value_check(psi, 0.7);
  EXPECT_NEAR(r.local_momentum, 0.0, 1e-12);
  EXPECT_NEAR(r.wigner_mean, 0.0, 1e-10);
}

TEST(MomentumCheck, BoostedGaussian) {
  const auto psi = Wavefunction1D::gaussian(Wavefunction1D::default_axis(), 0.0, 1.0, 1.3);
  for (double x : {-0.5, 0.0, 0.8}) {
    const auto r = momentum_weak_value_check(psi, x);
    EXPECT_NEAR(r.wigner_mean, 1.3, 1e-4);
    EXPECT_NEAR(r.local_momentum, 1.3, 1e-4);
    EXPECT_LE(r.deviation, 1e-4);
  }
}

TEST(MomentumCheck, CatStateAcrossMethods) {
  const auto axis = Wavefunction1D::default_axis();
  // Relative phase i: psi(0) != 0 and the local momentum there is -a.
  const auto psi = Wavefunction1D::cat(axis, 2.0, std::complex<double>(0.0, 1.0));
  const auto r = momentum_weak_value_check(psi, 0.0);
  EXPECT_NEAR(r.local_momentum, -2.0, 1e-4);
  EXPECT_LE(r.deviation, 1e-4);
  // Odd cat vanishes at the origin.
  const auto odd = Wavefunction1D::cat(axis, 2.0, -1.0);
  EXPECT_EQ(code_of([&] { momentum_weak_value_check(odd, 0.0); }), ErrorCode::OverlapTooSmall);
}

// ---------------------------------------------------------- Leggett-Garg

TEST(LeggettGarg, PrecessionCorrelators) {
  for (double theta : {0.2, kPi / 3, 1.4, kPi / 2, 2.5}) {
    const auto s = precession(theta);
    EXPECT_NEAR(lg_correlator(s, 1, 2), std::cos(theta), 1e-12);
    EXPECT_NEAR(lg_correlator(s, 3, 1), std::cos(2 * theta), 1e-12);
    EXPECT_NEAR(lg_correlator(s, 1, 3, CorrelatorRoute::ThreeTimeMoment), std::cos(2 * theta), 1e-10);
    EXPECT_NEAR(lg_correlator(s, 2, 3, CorrelatorRoute::Pairwise), std::cos(theta), 1e-10);
    const auto r = lg_test(s);
    EXPECT_NEAR(r.k, 2 * std::cos(theta) - std::cos(2 * theta), 1e-6);
    EXPECT_TRUE(r.identities_hold);
    EXPECT_TRUE(r.implication_holds);
    EXPECT_LT(r.route_deviation, 1e-10);
  }
}

TEST(LeggettGarg, MaximalViolationAndBoundary) {
  const auto top = lg_test(precession(kPi / 3));
  EXPECT_NEAR(top.k, 1.5, 1e-6);
  EXPECT_TRUE(top.violated);
  EXPECT_LT(top.min_weight, -1e-12);
  const auto edge = lg_test(precession(kPi / 2));
  EXPECT_NEAR(edge.k, 1.0, 1e-12);
  EXPECT_FALSE(edge.violated);
}

TEST(LeggettGarg, EqualTimesGiveUnitCorrelator) {
  auto s = precession(0.7);
  s.times = {0.4, 0.4, 1.0};
  EXPECT_NEAR(lg_correlator(s, 1, 2), 1.0, 1e-12);
}

TEST(LeggettGarg, CommutingProbesAreClassical) {
  // H commutes with Q: Q(t) = Q, every correlator is 1 and K = 1.
  LGScenario s = precession(0.9);
  s.hamiltonian = HermitianObservable::from_matrix(0.7 * pauli_z<>());
  std::mt19937_64 rng(60);
  s.rho0 = DensityMatrix::from_matrix(oracle::random_density(2, rng));
  const auto r = lg_test(s);
  EXPECT_GE(r.min_weight, -1e-12);
  EXPECT_LE(r.k, 1.0 + 1e-10);
}

TEST(LeggettGarg, RandomScenariosKeepInvariants) {
  std::mt19937_64 rng(61);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 * (1 + trial % 2);
    LGScenario s;
    ComplexVector sign(d);
    for (int k = 0; k < d; ++k) sign(k) = k % 2 == 0 ? 1.0 : -1.0;
    const ComplexMatrix u = oracle::random_unitary(d, rng);
    const ComplexMatrix q = u * sign.asDiagonal() * u.adjoint();
    s.q = HermitianObservable::from_matrix((q + q.adjoint()) / 2.0);
    s.hamiltonian = HermitianObservable::from_matrix(oracle::random_hermitian(d, rng));
    s.rho0 = DensityMatrix::from_matrix(oracle::random_density(d, rng));
    std::uniform_real_distribution<double> gap(0.05, 1.5);
    const double g1 = gap(rng), g2 = gap(rng);
    s.times = {0.0, g1, g1 + g2};
    const auto r = lg_test(s);
    EXPECT_TRUE(r.identities_hold) << "trial " << trial;
    EXPECT_TRUE(r.implication_holds) << "trial " << trial;
    EXPECT_LE(std::abs(r.c21), 1.0 + 1e-10);
    EXPECT_LT(r.route_deviation, 1e-10);
    violations += r.violated;
  }
  EXPECT_GT(violations, 0);
}

TEST(LeggettGarg, RejectsNonDichotomicAndBadIndices) {
  auto s = precession(0.5);
  s.q = HermitianObservable::from_matrix(2.0 * pauli_z<>());
  EXPECT_EQ(code_of([&] { lg_test(s); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { lg_correlator(precession(0.5), 2, 2); }), ErrorCode::InvalidArgument);
  auto t = precession(0.5);
  t.times = {1.0, 0.5, 2.0};
  EXPECT_EQ(code_of([&] { lg_test(t); }), ErrorCode::InvalidArgument);
}
