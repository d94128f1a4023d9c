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

#include "kqpd/engine.hpp"
#include "kqpd/measurement.hpp"
#include "oracles.hpp"

using namespace kqpd;

namespace {

struct Random {
  SubsequentScenario scenario;
  std::vector<ComplexMatrix> unitaries, observables;
};

// Random unitary scenario; `degenerate` draws spectra with repeated values.
Random random_scenario(int d, int n, std::mt19937_64& rng, bool degenerate = false) {
  Random r;
  r.scenario.rho0 = DensityMatrix::from_matrix(oracle::random_density(d, rng));
  for (int l = 0; l < n; ++l) {
    const ComplexMatrix u = oracle::random_unitary(d, rng);
    ComplexMatrix a;
    if (degenerate) {
      std::vector<double> spec;
      for (int k = 0; k < d; ++k) spec.push_back(static_cast<double>(k / 2) - 0.5);
      a = oracle::random_with_spectrum(spec, rng);
    } else {
      a = oracle::random_hermitian(d, rng);
    }
    r.unitaries.push_back(u);
    r.observables.push_back(a);
    r.scenario.steps.push_back(Step{UnitaryPropagator::from_matrix(u), HermitianObservable::from_matrix(a)});
  }
  return r;
}

double deviation_from_table(const QuasiDistribution& q, const oracle::Table& t) {
  double worst = 0.0;
  for (const auto& [p, w] : t) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) x(static_cast<Eigen::Index>(i)) = p[i];
    worst = std::max(worst, std::abs(q.weight_at(x, 1e-7) - w));
  }
  double total = 0.0;
  for (const auto& [p, w] : t) total += w;
  worst = std::max(worst, std::abs(q.total_weight() - total));
  return worst;
}

SubsequentScenario spin_scenario(const Eigen::Vector3d& n0, const Eigen::Vector3d& n1, const Eigen::Vector3d& n2) {
  SubsequentScenario s;
  s.rho0 = DensityMatrix::from_matrix(0.5 * (ComplexMatrix::Identity(2, 2) + oracle::bloch(n0)));
  s.steps.push_back(Step{UnitaryPropagator::identity(2), HermitianObservable::from_matrix(oracle::bloch(n1))});
  s.steps.push_back(Step{UnitaryPropagator::identity(2), HermitianObservable::from_matrix(oracle::bloch(n2))});
  return s;
}

}  // namespace

TEST(Engine, TwoSpinMaximalNegativity) {
  const Eigen::Vector3d x(1, 0, 0), z(0, 0, 1);
  const auto q = kqpd_subsequent(spin_scenario(x, z, x));
  EXPECT_NEAR(q.weight_at({1, 1}), 0.25, 1e-12);
  EXPECT_NEAR(q.weight_at({-1, 1}), 0.25, 1e-12);
  EXPECT_NEAR(q.weight_at({0, 1}), 0.5, 1e-12);
  EXPECT_NEAR(q.weight_at({1, -1}), 0.25, 1e-12);
  EXPECT_NEAR(q.weight_at({-1, -1}), 0.25, 1e-12);
  EXPECT_NEAR(q.weight_at({0, -1}), -0.5, 1e-12);
}

TEST(Engine, TwoSpinMutuallyUnbiasedIsPositive) {
  const auto q = kqpd_subsequent(spin_scenario({1, 0, 0}, {0, 1, 0}, {0, 0, 1}));
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) EXPECT_NEAR(q.weight_at({double(s1), double(s2)}), 0.25, 1e-12);
  EXPECT_NEAR(q.weight_at({0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(q.weight_at({0, -1}), 0.0, 1e-12);
  EXPECT_GE(q.min_weight(), -1e-12);
}

TEST(Engine, TwoSpinClosedFormRandomBloch) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n0 = oracle::random_direction(rng), n1 = oracle::random_direction(rng), n2 = oracle::random_direction(rng);
    const auto q = kqpd_subsequent(spin_scenario(n0, n1, n2));
    const auto t = oracle::two_spin(n0, n1, n2);
    const auto lib = two_spin_table(SpinAmplitudes::from_bloch(n0, n1, n2));
    for (int s1 = -1; s1 <= 1; ++s1)
      for (int s2 : {-1, 1}) {
        const double expect = t.p[s1 + 1][s2 > 0];
        EXPECT_NEAR(q.weight_at({double(s1), double(s2)}), expect, 1e-10);
        EXPECT_NEAR(lib.at(s1, s2), expect, 1e-12);
      }
  }
}

TEST(Engine, MatchesProjectorOracle) {
  std::mt19937_64 rng(12);
  for (int d = 2; d <= 4; ++d)
    for (int n = 1; n <= 3; ++n)
      for (bool deg : {false, true}) {
        const auto r = random_scenario(d, n, rng, deg);
        const auto q = kqpd_subsequent(r.scenario);
        const auto t = oracle::projector_kqpd(r.scenario.rho0.matrix(), r.unitaries, r.observables);
        EXPECT_LT(deviation_from_table(q, t), 1e-10) << "d=" << d << " n=" << n << " degenerate=" << deg;
        EXPECT_NEAR(q.total_weight(), 1.0, 1e-12);
        EXPECT_LE(q.max_imag_residual(), 1e-12);
      }
}

TEST(Engine, FourierSumMatchesCharacteristicOracle) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> lam(-3.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = random_scenario(3, 3, rng);
    const auto q = kqpd_subsequent(r.scenario);
    for (int k = 0; k < 5; ++k) {
      std::vector<double> l{lam(rng), lam(rng), lam(rng)};
      const Eigen::VectorXd lv = Eigen::Map<Eigen::VectorXd>(l.data(), 3);
      const auto direct = oracle::characteristic(r.scenario.rho0.matrix(), r.unitaries, r.observables, l);
      EXPECT_LT(std::abs(fourier_sum(q, lv) - direct), 1e-10);
      EXPECT_LT(std::abs(characteristic_function(r.scenario, lv) - direct), 1e-10);
    }
  }
}

TEST(Engine, SingleProbeIsBornRule) {
  std::mt19937_64 rng(14);
  const auto r = random_scenario(4, 1, rng);
  const auto q = kqpd_subsequent(r.scenario);
  const auto rho_t = DensityMatrix::from_matrix(r.unitaries[0] * r.scenario.rho0.matrix() * r.unitaries[0].adjoint(),
                                                Tolerances{.hermitian = 1e-10});
  const auto born = born_distribution(r.scenario.steps[0].observable, rho_t);
  EXPECT_LT(max_weight_deviation(q, born, 1e-8), 1e-12);
  EXPECT_GE(q.min_weight(), -1e-14);
}

TEST(Engine, LastProbeMarginalIsUndisturbedBornRule) {
  // Summing over earlier outcomes leaves the statistics of the last probe
  // as if nothing had been measured.
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = random_scenario(3, 3, rng);
    const auto q = kqpd_subsequent(r.scenario);
    const std::vector<int> keep{2};
    const auto last = marginal(q, keep);
    ComplexMatrix rho = r.scenario.rho0.matrix();
    for (const auto& u : r.unitaries) rho = u * rho * u.adjoint();
    for (const auto& lv : oracle::levels(r.observables[2]))
      EXPECT_NEAR(last.weight_at({lv.value}, 1e-7), (lv.projector * rho).trace().real(), 1e-10);
  }
}

TEST(Engine, NegativityNeedsInterference) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = random_scenario(2 + trial % 3, 2 + trial % 2, rng);
    const auto q = kqpd_subsequent(r.scenario);
    ASSERT_TRUE(q.tracks_interference());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      // Diagonal (non-interfering) contribution is a probability.
      EXPECT_GE(q.weight(i) - q.interference()(i), -1e-12);
      if (q.weight(i) < -1e-12) {
        EXPECT_NE(q.interference()(i), 0.0);
      }
    }
  }
}

TEST(Engine, BackactionMatchesOracle) {
  std::mt19937_64 rng(17);
  const auto r = random_scenario(3, 3, rng);
  const BackActionVector g{{0.4, -0.7, 1.3}};
  const auto q = kqpd_with_backaction(r.scenario, g);
  const auto t = oracle::projector_kqpd(r.scenario.rho0.matrix(), r.unitaries, r.observables, g.gammas);
  EXPECT_LT(deviation_from_table(q, t), 1e-10);
  std::uniform_real_distribution<double> lam(-2.0, 2.0);
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd l(3);
    l << lam(rng), lam(rng), lam(rng);
    EXPECT_LT(std::abs(fourier_sum(q, l) - characteristic_function(r.scenario, l, g)), 1e-10);
  }
}

TEST(Engine, UnitaryAsKrausAgrees) {
  std::mt19937_64 rng(18);
  const auto r = random_scenario(3, 2, rng);
  SubsequentScenario k = r.scenario;
  for (auto& st : k.steps) st.evolution = KrausChannel::unitary(std::get<UnitaryPropagator>(st.evolution));
  EXPECT_LT(max_weight_deviation(kqpd_subsequent(r.scenario), kqpd_subsequent_channels(k)), 1e-13);
}

TEST(Engine, DephasingChannelKillsInterferenceOfNextProbe) {
  // Dephasing in the eigenbasis of the next observable leaves only pairs
  // with equal outcomes, so that probe's zero-argument weights vanish.
  const auto z = HermitianObservable::from_matrix(pauli_z<>());
  const auto x = HermitianObservable::from_matrix(pauli_x<>());
  SubsequentScenario s;
  s.rho0 = DensityMatrix::pure(ComplexVector::Ones(2));
  s.steps.push_back(Step{KrausChannel::dephasing(z), z});
  s.steps.push_back(Step{UnitaryPropagator::identity(2), x});
  const auto q = kqpd_subsequent_channels(s);
  EXPECT_NEAR(q.weight_at({0.0, 1.0}), 0.0, 1e-14);
  EXPECT_GE(q.min_weight(), -1e-14);
  EXPECT_THROW(kqpd_subsequent(s), Error);
}

TEST(Engine, ThreadCountDoesNotChangeBits) {
  std::mt19937_64 rng(19);
  const auto r = random_scenario(4, 3, rng);
  EngineOptions one{{}, 1}, many{{}, 8};
  const auto a = kqpd_subsequent(r.scenario, one);
  const auto b = kqpd_subsequent(r.scenario, many);
  ASSERT_EQ(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.weight(i), b.weight(i));
    EXPECT_EQ(a.point(i), b.point(i));
  }
}

TEST(Engine, PairBudget) {
  std::mt19937_64 rng(20);
  const auto r = random_scenario(4, 3, rng);
  EngineOptions opt;
  opt.tol.pair_budget = 1000;
  try {
    kqpd_subsequent(r.scenario, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScenarioTooLarge);
  }
}

TEST(Engine, DimensionMismatchRejected) {
  SubsequentScenario s;
  s.rho0 = DensityMatrix::maximally_mixed(3);
  s.steps.push_back(Step{UnitaryPropagator::identity(2), HermitianObservable::from_matrix(pauli_z<>())});
  try {
    kqpd_subsequent(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
  }
}

TEST(Engine, TrajectoryPairsSumToDistribution) {
  std::mt19937_64 rng(21);
  const auto r = random_scenario(2, 3, rng);
  std::complex<double> total = 0.0;
  int count = 0;
  for_each_trajectory_pair(r.scenario, [&](const TrajectoryPair& p) {
    total += p.amplitude;
    ++count;
    EXPECT_EQ(p.left.back(), p.right.back());
  });
  EXPECT_NEAR(total.real(), 1.0, 1e-12);
  EXPECT_NEAR(total.imag(), 0.0, 1e-12);
  EXPECT_LE(count, 32);
}
