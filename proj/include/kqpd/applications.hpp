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

// Work statistics, post-selected (weak-value) distributions and
// Leggett-Garg tests, all expressed through the trajectory engine.

#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "kqpd/distribution.hpp"
#include "kqpd/engine.hpp"
#include "kqpd/fcs.hpp"
#include "kqpd/measurement.hpp"
#include "kqpd/phase_space.hpp"

namespace kqpd {

// ---------------------------------------------------------------- work

struct WorkScenario {
  HermitianObservable hamiltonian;
  /// Energy of the work-storage part; w is its change.
  HermitianObservable work_part;
  DensityMatrix rho0;
  double tau = 1.0;

  void validate() const;
  UnitaryPropagator evolution() const { return propagator(hamiltonian, tau); }
  /// Two probes of the work-storage energy, at 0 and at tau.
  SubsequentScenario kqpd_scenario() const;
};

/// Distribution of w = E_tau - (E_L + E_R) / 2.
QuasiDistribution work_kqpd(const WorkScenario& s, const EngineOptions& opt = {});

/// Two projective energy measurements; always nonnegative.
QuasiDistribution tpm_distribution(const WorkScenario& s, double rel_tol = 1e-9);

/// <w^k> from the Keldysh-ordered binomial sum, independent of the engine.
double work_moments(const WorkScenario& s, int k);

struct PowerFCSReport {
  /// |[P, H]| with P = i[H, H_w].
  double commutator_norm = 0.0;
  bool commuting = false;
  FCSMethod method = FCSMethod::Spectral;
  QuasiDistribution power;
  QuasiDistribution work;
  double max_deviation = 0.0;
};

/// Compares the counting statistics of P over [0, tau] with work_kqpd. The
/// method is the trajectory route when it fits the budget, else spectral.
PowerFCSReport power_fcs_consistency(const WorkScenario& s, int slices, const FCSOptions& opt = {});

// ---------------------------------------------------------- weak values

struct WeakValueScenario {
  HermitianObservable observable;
  ComplexVector initial;
  ComplexVector final_state;
  std::complex<double> overlap;
  double overlap_floor = 1e-8;

  /// Normalizes both states and computes <F|I>. Throws OverlapTooSmall if
  /// |<F|I>| <= floor.
  static WeakValueScenario make(HermitianObservable a, ComplexVector initial, ComplexVector final_state,
                                double overlap_floor = 1e-8);
};

/// <F|A|I> / <F|I>
std::complex<double> weak_value(const WeakValueScenario& s);

/// Two-probe distribution (A, then |F><F|) from |I>, sliced at a
/// successful post-selection and renormalized by |<F|I>|^2.
QuasiDistribution weak_kqpd(const WeakValueScenario& s, const EngineOptions& opt = {});

/// Variance of weak_kqpd in closed form:
/// Re{(A^2)_w} / 2 - (Re A_w)^2 / 2 + (Im A_w)^2 / 2.
double weak_variance(const WeakValueScenario& s);

/// Post-selection on the -1 eigenstate of the final spin; weights indexed
/// [s1 + 1] for s1 in {-1, 0, +1}.
std::array<double, 3> spin_weak_table(const SpinAmplitudes& amp);

struct MomentumWeakValueReport {
  double x = 0.0;
  /// Position of the Wigner row actually used.
  double row_x = 0.0;
  double wigner_mean = 0.0;
  double local_momentum = 0.0;
  double deviation = 0.0;
};

/// Conditional mean momentum at x from the Wigner function against
/// Re{-i psi'(x) / psi(x)} by finite differences. Throws OverlapTooSmall if
/// |psi(x)|^2 < floor.
MomentumWeakValueReport momentum_weak_value_check(const Wavefunction1D& psi, double x, double floor = 1e-8);

// ------------------------------------------------------- Leggett-Garg

struct LGScenario {
  /// Dichotomic: Q^2 = I.
  HermitianObservable q;
  HermitianObservable hamiltonian;
  std::array<double, 3> times{0.0, 1.0, 2.0};
  DensityMatrix rho0;

  void validate() const;
  /// Three probes of Q at the stored times.
  SubsequentScenario kqpd_scenario() const;
};

enum class CorrelatorRoute {
  /// Tr{ {Q(t_i), Q(t_j)} rho } / 2
  Anticommutator,
  /// Mixed second moment of the three-time distribution.
  ThreeTimeMoment,
  /// Mixed moment of a two-time distribution at t_i, t_j.
  Pairwise,
};

/// C_ij for 1 <= i < j <= 3.
double lg_correlator(const LGScenario& s, int i, int j, CorrelatorRoute route = CorrelatorRoute::Anticommutator,
                     const EngineOptions& opt = {});

struct LGReport {
  double c21 = 0.0, c32 = 0.0, c31 = 0.0;
  double k = 0.0;
  /// K > 1 beyond rounding (1e-10).
  bool violated = false;
  QuasiDistribution kqpd;
  double min_weight = 0.0;
  /// Mass on points whose arguments are all +-1, and on points with at
  /// least one zero argument.
  double diagonal_mass = 0.0;
  double zero_argument_mass = 0.0;
  bool identities_hold = false;
  /// violated implies min_weight < -1e-12.
  bool implication_holds = false;
  /// Largest gap between the three correlator routes.
  double route_deviation = 0.0;
};

LGReport lg_test(const LGScenario& s, const EngineOptions& opt = {});

}  // namespace kqpd
