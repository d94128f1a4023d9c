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

// Quasi-probability distributions of observables probed at subsequent
// times, computed by exact enumeration of forward/backward trajectory
// pairs.

#pragma once

#include <complex>
#include <functional>
#include <variant>
#include <vector>

#include "kqpd/distribution.hpp"
#include "kqpd/linalg.hpp"
#include "kqpd/tolerances.hpp"

namespace kqpd {

using Evolution = std::variant<UnitaryPropagator, KrausChannel>;

/// Evolution from the previous probe time (or from t = 0 for the first
/// step), followed by an instantaneous probe of `observable`.
struct Step {
  Evolution evolution;
  HermitianObservable observable;
};

struct SubsequentScenario {
  DensityMatrix rho0;
  std::vector<Step> steps;
  /// Probe times, metadata only. Empty or strictly ascending with one
  /// entry per step.
  std::vector<double> times;

  std::size_t size() const { return steps.size(); }
  Eigen::Index dim() const { return rho0.dim(); }
  bool is_unitary() const;
  /// Throws DimMismatch / InvalidArgument.
  void validate() const;
};

/// One leaf of the enumeration. `left` and `right` are eigenvector indices
/// per probe; the last entries coincide.
struct TrajectoryPair {
  std::vector<int> left;
  std::vector<int> right;
  std::complex<double> amplitude;
};

struct BackActionVector {
  std::vector<double> gammas;
};

struct EngineOptions {
  Tolerances tol;
  /// 0 selects std::thread::hardware_concurrency(). Results do not depend
  /// on this value.
  unsigned threads = 0;
};

/// Optional multiplicative factor per probe and per eigenvector pair
/// (a = left index, b = right index). Either empty or one d x d matrix per
/// probe; an empty matrix stands for all ones.
using PairFactors = std::vector<ComplexMatrix>;

/// Generic enumeration with arbitrary steps (unitary or Kraus) and pair
/// factors. Support points are per-probe midpoints (A_L + A_R) / 2.
QuasiDistribution trajectory_sum(const SubsequentScenario& s, const PairFactors& factors,
                                 const EngineOptions& opt = {});

QuasiDistribution kqpd_subsequent(const SubsequentScenario& s, const EngineOptions& opt = {});

/// Each pair picks up exp(-i sum_l gamma_l (A_l^L - A_l^R)).
QuasiDistribution kqpd_with_backaction(const SubsequentScenario& s, const BackActionVector& g,
                                       const EngineOptions& opt = {});

QuasiDistribution kqpd_subsequent_channels(const SubsequentScenario& s, const EngineOptions& opt = {});

/// Direct operator evaluation of the symmetrically split generating
/// function. With back-action, the left factor at probe l is
/// exp(-i (lambda_l / 2 + gamma_l) A_l) and the right one
/// exp(-i (lambda_l / 2 - gamma_l) A_l).
std::complex<double> characteristic_function(const SubsequentScenario& s, const Eigen::VectorXd& lambdas,
                                             const BackActionVector& g = {});

/// Sequential walk over all non-pruned leaves in deterministic order.
void for_each_trajectory_pair(const SubsequentScenario& s, const std::function<void(const TrajectoryPair&)>& visit,
                              const EngineOptions& opt = {});

/// pair factor matrices exp(-i gamma_l (lambda_a - lambda_b)).
PairFactors backaction_factors(const SubsequentScenario& s, const BackActionVector& g);

/// Born-rule distribution of one observable in a state (1D).
QuasiDistribution born_distribution(const HermitianObservable& a, const DensityMatrix& rho, double rel_tol = 1e-9);

/// State right after the evolution of the first step.
DensityMatrix evolve(const Evolution& e, const DensityMatrix& rho, const Tolerances& tol = {});
ComplexMatrix evolve_operator(const Evolution& e, const ComplexMatrix& x);

}  // namespace kqpd
