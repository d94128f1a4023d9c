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

// Full counting statistics of m = integral_0^T A(t) dt, discretized into N
// symmetric Trotter slices.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "kqpd/distribution.hpp"
#include "kqpd/engine.hpp"
#include "kqpd/measurement.hpp"

namespace kqpd {

struct FCSScenario {
  HermitianObservable counted;
  /// Time-independent Hamiltonian.
  HermitianObservable hamiltonian;
  DensityMatrix rho0;
  double duration = 1.0;
  int slices = 64;
  /// Detector back-action, entering as H -> H + gamma * A.
  double gamma = 0.0;

  double dt() const { return duration / slices; }
  void validate() const;
};

enum class FCSMethod { Trajectory, Spectral };

struct FCSOptions {
  EngineOptions engine;
  /// Upper bound on d^(2N) for the trajectory route.
  std::uint64_t trajectory_budget = std::uint64_t{1} << 20;
  /// Upper bound on the candidate support size of the spectral route.
  std::size_t max_support = 20000;
  /// Residual / mass error that flags an unreliable spectral inversion.
  double aliasing_tolerance = 1e-6;
};

/// Lambda(l) = Tr{ K(l/2) rho K(-l/2)^dagger }, where K(mu) is the product
/// over slices of exp(-i mu dt A / 2) exp(-i (H + gamma A) dt) exp(-i mu dt A / 2).
std::complex<double> fcs_characteristic(const FCSScenario& s, double lambda);

/// Probe weights of the N + 1 observation points: dt / 2 at both ends, dt
/// in between.
std::vector<double> fcs_probe_weights(const FCSScenario& s);

/// Subsequent-probe scenario with N + 1 probes of A whose weighted sum is m.
SubsequentScenario fcs_trajectory_scenario(const FCSScenario& s);

/// All values m can take (final probe restricted to eigenvalues), binned.
std::vector<double> fcs_support(const FCSScenario& s, const FCSOptions& opt = {});

QuasiDistribution fcs_distribution(const FCSScenario& s, FCSMethod method, const FCSOptions& opt = {});

/// Gaussian detector integrating A over the window. Components per support
/// point of (m_L + m_R) / 2, damped by exp(-sigma_ba^2 (m_L - m_R)^2 / 2).
SignedGaussianMixture measured_fcs(const FCSScenario& s, const GaussianDetector& det, const FCSOptions& opt = {});

}  // namespace kqpd
