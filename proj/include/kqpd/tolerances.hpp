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

#pragma once

#include <cstdint>

namespace kqpd {

/// Numerical thresholds shared by all modules. Every field can be overridden
/// per call; the defaults are the documented contract values.
struct Tolerances {
  /// Max |M - M^dagger| relative to max |M|.
  double hermitian = 1e-12;
  /// Max entry of U^dagger U - I (and of sum K^dagger K - I for channels).
  double unitary = 1e-10;
  /// |Tr rho - 1| and smallest admissible eigenvalue (as -positivity).
  double trace = 1e-10;
  double positivity = 1e-10;
  /// Eigenvector checks after diagonalization, relative to max |M|.
  double eigen_residual = 1e-10;
  /// Support points closer than binning * (per-coordinate range) are merged.
  double binning = 1e-9;
  /// Partial trajectory amplitudes below this magnitude are dropped.
  double prune = 1e-14;
  /// Largest residual imaginary part tolerated on any support weight.
  double imag_residual = 1e-9;
  double normalization = 1e-8;
  /// Upper bound on d^(2N) for exact trajectory enumeration.
  std::uint64_t pair_budget = 100'000'000;
  /// Smallest |<F|I>| accepted for post-selection.
  double overlap_floor = 1e-8;
};

}  // namespace kqpd
