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

// Measured distributions for von Neumann detectors with Gaussian pointer
// states: imprecision smears outcomes, back-action damps interference
// between trajectory pairs.

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kqpd/distribution.hpp"
#include "kqpd/engine.hpp"

namespace kqpd {

struct GaussianDetector {
  /// Outcome smearing, sigma_r / chi.
  double sigma_imp = 1.0;
  /// Interference damping, sigma_gamma * chi.
  double sigma_ba = 0.5;
  double chi = 1.0;

  /// Non-negative finite widths. Zero widths are accepted as limiting
  /// (diagnostic) detectors.
  static GaussianDetector make(double sigma_imp, double sigma_ba, double chi = 1.0);
  /// Pointer with position spread sigma_r and momentum spread sigma_gamma.
  static GaussianDetector from_pointer(double sigma_r, double sigma_gamma, double chi);
  /// Pure Gaussian pointer: sigma_imp * sigma_ba = 1/2.
  static GaussianDetector minimal(double sigma_imp, double chi = 1.0);

  bool heisenberg_ok() const { return sigma_imp * sigma_ba >= 0.5 - 1e-12; }
};

/// Finite sum of axis-aligned Gaussians with signed weights. A zero width
/// on an axis makes that axis discrete: the density is taken with respect
/// to the counting measure there.
class SignedGaussianMixture {
 public:
  SignedGaussianMixture() = default;
  SignedGaussianMixture(Eigen::MatrixXd centers, Eigen::MatrixXd widths, Eigen::VectorXd weights);

  Eigen::Index size() const { return weights_.size(); }
  Eigen::Index dims() const { return centers_.cols(); }
  const Eigen::MatrixXd& centers() const { return centers_; }
  const Eigen::MatrixXd& widths() const { return widths_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double total_weight() const { return weights_.sum(); }

  double density(const Eigen::VectorXd& x) const;
  double density(std::initializer_list<double> x) const;

  /// sum_c w_c E_c[x_axis^k]
  double raw_moment(Eigen::Index axis, int k) const;

  /// True if the axis carries no Gaussian smearing in any component.
  bool discrete_axis(Eigen::Index axis) const;

  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  Eigen::MatrixXd centers_;
  Eigen::MatrixXd widths_;
  Eigen::VectorXd weights_;
  std::vector<std::string> warnings_;
};

/// One Gaussian per support point of the damped trajectory sum. `dets` has
/// one detector per probe, or one fewer, in which case the last probe is
/// projective (a discrete axis).
SignedGaussianMixture measured_subsequent(const SubsequentScenario& s, const std::vector<GaussianDetector>& dets,
                                          const EngineOptions& opt = {});

/// Amplitudes of the initial state and of the final eigenstate in the
/// eigenbasis of the intermediate spin: |+_0> = alpha|+_1> + beta|-_1>,
/// |+_2> = gamma|+_1> + delta|-_1>.
struct SpinAmplitudes {
  std::complex<double> alpha, beta, gamma, delta;

  /// From Bloch directions of the initial, intermediate and final spins.
  static SpinAmplitudes from_bloch(const Eigen::Vector3d& n0, const Eigen::Vector3d& n1, const Eigen::Vector3d& n2);
};

/// Discrete two-spin table indexed as [s1 in {-1,0,+1}][s2 in {-1,+1}].
struct TwoSpinTable {
  double p[3][2];
  double at(int s1, int s2) const { return p[s1 + 1][s2 > 0 ? 1 : 0]; }
};

TwoSpinTable two_spin_table(const SpinAmplitudes& amp);

/// Intermediate-strength first spin measurement followed by a projective
/// one. Axis 0 is continuous, axis 1 discrete (+-1).
SignedGaussianMixture spin_sequential_measured(const SpinAmplitudes& amp, const GaussianDetector& det1);

/// Distribution of the remaining axes given the last (discrete) axis
/// equals `value`, renormalized. Throws ZeroProbability below `floor`.
SignedGaussianMixture condition_final(const SignedGaussianMixture& m, double value, double floor = 1e-12);

struct ProbeGrid {
  /// Points per continuous axis for one continuous axis; with k continuous
  /// axes the per-axis count is reduced so the total stays near max_total.
  int points_per_axis = 1000;
  std::size_t max_total = 200000;
  double sigma_span = 6.0;
};

/// Smallest density over the probe grid.
double min_density_on_grid(const SignedGaussianMixture& m, const ProbeGrid& grid = {});

/// Rejection sampling against the |w|-envelope. Rows are samples.
Eigen::MatrixXd sample(const SignedGaussianMixture& m, std::size_t n, std::uint64_t seed, const ProbeGrid& grid = {});

/// Single observable, arbitrary pointer: the measured density on a grid is
/// sum_a p_a pointer_pdf(x - a).
std::vector<double> convolve_with_pointer(const QuasiDistribution& q, double x0, double dx, std::size_t count,
                                          const std::function<double(double)>& pointer_pdf);

}  // namespace kqpd
