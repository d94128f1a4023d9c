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

// Position/momentum quasi-distributions of a single continuous degree of
// freedom on uniform grids (hbar = 1).

#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kqpd/measurement.hpp"

namespace kqpd {

struct Axis {
  double origin = 0.0;
  double spacing = 1.0;
  Eigen::Index count = 0;

  double at(Eigen::Index i) const { return origin + spacing * static_cast<double>(i); }
};

/// Pure state sampled on a uniform position grid.
class Wavefunction1D {
 public:
  /// Checks sum |psi|^2 dx = 1 within 1e-8.
  Wavefunction1D(double x0, double dx, Eigen::VectorXcd amplitudes);

  /// Default grid: 256 points covering [-10, 10).
  static Axis default_axis(Eigen::Index count = 256, double half_width = 10.0);

  /// psi ~ exp(-(x - center)^2 / (2 width^2) + i p0 x), normalized on the grid.
  static Wavefunction1D gaussian(const Axis& x, double center = 0.0, double width = 1.0, double p0 = 0.0);
  /// psi ~ exp(-(x - a)^2 / 2) + phase * exp(-(x + a)^2 / 2), normalized on the grid.
  static Wavefunction1D cat(const Axis& x, double a, std::complex<double> phase = -1.0);
  /// Normalizes arbitrary samples.
  static Wavefunction1D from_samples(const Axis& x, Eigen::VectorXcd samples);

  const Axis& axis() const { return axis_; }
  const Eigen::VectorXcd& amplitudes() const { return psi_; }
  Eigen::Index size() const { return psi_.size(); }

 private:
  Axis axis_;
  Eigen::VectorXcd psi_;
};

/// Real function on an x-p grid; values(i, j) sits at (x.at(i), p.at(j)).
struct PhaseSpaceGrid {
  Axis x;
  Axis p;
  Eigen::MatrixXd values;

  double cell() const { return x.spacing * p.spacing; }
  double integral() const { return values.sum() * cell(); }
  /// Integral over p, one entry per x.
  Eigen::VectorXd x_marginal() const { return values.rowwise().sum() * p.spacing; }
  /// Integral over x, one entry per p.
  Eigen::VectorXd p_marginal() const { return values.colwise().sum().transpose() * x.spacing; }
  double at(double xv, double pv) const;
};

/// Wigner function by a per-row FFT of psi(x + y) psi*(x - y). Lags are
/// taken in steps of dx, so the momentum axis has spacing pi / (M dx).
PhaseSpaceGrid wigner(const Wavefunction1D& psi);

/// Spectral (periodic) Gaussian convolution with the given variances.
/// Throws GridTooCoarse if the input or output does not decay to 1e-8 at
/// the grid border.
PhaseSpaceGrid gaussian_smooth(const PhaseSpaceGrid& w, double var_x, double var_p);

/// Smoothing with standard deviations sigma (x) and 1 / (2 sigma) (p).
PhaseSpaceGrid husimi(const PhaseSpaceGrid& w, double sigma);

enum class MeasurementOrder { XThenP, PThenX };

/// Position measurement followed immediately by a momentum measurement (or
/// the reverse). Only the first detector's back-action matters.
PhaseSpaceGrid sequential_xp(const PhaseSpaceGrid& w, const GaussianDetector& det_x, const GaussianDetector& det_p,
                             MeasurementOrder order = MeasurementOrder::XThenP);

/// Both detectors coupled at once; each back-action enters with half weight.
PhaseSpaceGrid simultaneous_xp(const PhaseSpaceGrid& w, const GaussianDetector& det_x, const GaussianDetector& det_p);

/// Minimal detector pair for which the simultaneous route reproduces
/// husimi(w, sigma).
std::pair<GaussianDetector, GaussianDetector> husimi_detectors(double sigma);

/// integral |W| - 1
double negativity_volume(const PhaseSpaceGrid& w);

/// (2 pi)^(-1/2) integral exp(-i p x) psi(x) dx at the given momenta.
Eigen::VectorXcd momentum_amplitudes(const Wavefunction1D& psi, const Axis& p);

/// Momentum-space density |psi~(p)|^2 on the grid's p axis.
Eigen::VectorXd momentum_density(const Wavefunction1D& psi, const Axis& p);

void write_grid_csv(const PhaseSpaceGrid& g, std::ostream& out);
/// Header: 8-byte magic "KQPDGRID", then x origin, x spacing (f64),
/// x count (u64), p origin, p spacing (f64), p count (u64). Body: values
/// row-major over (x, p), little-endian f64.
void write_grid_binary(const PhaseSpaceGrid& g, std::ostream& out);
PhaseSpaceGrid read_grid_binary(std::istream& in);

}  // namespace kqpd
