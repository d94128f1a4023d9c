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

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

namespace kqpd {

/// Clusters a list of reals: sorted distinct values closer than
/// rel_tol * scale fall into one bin whose center is the mean of its
/// distinct members. A non-positive scale selects max(range, max|v|).
class ValueBinner {
 public:
  ValueBinner() = default;
  ValueBinner(std::vector<double> values, double rel_tol, double scale = 0.0);

  /// Bin index of a value that was part of the construction set.
  int bin_of(double v) const;
  const std::vector<double>& centers() const { return centers_; }
  std::size_t bin_count() const { return centers_.size(); }

 private:
  std::vector<double> values_;
  std::vector<int> bin_;
  std::vector<double> centers_;
};

/// Finitely supported signed distribution on R^N. Support points are the
/// rows of support(); they are unique under the binning tolerance used to
/// build the distribution and sorted lexicographically.
class QuasiDistribution {
 public:
  QuasiDistribution() = default;
  QuasiDistribution(Eigen::MatrixXd support, Eigen::VectorXd weights, double max_imag_residual = 0.0,
                    Eigen::VectorXd interference = {});

  Eigen::Index size() const { return weights_.size(); }
  Eigen::Index dims() const { return support_.cols(); }
  bool empty() const { return size() == 0; }

  const Eigen::MatrixXd& support() const { return support_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::VectorXd point(Eigen::Index i) const { return support_.row(i).transpose(); }
  double weight(Eigen::Index i) const { return weights_(i); }

  /// Part of each weight contributed by trajectory pairs with a nonzero
  /// quantum field (A_L != A_R). Empty when not tracked.
  const Eigen::VectorXd& interference() const { return interference_; }
  bool tracks_interference() const { return interference_.size() == weights_.size() && size() > 0; }

  /// Largest |Im| left on any weight before taking the real part.
  double max_imag_residual() const { return max_imag_; }

  double total_weight() const { return weights_.sum(); }
  double min_weight() const;
  /// Sum of |w|, equal to 1 for a genuine probability distribution.
  double total_variation() const { return weights_.cwiseAbs().sum(); }

  /// Weight at the support point within `tol` (max-norm) of x, or 0.
  double weight_at(const Eigen::VectorXd& x, double tol = 1e-9) const;
  double weight_at(std::initializer_list<double> x, double tol = 1e-9) const;

 private:
  Eigen::MatrixXd support_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd interference_;
  double max_imag_ = 0.0;
};

/// Merges raw (point, complex weight) contributions. Per coordinate,
/// values within rel_tol * (coordinate range) are merged into one support
/// value (the mean of the merged values). Weights keep their real part;
/// the largest imaginary residual is recorded. `scale` as in ValueBinner.
QuasiDistribution bin_points(const Eigen::MatrixXd& points, const Eigen::VectorXcd& weights, double rel_tol = 1e-9,
                             const Eigen::VectorXcd* interference = nullptr, double scale = 0.0);

/// sum_j w_j prod_l A_{j,l}^{k_l}
double moment(const QuasiDistribution& q, std::span<const int> k);
double moment(const QuasiDistribution& q, std::initializer_list<int> k);

Eigen::VectorXd mean(const QuasiDistribution& q);

/// sum_j w_j exp(-i lambda . A_j)
std::complex<double> fourier_sum(const QuasiDistribution& q, const Eigen::VectorXd& lambda);

/// Distribution of y = M x (M has dims() columns), re-binned.
QuasiDistribution project(const QuasiDistribution& q, const Eigen::MatrixXd& m, double rel_tol = 1e-9,
                          double scale = 0.0);

/// Keeps the listed coordinates and sums out the others.
QuasiDistribution marginal(const QuasiDistribution& q, std::span<const int> keep, double rel_tol = 1e-9);

/// Points whose coordinate `axis` lies within tol of value, with that
/// coordinate dropped. Weights are not renormalized.
QuasiDistribution slice(const QuasiDistribution& q, Eigen::Index axis, double value, double tol = 1e-9);

/// Largest |w_a(x) - w_b(x)| over the union of both supports.
double max_weight_deviation(const QuasiDistribution& a, const QuasiDistribution& b, double tol = 1e-9);

}  // namespace kqpd
