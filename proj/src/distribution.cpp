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

#include "kqpd/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kqpd/errors.hpp"

namespace kqpd {

QuasiDistribution::QuasiDistribution(Eigen::MatrixXd support, Eigen::VectorXd weights, double max_imag_residual,
                                     Eigen::VectorXd interference)
    : support_(std::move(support)),
      weights_(std::move(weights)),
      interference_(std::move(interference)),
      max_imag_(max_imag_residual) {
  require(support_.rows() == weights_.size(), ErrorCode::DimMismatch, "support and weight counts differ");
}

double QuasiDistribution::min_weight() const { return empty() ? 0.0 : weights_.minCoeff(); }

double QuasiDistribution::weight_at(const Eigen::VectorXd& x, double tol) const {
  require(x.size() == dims(), ErrorCode::DimMismatch, "query point has wrong dimension");
  for (Eigen::Index i = 0; i < size(); ++i)
    if ((support_.row(i).transpose() - x).cwiseAbs().maxCoeff() <= tol) return weights_(i);
  return 0.0;
}

double QuasiDistribution::weight_at(std::initializer_list<double> x, double tol) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (double xi : x) v(i++) = xi;
  return weight_at(v, tol);
}

ValueBinner::ValueBinner(std::vector<double> values, double rel_tol, double scale) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  if (values_.empty()) return;
  if (!(scale > 0)) {
    const double range = values_.back() - values_.front();
    scale = std::max(range, std::max(std::abs(values_.front()), std::abs(values_.back())));
  }
  const double merge = rel_tol * (scale > 0 ? scale : 1.0);
  std::vector<double> sums;
  std::vector<int> counts;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i == 0 || values_[i] - values_[i - 1] > merge) {
      sums.push_back(0.0);
      counts.push_back(0);
    }
    sums.back() += values_[i];
    counts.back() += 1;
    bin_.push_back(static_cast<int>(sums.size()) - 1);
  }
  for (std::size_t b = 0; b < sums.size(); ++b) centers_.push_back(sums[b] / counts[b]);
}

int ValueBinner::bin_of(double v) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), v);
  require(it != values_.end() && *it == v, ErrorCode::InvalidArgument, "value was not registered with the binner");
  return bin_[static_cast<std::size_t>(it - values_.begin())];
}

QuasiDistribution bin_points(const Eigen::MatrixXd& points, const Eigen::VectorXcd& weights, double rel_tol,
                             const Eigen::VectorXcd* interference, double scale) {
  require(points.rows() == weights.size(), ErrorCode::DimMismatch, "point and weight counts differ");
  const Eigen::Index dims = points.cols();
  std::vector<ValueBinner> axes;
  for (Eigen::Index l = 0; l < dims; ++l) {
    const Eigen::VectorXd column = points.col(l);
    axes.emplace_back(std::vector<double>(column.data(), column.data() + column.size()), rel_tol, scale);
  }

  struct Acc {
    std::complex<double> w;
    std::complex<double> q;
  };
  std::map<std::vector<int>, Acc> acc;
  std::vector<int> key(static_cast<std::size_t>(dims));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index l = 0; l < dims; ++l) key[static_cast<std::size_t>(l)] = axes[static_cast<std::size_t>(l)].bin_of(points(i, l));
    auto& a = acc[key];
    a.w += weights(i);
    if (interference) a.q += (*interference)(i);
  }

  Eigen::MatrixXd support(static_cast<Eigen::Index>(acc.size()), dims);
  Eigen::VectorXd w(static_cast<Eigen::Index>(acc.size()));
  Eigen::VectorXd q;
  if (interference) q.resize(w.size());
  double max_imag = 0.0;
  Eigen::Index row = 0;
  for (const auto& [k, a] : acc) {
    for (Eigen::Index l = 0; l < dims; ++l)
      support(row, l) = axes[static_cast<std::size_t>(l)].centers()[static_cast<std::size_t>(k[static_cast<std::size_t>(l)])];
    w(row) = a.w.real();
    if (interference) q(row) = a.q.real();
    max_imag = std::max(max_imag, std::abs(a.w.imag()));
    ++row;
  }
  return QuasiDistribution(std::move(support), std::move(w), max_imag, std::move(q));
}

double moment(const QuasiDistribution& q, std::span<const int> k) {
  require(static_cast<Eigen::Index>(k.size()) == q.dims(), ErrorCode::DimMismatch, "moment order has wrong length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    double term = q.weight(i);
    for (Eigen::Index l = 0; l < q.dims(); ++l) term *= std::pow(q.support()(i, l), k[static_cast<std::size_t>(l)]);
    total += term;
  }
  return total;
}

double moment(const QuasiDistribution& q, std::initializer_list<int> k) {
  return moment(q, std::span<const int>(k.begin(), k.size()));
}

Eigen::VectorXd mean(const QuasiDistribution& q) { return q.support().transpose() * q.weights(); }

std::complex<double> fourier_sum(const QuasiDistribution& q, const Eigen::VectorXd& lambda) {
  require(lambda.size() == q.dims(), ErrorCode::DimMismatch, "lambda has wrong dimension");
  std::complex<double> total = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) total += q.weight(i) * std::polar(1.0, -q.support().row(i).dot(lambda));
  return total;
}

QuasiDistribution project(const QuasiDistribution& q, const Eigen::MatrixXd& m, double rel_tol, double scale) {
  require(m.cols() == q.dims(), ErrorCode::DimMismatch, "projection has wrong column count");
  const Eigen::MatrixXd points = q.support() * m.transpose();
  const Eigen::VectorXcd w = q.weights().cast<std::complex<double>>();
  if (q.tracks_interference()) {
    const Eigen::VectorXcd iw = q.interference().cast<std::complex<double>>();
    return bin_points(points, w, rel_tol, &iw, scale);
  }
  return bin_points(points, w, rel_tol, nullptr, scale);
}

QuasiDistribution marginal(const QuasiDistribution& q, std::span<const int> keep, double rel_tol) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(keep.size()), q.dims());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    require(keep[r] >= 0 && keep[r] < q.dims(), ErrorCode::InvalidArgument, "marginal axis out of range");
    m(static_cast<Eigen::Index>(r), keep[r]) = 1.0;
  }
  return project(q, m, rel_tol);
}

QuasiDistribution slice(const QuasiDistribution& q, Eigen::Index axis, double value, double tol) {
  require(axis >= 0 && axis < q.dims(), ErrorCode::InvalidArgument, "slice axis out of range");
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (std::abs(q.support()(i, axis) - value) <= tol) rows.push_back(i);
  Eigen::MatrixXd support(static_cast<Eigen::Index>(rows.size()), q.dims() - 1);
  Eigen::VectorXd w(static_cast<Eigen::Index>(rows.size()));
  Eigen::VectorXd iw(q.tracks_interference() ? w.size() : 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    const auto out = static_cast<Eigen::Index>(r);
    Eigen::Index c = 0;
    for (Eigen::Index l = 0; l < q.dims(); ++l)
      if (l != axis) support(out, c++) = q.support()(i, l);
    w(out) = q.weight(i);
    if (q.tracks_interference()) iw(out) = q.interference()(i);
  }
  return QuasiDistribution(std::move(support), std::move(w), q.max_imag_residual(), std::move(iw));
}

double max_weight_deviation(const QuasiDistribution& a, const QuasiDistribution& b, double tol) {
  require(a.dims() == b.dims(), ErrorCode::DimMismatch, "distributions differ in dimension");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.weight(i) - b.weight_at(a.point(i), tol)));
  for (Eigen::Index i = 0; i < b.size(); ++i) worst = std::max(worst, std::abs(b.weight(i) - a.weight_at(b.point(i), tol)));
  return worst;
}

}  // namespace kqpd
