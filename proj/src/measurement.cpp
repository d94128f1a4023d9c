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

#include "kqpd/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "kqpd/errors.hpp"

namespace kqpd {

GaussianDetector GaussianDetector::make(double sigma_imp, double sigma_ba, double chi) {
  require(std::isfinite(sigma_imp) && sigma_imp >= 0, ErrorCode::InvalidArgument, "sigma_imp must be finite and >= 0");
  require(std::isfinite(sigma_ba) && sigma_ba >= 0, ErrorCode::InvalidArgument, "sigma_ba must be finite and >= 0");
  require(std::isfinite(chi) && chi > 0, ErrorCode::InvalidArgument, "coupling chi must be positive");
  return GaussianDetector{sigma_imp, sigma_ba, chi};
}

GaussianDetector GaussianDetector::from_pointer(double sigma_r, double sigma_gamma, double chi) {
  require(std::isfinite(chi) && chi > 0, ErrorCode::InvalidArgument, "coupling chi must be positive");
  return make(sigma_r / chi, sigma_gamma * chi, chi);
}

GaussianDetector GaussianDetector::minimal(double sigma_imp, double chi) {
  require(sigma_imp > 0, ErrorCode::InvalidArgument, "minimal detector needs sigma_imp > 0");
  return make(sigma_imp, 0.5 / sigma_imp, chi);
}

namespace {

double gauss(double x, double c, double s) {
  const double z = (x - c) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

bool same_point(double x, double c) { return std::abs(x - c) <= 1e-9 * std::max(1.0, std::abs(c)); }

// Kernel value of one component along one axis.
double axis_factor(double x, double c, double s) { return s > 0 ? gauss(x, c, s) : (same_point(x, c) ? 1.0 : 0.0); }

}  // namespace

SignedGaussianMixture::SignedGaussianMixture(Eigen::MatrixXd centers, Eigen::MatrixXd widths, Eigen::VectorXd weights)
    : centers_(std::move(centers)), widths_(std::move(widths)), weights_(std::move(weights)) {
  require(centers_.rows() == weights_.size() && widths_.rows() == weights_.size() && widths_.cols() == centers_.cols(),
          ErrorCode::DimMismatch, "mixture tables have inconsistent shapes");
  require((widths_.array() >= 0).all(), ErrorCode::InvalidArgument, "mixture widths must be non-negative");
}

double SignedGaussianMixture::density(const Eigen::VectorXd& x) const {
  require(x.size() == dims(), ErrorCode::DimMismatch, "density point has wrong dimension");
  double total = 0.0;
  for (Eigen::Index c = 0; c < size(); ++c) {
    double term = weights_(c);
    for (Eigen::Index l = 0; l < dims() && term != 0.0; ++l) term *= axis_factor(x(l), centers_(c, l), widths_(c, l));
    total += term;
  }
  return total;
}

double SignedGaussianMixture::density(std::initializer_list<double> x) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (double xi : x) v(i++) = xi;
  return density(v);
}

double SignedGaussianMixture::raw_moment(Eigen::Index axis, int k) const {
  require(axis >= 0 && axis < dims() && k >= 0, ErrorCode::InvalidArgument, "bad moment request");
  double total = 0.0;
  for (Eigen::Index c = 0; c < size(); ++c) {
    const double mu = centers_(c, axis), s2 = widths_(c, axis) * widths_(c, axis);
    double m0 = 1.0, m1 = mu;
    double mk = k == 0 ? 1.0 : mu;
    for (int j = 2; j <= k; ++j) {
      mk = mu * m1 + (j - 1) * s2 * m0;
      m0 = m1;
      m1 = mk;
    }
    total += weights_(c) * mk;
  }
  return total;
}

bool SignedGaussianMixture::discrete_axis(Eigen::Index axis) const {
  return size() == 0 || widths_.col(axis).maxCoeff() == 0.0;
}

SignedGaussianMixture measured_subsequent(const SubsequentScenario& s, const std::vector<GaussianDetector>& dets,
                                          const EngineOptions& opt) {
  require(s.is_unitary(), ErrorCode::InvalidArgument, "measured distributions need unitary steps");
  const std::size_t n = s.size();
  require(dets.size() == n || dets.size() + 1 == n, ErrorCode::DimMismatch,
          "need one detector per probe (or one fewer for a projective final probe)");

  PairFactors factors(n);
  for (std::size_t l = 0; l < dets.size(); ++l) {
    const auto& ev = s.steps[l].observable.eigenvalues();
    const double s2 = dets[l].sigma_ba * dets[l].sigma_ba;
    ComplexMatrix f(ev.size(), ev.size());
    for (Eigen::Index a = 0; a < ev.size(); ++a)
      for (Eigen::Index b = 0; b < ev.size(); ++b) f(a, b) = std::exp(-0.5 * s2 * (ev(a) - ev(b)) * (ev(a) - ev(b)));
    factors[l] = std::move(f);
  }
  const QuasiDistribution q = trajectory_sum(s, factors, opt);

  Eigen::MatrixXd widths(q.size(), q.dims());
  for (Eigen::Index l = 0; l < q.dims(); ++l)
    widths.col(l).setConstant(static_cast<std::size_t>(l) < dets.size() ? dets[static_cast<std::size_t>(l)].sigma_imp : 0.0);
  SignedGaussianMixture m(q.support(), widths, q.weights());
  for (std::size_t l = 0; l < dets.size(); ++l) {
    if (!dets[l].heisenberg_ok()) {
      std::ostringstream os;
      os << "HeisenbergViolation: detector " << l << " has sigma_imp*sigma_ba = " << dets[l].sigma_imp * dets[l].sigma_ba
         << " < 1/2";
      m.add_warning(os.str());
    }
  }
  return m;
}

SpinAmplitudes SpinAmplitudes::from_bloch(const Eigen::Vector3d& n0, const Eigen::Vector3d& n1,
                                          const Eigen::Vector3d& n2) {
  auto up = [](const Eigen::Vector3d& n) -> ComplexVector {
    const auto obs = HermitianObservable::from_matrix(bloch_observable(n(0), n(1), n(2)));
    return obs.eigenvectors().col(1);
  };
  const auto mid = HermitianObservable::from_matrix(bloch_observable(n1(0), n1(1), n1(2)));
  const ComplexVector plus1 = mid.eigenvectors().col(1), minus1 = mid.eigenvectors().col(0);
  const ComplexVector i0 = up(n0), f2 = up(n2);
  return SpinAmplitudes{plus1.dot(i0), minus1.dot(i0), plus1.dot(f2), minus1.dot(f2)};
}

TwoSpinTable two_spin_table(const SpinAmplitudes& a) {
  const double cross = 2.0 * (a.alpha * std::conj(a.beta) * std::conj(a.gamma) * a.delta).real();
  const double aa = std::norm(a.alpha), bb = std::norm(a.beta), gg = std::norm(a.gamma), dd = std::norm(a.delta);
  TwoSpinTable t{};
  t.p[2][1] = aa * gg;  // (+1,+1)
  t.p[0][1] = bb * dd;  // (-1,+1)
  t.p[1][1] = cross;    // (0,+1)
  t.p[2][0] = aa * dd;  // (+1,-1)
  t.p[0][0] = bb * gg;  // (-1,-1)
  t.p[1][0] = -cross;   // (0,-1)
  return t;
}

SignedGaussianMixture spin_sequential_measured(const SpinAmplitudes& amp, const GaussianDetector& det1) {
  const TwoSpinTable t = two_spin_table(amp);
  Eigen::MatrixXd centers(6, 2), widths(6, 2);
  Eigen::VectorXd weights(6);
  Eigen::Index r = 0;
  for (int s2 : {-1, 1}) {
    for (int s1 : {-1, 0, 1}) {
      centers.row(r) << s1, s2;
      widths.row(r) << det1.sigma_imp, 0.0;
      weights(r) = t.at(s1, s2) * (s1 == 0 ? std::exp(-2.0 * det1.sigma_ba * det1.sigma_ba) : 1.0);
      ++r;
    }
  }
  SignedGaussianMixture m(centers, widths, weights);
  if (!det1.heisenberg_ok()) m.add_warning("HeisenbergViolation: detector 0 has sigma_imp*sigma_ba < 1/2");
  return m;
}

SignedGaussianMixture condition_final(const SignedGaussianMixture& m, double value, double floor) {
  require(m.dims() >= 1, ErrorCode::InvalidArgument, "cannot condition an empty mixture");
  const Eigen::Index last = m.dims() - 1;
  require(m.discrete_axis(last), ErrorCode::InvalidArgument, "conditioning needs a discrete final axis");
  std::vector<Eigen::Index> rows;
  double mass = 0.0;
  for (Eigen::Index c = 0; c < m.size(); ++c) {
    if (same_point(value, m.centers()(c, last))) {
      rows.push_back(c);
      mass += m.weights()(c);
    }
  }
  if (!(mass > floor)) {
    std::ostringstream os;
    os << "final outcome " << value << " has probability " << mass;
    fail(ErrorCode::ZeroProbability, os.str());
  }
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd centers(k, last), widths(k, last);
  Eigen::VectorXd weights(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto c = rows[static_cast<std::size_t>(r)];
    centers.row(r) = m.centers().row(c).head(last);
    widths.row(r) = m.widths().row(c).head(last);
    weights(r) = m.weights()(c) / mass;
  }
  SignedGaussianMixture out(centers, widths, weights);
  for (const auto& w : m.warnings()) out.add_warning(w);
  return out;
}

namespace {

// Per-axis probe coordinates: a uniform grid for smeared axes, the distinct
// centers for discrete axes.
std::vector<std::vector<double>> probe_axes(const SignedGaussianMixture& m, const ProbeGrid& grid) {
  int continuous = 0;
  for (Eigen::Index l = 0; l < m.dims(); ++l)
    if (!m.discrete_axis(l)) ++continuous;
  int per_axis = grid.points_per_axis;
  if (continuous > 1) {
    const double cap = std::pow(static_cast<double>(grid.max_total), 1.0 / continuous);
    per_axis = std::max(20, std::min(per_axis, static_cast<int>(cap)));
  }
  std::vector<std::vector<double>> axes;
  for (Eigen::Index l = 0; l < m.dims(); ++l) {
    std::vector<double> pts;
    if (m.discrete_axis(l)) {
      const Eigen::VectorXd col = m.centers().col(l);
      ValueBinner bins(std::vector<double>(col.data(), col.data() + col.size()), 1e-9);
      pts = bins.centers();
    } else {
      double lo = INFINITY, hi = -INFINITY;
      for (Eigen::Index c = 0; c < m.size(); ++c) {
        lo = std::min(lo, m.centers()(c, l) - grid.sigma_span * m.widths()(c, l));
        hi = std::max(hi, m.centers()(c, l) + grid.sigma_span * m.widths()(c, l));
      }
      for (int i = 0; i < per_axis; ++i) pts.push_back(lo + (hi - lo) * i / std::max(1, per_axis - 1));
    }
    axes.push_back(std::move(pts));
  }
  return axes;
}

}  // namespace

double min_density_on_grid(const SignedGaussianMixture& m, const ProbeGrid& grid) {
  if (m.size() == 0 || m.dims() == 0) return 0.0;
  const auto axes = probe_axes(m, grid);
  const auto dims = static_cast<std::size_t>(m.dims());
  // factor[l](c, i): kernel of component c at probe point i of axis l.
  std::vector<Eigen::MatrixXd> factor;
  for (std::size_t l = 0; l < dims; ++l) {
    Eigen::MatrixXd f(m.size(), static_cast<Eigen::Index>(axes[l].size()));
    for (Eigen::Index c = 0; c < m.size(); ++c)
      for (std::size_t i = 0; i < axes[l].size(); ++i)
        f(c, static_cast<Eigen::Index>(i)) =
            axis_factor(axes[l][i], m.centers()(c, static_cast<Eigen::Index>(l)), m.widths()(c, static_cast<Eigen::Index>(l)));
    factor.push_back(std::move(f));
  }
  std::vector<std::size_t> idx(dims, 0);
  double lowest = INFINITY;
  Eigen::VectorXd prod(m.size());
  while (true) {
    prod = m.weights();
    for (std::size_t l = 0; l < dims; ++l) prod = prod.cwiseProduct(factor[l].col(static_cast<Eigen::Index>(idx[l])));
    lowest = std::min(lowest, prod.sum());
    std::size_t l = 0;
    while (l < dims && ++idx[l] == axes[l].size()) idx[l++] = 0;
    if (l == dims) break;
  }
  return lowest;
}

Eigen::MatrixXd sample(const SignedGaussianMixture& m, std::size_t n, std::uint64_t seed, const ProbeGrid& grid) {
  require(m.size() > 0, ErrorCode::InvalidArgument, "cannot sample an empty mixture");
  const double lowest = min_density_on_grid(m, grid);
  if (lowest < -1e-9) {
    std::ostringstream os;
    os << "mixture density reaches " << lowest << " on the probe grid";
    fail(ErrorCode::NegativeDensity, os.str());
  }
  std::mt19937_64 rng(seed);
  const Eigen::VectorXd absw = m.weights().cwiseAbs();
  std::discrete_distribution<Eigen::Index> pick(absw.data(), absw.data() + absw.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), m.dims());
  Eigen::VectorXd x(m.dims());
  const std::size_t max_tries = 10000 * std::max<std::size_t>(n, 1);
  std::size_t accepted = 0, tries = 0;
  while (accepted < n) {
    require(++tries <= max_tries, ErrorCode::NumericalFailure, "rejection sampler acceptance rate too low");
    const Eigen::Index c = pick(rng);
    for (Eigen::Index l = 0; l < m.dims(); ++l) x(l) = m.centers()(c, l) + m.widths()(c, l) * normal(rng);
    double dens = 0.0, env = 0.0;
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      double f = 1.0;
      for (Eigen::Index l = 0; l < m.dims() && f != 0.0; ++l) f *= axis_factor(x(l), m.centers()(k, l), m.widths()(k, l));
      dens += m.weights()(k) * f;
      env += absw(k) * f;
    }
    if (env > 0 && unit(rng) * env <= dens) out.row(static_cast<Eigen::Index>(accepted++)) = x.transpose();
  }
  return out;
}

std::vector<double> convolve_with_pointer(const QuasiDistribution& q, double x0, double dx, std::size_t count,
                                          const std::function<double(double)>& pointer_pdf) {
  require(q.dims() == 1, ErrorCode::InvalidArgument, "pointer convolution supports a single observable only");
  std::vector<double> out(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = x0 + dx * static_cast<double>(i);
    for (Eigen::Index j = 0; j < q.size(); ++j) out[i] += q.weight(j) * pointer_pdf(x - q.support()(j, 0));
  }
  return out;
}

}  // namespace kqpd
