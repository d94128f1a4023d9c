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

#include "kqpd/phase_space.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "kqpd/errors.hpp"

namespace kqpd {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBorder = 1e-8;

double norm_on_grid(const Eigen::VectorXcd& psi, double dx) { return psi.squaredNorm() * dx; }

}  // namespace

Wavefunction1D::Wavefunction1D(double x0, double dx, Eigen::VectorXcd amplitudes)
    : axis_{x0, dx, amplitudes.size()}, psi_(std::move(amplitudes)) {
  require(psi_.size() >= 4, ErrorCode::InvalidArgument, "wavefunction needs at least 4 samples");
  require(std::isfinite(dx) && dx > 0 && std::isfinite(x0), ErrorCode::InvalidArgument, "bad position grid");
  const double n = norm_on_grid(psi_, dx);
  if (std::abs(n - 1.0) > 1e-8) {
    std::ostringstream os;
    os << "wavefunction norm is " << n;
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

Axis Wavefunction1D::default_axis(Eigen::Index count, double half_width) {
  return Axis{-half_width, 2.0 * half_width / static_cast<double>(count), count};
}

Wavefunction1D Wavefunction1D::from_samples(const Axis& x, Eigen::VectorXcd samples) {
  require(samples.size() == x.count, ErrorCode::DimMismatch, "sample count differs from axis count");
  const double n = norm_on_grid(samples, x.spacing);
  require(n > 0 && std::isfinite(n), ErrorCode::InvalidArgument, "wavefunction samples vanish");
  samples /= std::sqrt(n);
  return Wavefunction1D(x.origin, x.spacing, std::move(samples));
}

Wavefunction1D Wavefunction1D::gaussian(const Axis& x, double center, double width, double p0) {
  require(width > 0, ErrorCode::InvalidArgument, "Gaussian width must be positive");
  Eigen::VectorXcd s(x.count);
  for (Eigen::Index i = 0; i < x.count; ++i) {
    const double xi = x.at(i), z = (xi - center) / width;
    s(i) = std::exp(-0.5 * z * z) * std::polar(1.0, p0 * xi);
  }
  return from_samples(x, std::move(s));
}

Wavefunction1D Wavefunction1D::cat(const Axis& x, double a, std::complex<double> phase) {
  Eigen::VectorXcd s(x.count);
  for (Eigen::Index i = 0; i < x.count; ++i) {
    const double xi = x.at(i);
    s(i) = std::exp(-0.5 * (xi - a) * (xi - a)) + phase * std::exp(-0.5 * (xi + a) * (xi + a));
  }
  return from_samples(x, std::move(s));
}

double PhaseSpaceGrid::at(double xv, double pv) const {
  const auto i = static_cast<Eigen::Index>(std::llround((xv - x.origin) / x.spacing));
  const auto j = static_cast<Eigen::Index>(std::llround((pv - p.origin) / p.spacing));
  require(i >= 0 && i < x.count && j >= 0 && j < p.count, ErrorCode::InvalidArgument, "point lies outside the grid");
  return values(i, j);
}

PhaseSpaceGrid wigner(const Wavefunction1D& psi) {
  const Eigen::Index m = psi.size();
  require(m % 2 == 0, ErrorCode::InvalidArgument, "Wigner grid needs an even sample count");
  const auto& amp = psi.amplitudes();
  const double dx = psi.axis().spacing;

  PhaseSpaceGrid g;
  g.x = psi.axis();
  g.p = Axis{-kPi / (2.0 * dx), kPi / (static_cast<double>(m) * dx), m};
  g.values.resize(m, m);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> lag(static_cast<std::size_t>(m)), spec;
  double worst_imag = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = -m / 2; k < m / 2; ++k) {
      const Eigen::Index lo = j - k, hi = j + k;
      std::complex<double> f = 0.0;
      if (lo >= 0 && lo < m && hi >= 0 && hi < m) f = amp(hi) * std::conj(amp(lo));
      lag[static_cast<std::size_t>((k + m) % m)] = (k % 2 == 0) ? f : -f;
    }
    fft.fwd(spec, lag);
    for (Eigen::Index c = 0; c < m; ++c) {
      const std::complex<double> v = spec[static_cast<std::size_t>(c)] * (dx / kPi);
      g.values(j, c) = v.real();
      worst_imag = std::max(worst_imag, std::abs(v.imag()));
    }
  }
  require(worst_imag <= 1e-10, ErrorCode::NumericalFailure, "Wigner function has an imaginary residue");
  const double total = g.integral();
  if (std::abs(total - 1.0) > 1e-3) {
    std::ostringstream os;
    os << "Wigner function integrates to " << total;
    fail(ErrorCode::GridTooCoarse, os.str());
  }
  return g;
}

namespace {

double border_max(const Eigen::MatrixXd& v) {
  const auto r = v.rows(), c = v.cols();
  return std::max({v.row(0).cwiseAbs().maxCoeff(), v.row(r - 1).cwiseAbs().maxCoeff(),
                   v.col(0).cwiseAbs().maxCoeff(), v.col(c - 1).cwiseAbs().maxCoeff()});
}

void check_border(const Eigen::MatrixXd& v, const char* what) {
  const double b = border_max(v);
  if (b > kBorder) {
    std::ostringstream os;
    os << what << " reaches " << b << " at the grid border";
    fail(ErrorCode::GridTooCoarse, os.str());
  }
}

// Multiplies the spectrum of each column (axis = 0) or row (axis = 1) by
// exp(-var k^2 / 2).
void smooth_axis(Eigen::MatrixXd& v, const Axis& a, double var, int axis) {
  if (var <= 0) return;
  const Eigen::Index n = a.count;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(static_cast<std::size_t>(n)), spec;
  std::vector<double> kernel(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double idx = static_cast<double>(i < n / 2 ? i : i - n);
    const double k = 2.0 * kPi * idx / (static_cast<double>(n) * a.spacing);
    kernel[static_cast<std::size_t>(i)] = std::exp(-0.5 * var * k * k);
  }
  const Eigen::Index lines = axis == 0 ? v.cols() : v.rows();
  for (Eigen::Index line = 0; line < lines; ++line) {
    for (Eigen::Index i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = axis == 0 ? v(i, line) : v(line, i);
    fft.fwd(spec, in);
    for (Eigen::Index i = 0; i < n; ++i) spec[static_cast<std::size_t>(i)] *= kernel[static_cast<std::size_t>(i)];
    fft.inv(in, spec);
    for (Eigen::Index i = 0; i < n; ++i) (axis == 0 ? v(i, line) : v(line, i)) = in[static_cast<std::size_t>(i)].real();
  }
}

}  // namespace

PhaseSpaceGrid gaussian_smooth(const PhaseSpaceGrid& w, double var_x, double var_p) {
  require(var_x >= 0 && var_p >= 0 && std::isfinite(var_x) && std::isfinite(var_p), ErrorCode::InvalidArgument,
          "smoothing variances must be finite and >= 0");
  require(w.values.rows() == w.x.count && w.values.cols() == w.p.count && w.x.count > 1 && w.p.count > 1,
          ErrorCode::DimMismatch, "grid values do not match its axes");
  check_border(w.values, "input grid");
  PhaseSpaceGrid out = w;
  smooth_axis(out.values, w.x, var_x, 0);
  smooth_axis(out.values, w.p, var_p, 1);
  check_border(out.values, "smoothed grid");
  return out;
}

PhaseSpaceGrid husimi(const PhaseSpaceGrid& w, double sigma) {
  require(sigma > 0, ErrorCode::InvalidArgument, "Husimi width must be positive");
  return gaussian_smooth(w, sigma * sigma, 1.0 / (4.0 * sigma * sigma));
}

PhaseSpaceGrid sequential_xp(const PhaseSpaceGrid& w, const GaussianDetector& det_x, const GaussianDetector& det_p,
                             MeasurementOrder order) {
  const double ix = det_x.sigma_imp * det_x.sigma_imp, ip = det_p.sigma_imp * det_p.sigma_imp;
  if (order == MeasurementOrder::XThenP) return gaussian_smooth(w, ix, ip + det_x.sigma_ba * det_x.sigma_ba);
  return gaussian_smooth(w, ix + det_p.sigma_ba * det_p.sigma_ba, ip);
}

PhaseSpaceGrid simultaneous_xp(const PhaseSpaceGrid& w, const GaussianDetector& det_x, const GaussianDetector& det_p) {
  const double vx = det_x.sigma_imp * det_x.sigma_imp + det_p.sigma_ba * det_p.sigma_ba / 4.0;
  const double vp = det_p.sigma_imp * det_p.sigma_imp + det_x.sigma_ba * det_x.sigma_ba / 4.0;
  return gaussian_smooth(w, vx, vp);
}

std::pair<GaussianDetector, GaussianDetector> husimi_detectors(double sigma) {
  require(sigma > 0, ErrorCode::InvalidArgument, "Husimi width must be positive");
  return {GaussianDetector::minimal(sigma / std::numbers::sqrt2),
          GaussianDetector::minimal(1.0 / (2.0 * std::numbers::sqrt2 * sigma))};
}

double negativity_volume(const PhaseSpaceGrid& w) { return w.values.cwiseAbs().sum() * w.cell() - 1.0; }

Eigen::VectorXcd momentum_amplitudes(const Wavefunction1D& psi, const Axis& p) {
  Eigen::VectorXcd out(p.count);
  const double dx = psi.axis().spacing;
  for (Eigen::Index j = 0; j < p.count; ++j) {
    std::complex<double> s = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) s += std::polar(1.0, -p.at(j) * psi.axis().at(i)) * psi.amplitudes()(i);
    out(j) = s * dx / std::sqrt(2.0 * kPi);
  }
  return out;
}

Eigen::VectorXd momentum_density(const Wavefunction1D& psi, const Axis& p) {
  return momentum_amplitudes(psi, p).cwiseAbs2();
}

void write_grid_csv(const PhaseSpaceGrid& g, std::ostream& out) {
  out << "# x,p,value\n";
  char buf[96];
  for (Eigen::Index i = 0; i < g.x.count; ++i) {
    for (Eigen::Index j = 0; j < g.p.count; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.x.at(i), g.p.at(j), g.values(i, j));
      out << buf;
    }
  }
}

namespace {

constexpr char kMagic[8] = {'K', 'Q', 'P', 'D', 'G', 'R', 'I', 'D'};

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  in.read(reinterpret_cast<char*>(b), sizeof(T));
  require(static_cast<bool>(in), ErrorCode::InvalidArgument, "truncated grid file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void write_grid_binary(const PhaseSpaceGrid& g, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_le(out, g.x.origin);
  put_le(out, g.x.spacing);
  put_le(out, static_cast<std::uint64_t>(g.x.count));
  put_le(out, g.p.origin);
  put_le(out, g.p.spacing);
  put_le(out, static_cast<std::uint64_t>(g.p.count));
  for (Eigen::Index i = 0; i < g.x.count; ++i)
    for (Eigen::Index j = 0; j < g.p.count; ++j) put_le(out, g.values(i, j));
}

PhaseSpaceGrid read_grid_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, sizeof magic) == 0, ErrorCode::InvalidArgument,
          "not a grid file");
  PhaseSpaceGrid g;
  g.x.origin = get_le<double>(in);
  g.x.spacing = get_le<double>(in);
  g.x.count = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
  g.p.origin = get_le<double>(in);
  g.p.spacing = get_le<double>(in);
  g.p.count = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
  require(g.x.count > 0 && g.p.count > 0 && g.x.count < (1 << 20) && g.p.count < (1 << 20),
          ErrorCode::InvalidArgument, "grid file has implausible axis counts");
  g.values.resize(g.x.count, g.p.count);
  for (Eigen::Index i = 0; i < g.x.count; ++i)
    for (Eigen::Index j = 0; j < g.p.count; ++j) g.values(i, j) = get_le<double>(in);
  return g;
}

}  // namespace kqpd
