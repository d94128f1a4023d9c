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

#include "kqpd/fcs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kqpd/errors.hpp"
#include "kqpd/parallel.hpp"

namespace kqpd {

void FCSScenario::validate() const {
  require(slices >= 1, ErrorCode::InvalidArgument, "need at least one time slice");
  require(std::isfinite(duration) && duration > 0, ErrorCode::InvalidArgument, "duration must be positive");
  require(std::isfinite(gamma), ErrorCode::InvalidArgument, "gamma must be finite");
  require(counted.dim() == hamiltonian.dim() && counted.dim() == rho0.dim(), ErrorCode::DimMismatch,
          "counted observable, Hamiltonian and state differ in dimension");
}

namespace {

// H + gamma A. For gamma = 0 the Hamiltonian is used untouched, so a
// scenario with a shifted Hamiltonian and gamma = 0 is bit-identical to the
// same scenario expressed through gamma.
HermitianObservable shifted_hamiltonian(const FCSScenario& s) {
  if (s.gamma == 0.0) return s.hamiltonian;
  return HermitianObservable::from_matrix(s.hamiltonian.matrix() + s.gamma * s.counted.matrix());
}

ComplexMatrix kick(const HermitianObservable& a, double c) {
  ComplexVector ph(a.dim());
  for (Eigen::Index k = 0; k < a.dim(); ++k) ph(k) = std::polar(1.0, -c * a.eigenvalues()(k));
  return a.eigenvectors() * ph.asDiagonal() * a.eigenvectors().adjoint();
}

double binning_scale(const FCSScenario& s) {
  return s.counted.eigenvalues().cwiseAbs().maxCoeff() * s.duration;
}

void check_trajectory_budget(const FCSScenario& s, const FCSOptions& opt) {
  const double pairs = std::pow(static_cast<double>(s.counted.dim()), 2.0 * s.slices);
  if (pairs > static_cast<double>(opt.trajectory_budget)) {
    std::ostringstream os;
    os << "trajectory route needs d^(2N) = " << pairs << " pairs, budget is " << opt.trajectory_budget;
    fail(ErrorCode::ScenarioTooLarge, os.str());
  }
}

}  // namespace

std::complex<double> fcs_characteristic(const FCSScenario& s, double lambda) {
  s.validate();
  const HermitianObservable h = shifted_hamiltonian(s);
  const double dt = s.dt();
  const ComplexMatrix u = propagator(h, dt).matrix();
  // K(mu) uses half-kicks mu dt / 2 on both sides of each slice.
  const ComplexMatrix kick_left = kick(s.counted, 0.25 * lambda * dt);
  const ComplexMatrix kick_right = kick(s.counted, -0.25 * lambda * dt);
  const ComplexMatrix slice_left = kick_left * u * kick_left;
  const ComplexMatrix slice_right = kick_right * u * kick_right;
  ComplexMatrix left = ComplexMatrix::Identity(s.rho0.dim(), s.rho0.dim());
  ComplexMatrix right = left;
  for (int j = 0; j < s.slices; ++j) {
    left = slice_left * left;
    right = slice_right * right;
  }
  return (left * s.rho0.matrix() * right.adjoint()).trace();
}

std::vector<double> fcs_probe_weights(const FCSScenario& s) {
  std::vector<double> c(static_cast<std::size_t>(s.slices) + 1, s.dt());
  c.front() = c.back() = 0.5 * s.dt();
  return c;
}

SubsequentScenario fcs_trajectory_scenario(const FCSScenario& s) {
  s.validate();
  const HermitianObservable h = shifted_hamiltonian(s);
  const UnitaryPropagator u = propagator(h, s.dt());
  SubsequentScenario out{s.rho0, {}, {}};
  out.steps.push_back(Step{UnitaryPropagator::identity(s.rho0.dim()), s.counted});
  for (int j = 0; j < s.slices; ++j) out.steps.push_back(Step{u, s.counted});
  for (int j = 0; j <= s.slices; ++j) out.times.push_back(j * s.dt());
  return out;
}

std::vector<double> fcs_support(const FCSScenario& s, const FCSOptions& opt) {
  s.validate();
  const auto& ev = s.counted.eigenvalues();
  const double tol = opt.engine.tol.binning;
  const double scale = binning_scale(s);
  std::vector<double> mids, eigen(ev.data(), ev.data() + ev.size());
  for (Eigen::Index a = 0; a < ev.size(); ++a)
    for (Eigen::Index b = 0; b < ev.size(); ++b) mids.push_back(0.5 * (ev(a) + ev(b)));
  mids = ValueBinner(mids, tol, scale).centers();
  eigen = ValueBinner(eigen, tol, scale).centers();

  const auto c = fcs_probe_weights(s);
  std::vector<double> support{0.0};
  for (std::size_t l = 0; l < c.size(); ++l) {
    const auto& vals = l + 1 == c.size() ? eigen : mids;
    std::vector<double> next;
    next.reserve(support.size() * vals.size());
    for (double m : support)
      for (double v : vals) next.push_back(m + c[l] * v);
    support = ValueBinner(std::move(next), tol, scale).centers();
    if (support.size() > opt.max_support) {
      std::ostringstream os;
      os << "spectral route support exceeds " << opt.max_support << " points";
      fail(ErrorCode::ScenarioTooLarge, os.str());
    }
  }
  return support;
}

namespace {

QuasiDistribution spectral_distribution(const FCSScenario& s, const FCSOptions& opt) {
  const std::vector<double> support = fcs_support(s, opt);
  const auto n = support.size();
  const double scale = std::max(binning_scale(s), 1e-300);
  auto finish = [&](Eigen::VectorXd w, double imag) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) pts(static_cast<Eigen::Index>(i), 0) = support[i];
    QuasiDistribution q(pts, std::move(w), imag);
    if (std::abs(q.total_weight() - 1.0) > opt.aliasing_tolerance) {
      std::ostringstream os;
      os << "spectral inversion recovers total weight " << q.total_weight();
      fail(ErrorCode::AliasingDetected, os.str());
    }
    return q;
  };
  if (n == 1) return finish(Eigen::VectorXd::Ones(1), std::abs(fcs_characteristic(s, 0.0).imag()));

  const double lo = support.front(), range = support.back() - support.front();
  double gap = range;
  for (std::size_t i = 1; i < n; ++i) gap = std::min(gap, support[i] - support[i - 1]);
  bool lattice = true;
  for (double v : support) {
    const double k = (v - lo) / gap;
    if (std::abs(k - std::round(k)) > 1e-6) lattice = false;
  }
  const double lattice_count = std::round(range / gap) + 1;

  if (lattice && lattice_count <= 4.0 * static_cast<double>(opt.max_support)) {
    // Exact inversion: sampling at multiples of 2 pi / (K h) turns the
    // Fourier sum into a length-K DFT.
    const auto k = static_cast<int>(lattice_count);
    std::vector<std::complex<double>> samples(static_cast<std::size_t>(k));
    const double dl = 2.0 * std::numbers::pi / (k * gap);
    parallel_for(k, opt.engine.threads, [&](int j) {
      const double l = j * dl;
      samples[static_cast<std::size_t>(j)] = fcs_characteristic(s, l) * std::polar(1.0, l * lo);
    });
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    double imag = 0.0, stray = 0.0;
    std::size_t next_support = 0;
    for (int m = 0; m < k; ++m) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < k; ++j)
        acc += samples[static_cast<std::size_t>(j)] *
               std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(j) * m) % k) / k);
      acc /= static_cast<double>(k);
      const double at = lo + m * gap;
      if (next_support < n && std::abs(support[next_support] - at) <= 1e-6 * gap) {
        w(static_cast<Eigen::Index>(next_support++)) = acc.real();
        imag = std::max(imag, std::abs(acc.imag()));
      } else {
        stray += std::abs(acc);
      }
    }
    require(next_support == n, ErrorCode::NumericalFailure, "lattice does not cover the support");
    if (stray > opt.aliasing_tolerance) {
      std::ostringstream os;
      os << "spectral inversion puts weight " << stray << " off the support";
      fail(ErrorCode::AliasingDetected, os.str());
    }
    return finish(std::move(w), imag);
  }

  // Incommensurate support: least squares on a uniform lambda grid whose
  // step keeps all support differences below one period.
  const int samples = static_cast<int>(std::max<std::size_t>(2 * n, 16));
  const double dl = 2.0 * std::numbers::pi / (1.5 * range);
  std::vector<std::complex<double>> lam(static_cast<std::size_t>(samples));
  parallel_for(samples, opt.engine.threads,
               [&](int j) { lam[static_cast<std::size_t>(j)] = fcs_characteristic(s, j * dl); });
  Eigen::MatrixXd a(2 * samples, static_cast<Eigen::Index>(n));
  Eigen::VectorXd b(2 * samples);
  for (int j = 0; j < samples; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      a(j, static_cast<Eigen::Index>(i)) = std::cos(j * dl * support[i]);
      a(samples + j, static_cast<Eigen::Index>(i)) = -std::sin(j * dl * support[i]);
    }
    b(j) = lam[static_cast<std::size_t>(j)].real();
    b(samples + j) = lam[static_cast<std::size_t>(j)].imag();
  }
  Eigen::VectorXd w = a.colPivHouseholderQr().solve(b);
  const double residual = (a * w - b).cwiseAbs().maxCoeff();
  if (!(residual <= opt.aliasing_tolerance)) {
    std::ostringstream os;
    os << "least-squares inversion leaves residual " << residual << " (support of " << n << " points)";
    fail(ErrorCode::AliasingDetected, os.str());
  }
  (void)scale;
  return finish(std::move(w), 0.0);
}

}  // namespace

QuasiDistribution fcs_distribution(const FCSScenario& s, FCSMethod method, const FCSOptions& opt) {
  s.validate();
  if (method == FCSMethod::Spectral) return spectral_distribution(s, opt);
  check_trajectory_budget(s, opt);
  const QuasiDistribution q = trajectory_sum(fcs_trajectory_scenario(s), {}, opt.engine);
  const auto c = fcs_probe_weights(s);
  Eigen::MatrixXd proj(1, static_cast<Eigen::Index>(c.size()));
  for (std::size_t l = 0; l < c.size(); ++l) proj(0, static_cast<Eigen::Index>(l)) = c[l];
  return project(q, proj, opt.engine.tol.binning, binning_scale(s));
}

SignedGaussianMixture measured_fcs(const FCSScenario& s, const GaussianDetector& det, const FCSOptions& opt) {
  s.validate();
  check_trajectory_budget(s, opt);
  const SubsequentScenario traj = fcs_trajectory_scenario(s);
  const auto c = fcs_probe_weights(s);
  const auto& ev = s.counted.eigenvalues();
  std::vector<double> centers;
  std::vector<std::complex<double>> weights;
  const double s2 = det.sigma_ba * det.sigma_ba;
  for_each_trajectory_pair(
      traj,
      [&](const TrajectoryPair& p) {
        double mid = 0.0, diff = 0.0;
        for (std::size_t l = 0; l < c.size(); ++l) {
          const double al = ev(p.left[l]), ar = ev(p.right[l]);
          mid += c[l] * 0.5 * (al + ar);
          diff += c[l] * (al - ar);
        }
        centers.push_back(mid);
        weights.push_back(p.amplitude * std::exp(-0.5 * s2 * diff * diff));
      },
      opt.engine);

  Eigen::MatrixXd pts(static_cast<Eigen::Index>(centers.size()), 1);
  Eigen::VectorXcd w(static_cast<Eigen::Index>(centers.size()));
  for (std::size_t i = 0; i < centers.size(); ++i) {
    pts(static_cast<Eigen::Index>(i), 0) = centers[i];
    w(static_cast<Eigen::Index>(i)) = weights[i];
  }
  const QuasiDistribution q = bin_points(pts, w, opt.engine.tol.binning, nullptr, binning_scale(s));
  if (q.max_imag_residual() > opt.engine.tol.imag_residual) {
    std::ostringstream os;
    os << "residual imaginary weight " << q.max_imag_residual();
    fail(ErrorCode::ToleranceExceeded, os.str());
  }
  SignedGaussianMixture m(q.support(), Eigen::MatrixXd::Constant(q.size(), 1, det.sigma_imp), q.weights());
  if (!det.heisenberg_ok()) m.add_warning("HeisenbergViolation: detector has sigma_imp*sigma_ba < 1/2");
  return m;
}

}  // namespace kqpd
