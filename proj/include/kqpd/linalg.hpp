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

// Dense complex linear algebra: Hermitian observables with a cached
// eigensystem, density matrices, unitary propagators and Kraus channels.
// Everything here is templated on the real scalar type; the rest of the
// library works with the double-precision aliases at the bottom.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kqpd/errors.hpp"
#include "kqpd/tolerances.hpp"

namespace kqpd {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Derived>
typename Derived::RealScalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(std::real(m(i, j))) || !std::isfinite(std::imag(m(i, j)))) return false;
  return true;
}

template <typename Real>
class BasicHermitianObservable;

template <typename Real>
BasicHermitianObservable<Real> eig_hermitian(const CMatrix<Real>& m, const Tolerances& tol = {});

namespace detail {

template <typename Derived>
void check_square_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << " must be a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    fail(ErrorCode::DimMismatch, os.str());
  }
  require(all_finite(m), ErrorCode::InvalidArgument, std::string(what) + " has non-finite entries");
}

/// Throws NotHermitian naming the worst entry when |M - M^dagger| exceeds
/// tol * max|M|.
template <typename Derived>
void check_hermitian(const Eigen::MatrixBase<Derived>& m, double tol, const char* what) {
  using Real = typename Derived::RealScalar;
  const Real scale = max_abs(m);
  Real worst = 0;
  Eigen::Index wi = 0, wj = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i; j < m.cols(); ++j) {
      const Real gap = std::abs(m(i, j) - std::conj(m(j, i)));
      if (gap > worst) {
        worst = gap;
        wi = i;
        wj = j;
      }
    }
  }
  if (worst > tol * scale) {
    std::ostringstream os;
    os.precision(17);
    os << what << " is not Hermitian: entry (" << wi << "," << wj << ") = " << m(wi, wj) << " but entry (" << wj
       << "," << wi << ") = " << m(wj, wi) << " (asymmetry " << worst << ")";
    fail(ErrorCode::NotHermitian, os.str());
  }
}

template <typename Derived>
typename Derived::RealScalar identity_defect(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  const auto n = m.rows();
  return max_abs(m - CMatrix<Real>::Identity(n, n));
}

}  // namespace detail

/// Hermitian matrix together with its eigensystem. Eigenvalues ascend; each
/// eigenvector has its largest-magnitude component real and positive (the
/// lowest index wins ties). Eigenvalues closer than
/// Tolerances::binning * (spectral range) form one level.
template <typename Real>
class BasicHermitianObservable {
 public:
  using Matrix = CMatrix<Real>;
  using Vector = RVector<Real>;

  BasicHermitianObservable() = default;

  static BasicHermitianObservable from_matrix(const Matrix& m, const Tolerances& tol = {});

  const Matrix& matrix() const { return matrix_; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }
  Eigen::Index dim() const { return matrix_.rows(); }

  Real min_eigenvalue() const { return eigenvalues_(0); }
  Real max_eigenvalue() const { return eigenvalues_(eigenvalues_.size() - 1); }
  Real spectral_range() const { return max_eigenvalue() - min_eigenvalue(); }

  /// Distinct eigenvalues (level means), ascending.
  const std::vector<Real>& levels() const { return levels_; }
  /// Level index of eigenvector k.
  int level_of(Eigen::Index k) const { return level_of_[static_cast<std::size_t>(k)]; }

  /// Spectral projector onto one level.
  Matrix projector(int level) const {
    Matrix p = Matrix::Zero(dim(), dim());
    for (Eigen::Index k = 0; k < dim(); ++k)
      if (level_of(k) == level) p += eigenvectors_.col(k) * eigenvectors_.col(k).adjoint();
    return p;
  }

 private:
  friend BasicHermitianObservable eig_hermitian<Real>(const Matrix& m, const Tolerances& tol);

  Matrix matrix_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  std::vector<Real> levels_;
  std::vector<int> level_of_;
};

template <typename Real>
BasicHermitianObservable<Real> eig_hermitian(const CMatrix<Real>& m, const Tolerances& tol) {
  detail::check_square_finite(m, "observable");
  detail::check_hermitian(m, tol.hermitian, "observable");

  const CMatrix<Real> sym = (m + m.adjoint()) / Real(2);
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> solver(sym);
  if (solver.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "Hermitian eigensolver did not converge");

  BasicHermitianObservable<Real> obs;
  CMatrix<Real> v = solver.eigenvectors();
  const auto n = v.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    const Real peak = v.col(c).cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    while (std::abs(v(pivot, c)) < peak - Real(1e-10)) ++pivot;
    const std::complex<Real> phase = std::conj(v(pivot, c)) / std::abs(v(pivot, c));
    v.col(c) *= phase;
    v(pivot, c) = std::abs(v(pivot, c));
  }

  const Real scale = max_abs(m);
  const Real orth = detail::identity_defect(v.adjoint() * v);
  const Real resid = max_abs(m * v - v * solver.eigenvalues().template cast<std::complex<Real>>().asDiagonal());
  if (orth > tol.eigen_residual || resid > tol.eigen_residual * scale) {
    std::ostringstream os;
    os << "eigendecomposition check failed (orthonormality defect " << orth << ", residual " << resid << ")";
    fail(ErrorCode::NumericalFailure, os.str());
  }

  obs.matrix_ = m;
  obs.eigenvalues_ = solver.eigenvalues();
  obs.eigenvectors_ = std::move(v);

  // Scalar multiples of the identity have zero range; fall back to the
  // eigenvalue magnitude so rounding noise still collapses into one level.
  const Real range = obs.eigenvalues_(n - 1) - obs.eigenvalues_(0);
  const Real merge = tol.binning * std::max(range, obs.eigenvalues_.cwiseAbs().maxCoeff());
  obs.level_of_.assign(static_cast<std::size_t>(n), 0);
  std::vector<Real> sums;
  std::vector<int> counts;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Real lam = obs.eigenvalues_(k);
    if (k == 0 || lam - obs.eigenvalues_(k - 1) > merge) {
      sums.push_back(0);
      counts.push_back(0);
    }
    sums.back() += lam;
    counts.back() += 1;
    obs.level_of_[static_cast<std::size_t>(k)] = static_cast<int>(sums.size()) - 1;
  }
  for (std::size_t l = 0; l < sums.size(); ++l) obs.levels_.push_back(sums[l] / counts[l]);
  return obs;
}

template <typename Real>
BasicHermitianObservable<Real> BasicHermitianObservable<Real>::from_matrix(const Matrix& m, const Tolerances& tol) {
  return eig_hermitian(m, tol);
}

/// Positive semidefinite, unit-trace, Hermitian.
template <typename Real>
class BasicDensityMatrix {
 public:
  using Matrix = CMatrix<Real>;

  static BasicDensityMatrix from_matrix(const Matrix& m, const Tolerances& tol = {}) {
    detail::check_square_finite(m, "density matrix");
    detail::check_hermitian(m, tol.hermitian, "density matrix");
    const Real tr = m.trace().real();
    if (std::abs(tr - Real(1)) > tol.trace) {
      std::ostringstream os;
      os << "density matrix trace is " << tr;
      fail(ErrorCode::NotDensityMatrix, os.str());
    }
    const Matrix sym = (m + m.adjoint()) / Real(2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -tol.positivity) {
      std::ostringstream os;
      os << "density matrix has negative eigenvalue " << es.eigenvalues()(0);
      fail(ErrorCode::NotDensityMatrix, os.str());
    }
    BasicDensityMatrix rho;
    rho.matrix_ = m;
    return rho;
  }

  /// |psi><psi| for a (renormalized) state vector.
  static BasicDensityMatrix pure(const CVector<Real>& psi) {
    require(psi.size() > 0 && psi.norm() > 0, ErrorCode::InvalidArgument, "pure state needs a nonzero vector");
    const CVector<Real> v = psi / psi.norm();
    BasicDensityMatrix rho;
    rho.matrix_ = v * v.adjoint();
    return rho;
  }

  static BasicDensityMatrix maximally_mixed(Eigen::Index dim) {
    BasicDensityMatrix rho;
    rho.matrix_ = Matrix::Identity(dim, dim) / Real(dim);
    return rho;
  }

  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }

 private:
  Matrix matrix_;
};

template <typename Real>
class BasicUnitaryPropagator {
 public:
  using Matrix = CMatrix<Real>;

  static BasicUnitaryPropagator from_matrix(const Matrix& u, std::string label = "U", const Tolerances& tol = {}) {
    detail::check_square_finite(u, "propagator");
    const Real defect = detail::identity_defect(u.adjoint() * u);
    if (defect > tol.unitary) {
      std::ostringstream os;
      os << "propagator '" << label << "' is not unitary (|U^dagger U - I| = " << defect << ")";
      fail(ErrorCode::NotUnitary, os.str());
    }
    BasicUnitaryPropagator p;
    p.matrix_ = u;
    p.label_ = std::move(label);
    return p;
  }

  static BasicUnitaryPropagator identity(Eigen::Index dim) {
    BasicUnitaryPropagator p;
    p.matrix_ = Matrix::Identity(dim, dim);
    p.label_ = "I";
    return p;
  }

  const Matrix& matrix() const { return matrix_; }
  const std::string& label() const { return label_; }
  Eigen::Index dim() const { return matrix_.rows(); }

 private:
  Matrix matrix_;
  std::string label_;
};

/// Trace-preserving operator-sum map rho -> sum_k K_k rho K_k^dagger.
template <typename Real>
class BasicKrausChannel {
 public:
  using Matrix = CMatrix<Real>;

  static BasicKrausChannel from_operators(std::vector<Matrix> ops, const Tolerances& tol = {}) {
    require(!ops.empty(), ErrorCode::InvalidArgument, "Kraus channel needs at least one operator");
    const auto n = ops.front().rows();
    Matrix completeness = Matrix::Zero(n, n);
    for (const auto& k : ops) {
      detail::check_square_finite(k, "Kraus operator");
      require(k.rows() == n, ErrorCode::DimMismatch, "Kraus operators differ in dimension");
      completeness += k.adjoint() * k;
    }
    const Real defect = detail::identity_defect(completeness);
    if (defect > tol.unitary) {
      std::ostringstream os;
      os << "Kraus channel is not trace preserving (|sum K^dagger K - I| = " << defect << ")";
      fail(ErrorCode::NotTracePreserving, os.str());
    }
    BasicKrausChannel ch;
    ch.ops_ = std::move(ops);
    return ch;
  }

  static BasicKrausChannel unitary(const BasicUnitaryPropagator<Real>& u) {
    BasicKrausChannel ch;
    ch.ops_ = {u.matrix()};
    return ch;
  }

  /// Complete dephasing in the eigenbasis of an observable (one Kraus
  /// operator per eigenvector).
  static BasicKrausChannel dephasing(const BasicHermitianObservable<Real>& basis) {
    BasicKrausChannel ch;
    const auto& v = basis.eigenvectors();
    for (Eigen::Index k = 0; k < v.cols(); ++k) ch.ops_.push_back(v.col(k) * v.col(k).adjoint());
    return ch;
  }

  const std::vector<Matrix>& operators() const { return ops_; }
  Eigen::Index dim() const { return ops_.front().rows(); }
  bool is_unitary() const { return ops_.size() == 1; }

 private:
  std::vector<Matrix> ops_;
};

/// exp(-i H t), hbar = 1.
template <typename Real>
BasicUnitaryPropagator<Real> propagator(const BasicHermitianObservable<Real>& h, Real t) {
  require(std::isfinite(t), ErrorCode::InvalidArgument, "propagation time must be finite");
  const auto& v = h.eigenvectors();
  CVector<Real> phases(h.dim());
  for (Eigen::Index k = 0; k < h.dim(); ++k) phases(k) = std::polar(Real(1), -h.eigenvalues()(k) * t);
  std::ostringstream label;
  label << "exp(-iHt), t=" << t;
  Tolerances loose;
  loose.unitary = 1e-9;
  return BasicUnitaryPropagator<Real>::from_matrix(v * phases.asDiagonal() * v.adjoint(), label.str(), loose);
}

/// Heisenberg-picture operator U^dagger A U.
template <typename Real>
CMatrix<Real> heisenberg(const CMatrix<Real>& a, const BasicUnitaryPropagator<Real>& u) {
  require(a.rows() == u.dim() && a.cols() == u.dim(), ErrorCode::DimMismatch,
          "operator and propagator dimensions differ");
  return u.matrix().adjoint() * a * u.matrix();
}

template <typename Real>
CMatrix<Real> heisenberg(const BasicHermitianObservable<Real>& a, const BasicUnitaryPropagator<Real>& u) {
  return heisenberg(a.matrix(), u);
}

/// Applies the operator sum to an arbitrary operator (not only states).
template <typename Real>
CMatrix<Real> apply_kraus(const BasicKrausChannel<Real>& e, const CMatrix<Real>& x) {
  require(x.rows() == e.dim() && x.cols() == e.dim(), ErrorCode::DimMismatch, "channel and operator dimensions differ");
  CMatrix<Real> out = CMatrix<Real>::Zero(x.rows(), x.cols());
  for (const auto& k : e.operators()) out.noalias() += k * x * k.adjoint();
  return out;
}

template <typename Real>
BasicDensityMatrix<Real> apply_channel(const BasicKrausChannel<Real>& e, const BasicDensityMatrix<Real>& rho,
                                       const Tolerances& tol = {}) {
  Tolerances out_tol = tol;
  out_tol.hermitian = std::max(tol.hermitian, 1e-10);
  return BasicDensityMatrix<Real>::from_matrix(apply_kraus(e, rho.matrix()), out_tol);
}

template <typename Real = double>
CMatrix<Real> pauli_x() {
  CMatrix<Real> m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

template <typename Real = double>
CMatrix<Real> pauli_y() {
  CMatrix<Real> m(2, 2);
  const std::complex<Real> i(0, 1);
  m << 0, -i, i, 0;
  return m;
}

template <typename Real = double>
CMatrix<Real> pauli_z() {
  CMatrix<Real> m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// n . sigma for a (normalized) Bloch direction.
template <typename Real = double>
CMatrix<Real> bloch_observable(Real nx, Real ny, Real nz) {
  const Real norm = std::sqrt(nx * nx + ny * ny + nz * nz);
  require(norm > 0, ErrorCode::InvalidArgument, "Bloch direction must be nonzero");
  return (nx * pauli_x<Real>() + ny * pauli_y<Real>() + nz * pauli_z<Real>()) / norm;
}

using ComplexMatrix = CMatrix<double>;
using ComplexVector = CVector<double>;
using RealVector = RVector<double>;
using HermitianObservable = BasicHermitianObservable<double>;
using DensityMatrix = BasicDensityMatrix<double>;
using UnitaryPropagator = BasicUnitaryPropagator<double>;
using KrausChannel = BasicKrausChannel<double>;

}  // namespace kqpd
