#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "sensched/errors.hpp"

namespace sensched {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues at or above -kPsdTolerance are treated as zero.
inline constexpr double kPsdTolerance = 1e-8;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

inline bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  Eigen::LLT<Matrix> llt(symmetrize(m));
  return llt.info() == Eigen::Success && min_eigenvalue(m) > 0.0;
}

/// Returns the symmetrized input, with eigenvalues in [-tol, 0) clipped to 0.
/// Throws DomainError if any eigenvalue is below -tol.
inline Matrix project_psd_checked(const Matrix& m, const std::string& what,
                                  double tol = kPsdTolerance) {
  if (m.rows() != m.cols()) throw DomainError(what + ": matrix is not square");
  Matrix s = symmetrize(m);
  if (s.size() == 0) return s;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() == Eigen::Success) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector& ev = es.eigenvalues();
  if (ev(0) < -tol) {
    throw DomainError(what + ": matrix not positive semidefinite (min eigenvalue " +
                      std::to_string(ev(0)) + ")");
  }
  Vector clipped = ev.cwiseMax(0.0);
  return symmetrize(es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose());
}

/// Inverse of a symmetric positive-definite matrix through Cholesky.
inline Matrix spd_inverse(const Matrix& m, const std::string& what) {
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) {
    throw DomainError(what + ": matrix not positive definite");
  }
  return symmetrize(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

/// Inverse through a symmetric eigendecomposition with eigenvalues floored at
/// `floor`. Used on solver output that is PD only up to tolerance.
inline Matrix floored_inverse(const Matrix& m, double floor = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector inv = es.eigenvalues().cwiseMax(floor).cwiseInverse();
  return symmetrize(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

/// Operator 2-norm.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// Symmetric vectorization: lower triangle, column-major, off-diagonals scaled
// by sqrt(2) so that svec(A).dot(svec(B)) == trace(A * B).

inline constexpr int svec_dim(int order) { return order * (order + 1) / 2; }

/// Position of entry (row, col), row >= col, inside svec of an order-k matrix.
inline int svec_index(int order, int row, int col) {
  if (row < col) std::swap(row, col);
  return col * order - col * (col - 1) / 2 + (row - col);
}

inline Vector svec(const Matrix& m) {
  const int k = static_cast<int>(m.rows());
  Vector v(svec_dim(k));
  int idx = 0;
  for (int j = 0; j < k; ++j) {
    v(idx++) = m(j, j);
    for (int i = j + 1; i < k; ++i) v(idx++) = M_SQRT2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

template <typename Derived>
Matrix smat(const Eigen::MatrixBase<Derived>& v, int order) {
  Matrix m(order, order);
  int idx = 0;
  for (int j = 0; j < order; ++j) {
    m(j, j) = v(idx++);
    for (int i = j + 1; i < order; ++i) {
      const double x = v(idx++) * M_SQRT1_2;
      m(i, j) = x;
      m(j, i) = x;
    }
  }
  return m;
}

/// Order k such that svec_dim(k) == dim, or -1.
inline int order_from_svec_dim(int dim) {
  int k = static_cast<int>(std::lround((std::sqrt(8.0 * dim + 1.0) - 1.0) / 2.0));
  return svec_dim(k) == dim ? k : -1;
}

}  // namespace sensched
