#pragma once

// Small dense linear-algebra helpers shared by the inference modules.
// Matrices here are tiny (one row/column per metric), so everything is
// dynamic-size Eigen and nothing is tuned for large n.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bayesdecide {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace linalg {

inline constexpr double kSymmetryRelTol = 1e-10;
inline constexpr double kPsdRelTol = 1e-10;
inline constexpr double kRidgeRel = 1e-8;

inline double mean_diagonal(const Matrix &m) {
  return m.rows() == 0 ? 0.0 : m.trace() / static_cast<double>(m.rows());
}

inline bool is_square(const Matrix &m) { return m.rows() == m.cols(); }

/// Symmetric within `rel` of the largest absolute entry.
inline bool is_symmetric(const Matrix &m, double rel = kSymmetryRelTol) {
  if (!is_square(m))
    return false;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel * scale;
}

inline Matrix symmetrize(const Matrix &m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Matrix &m) {
  if (m.rows() == 0)
    return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// PSD up to round-off: min eigenvalue >= -rel * trace / n.
inline bool is_psd(const Matrix &m, double rel = kPsdRelTol) {
  if (!is_square(m))
    return false;
  if (m.rows() == 0)
    return true;
  return min_eigenvalue(m) >= -rel * std::abs(mean_diagonal(m));
}

/// Adds kRidgeRel * (trace/n) * I when the matrix is numerically singular.
/// Returns false when the matrix has zero trace and cannot be repaired.
inline bool ridge_repair(Matrix &m) {
  const double scale = mean_diagonal(m);
  if (!(scale > 0.0))
    return false;
  if (min_eigenvalue(m) < kRidgeRel * scale)
    m.diagonal().array() += kRidgeRel * scale;
  return true;
}

/// Inverse of a symmetric positive-definite matrix via LDLT, symmetrized.
inline Matrix spd_inverse(const Matrix &m) {
  Eigen::LDLT<Matrix> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("matrix is not positive definite");
  return symmetrize(ldlt.solve(Matrix::Identity(m.rows(), m.cols())));
}

/// Symmetric square root factor L with L * L^T = m, tolerant of PSD input.
inline Matrix psd_sqrt(const Matrix &m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

} // namespace linalg
} // namespace bayesdecide
