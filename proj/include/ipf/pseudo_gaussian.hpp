#ifndef IPF_PSEUDO_GAUSSIAN_HPP
#define IPF_PSEUDO_GAUSSIAN_HPP

#include <vector>

#include "ipf/model.hpp"

namespace ipf {

/// Pivot threshold for Cholesky factorizations, relative to the largest
/// diagonal entry of the matrix being factored.
inline constexpr double kCholeskyPivotTolerance = 1e-12;

/**
 * Completed-square form of a prior quadratic plus a linear(ized) observation
 * quadratic:
 *
 *   (x-mu)^T P^{-1} (x-mu)/2 + (Hx-z)^T R^{-1} (Hx-z)/2
 *     = (x-mean)^T Sigma^{-1} (x-mean)/2 + phi
 *
 * with Sigma = chol chol^T and innov_cov = H P H^T + R.
 *
 * When `diagonal` is set, sigma_inv, chol, and innov_cov hold only their
 * diagonals as single columns; use the *_dense() accessors for full matrices.
 */
struct PseudoGaussian {
  bool diagonal = false;
  Matrix sigma_inv;
  Vector mean;
  Matrix chol;
  double phi = 0.0;
  Matrix innov_cov;

  Index dim() const { return mean.size(); }

  Matrix sigma_inv_dense() const;
  Matrix chol_dense() const;
  Matrix innov_cov_dense() const;
  Matrix sigma_dense() const;

  /// (x-mean)^T Sigma^{-1} (x-mean)/2
  double quadratic(const Vector& x) const;
};

/// Linear map whose row r reads only state component `component[r]` with
/// coefficient `coeff[r]`; component -1 marks an all-zero row.
struct ComponentwiseLinear {
  std::vector<Index> component;
  Vector coeff;
};

/// Returns the componentwise form of H when every row and every column has at
/// most one nonzero entry.
std::optional<ComponentwiseLinear> as_componentwise(const Matrix& H);

/// Diagonal prior and observation covariances, dense H. Switches to the
/// diagonal path when H has at most one nonzero per row and per column.
PseudoGaussian complete_squares(const Vector& prior_mean, const Vector& prior_cov_diag, const Matrix& H,
                                const Vector& qsq_diag, const Vector& z);

/// Diagonal fast path. Falls back to the dense path when two rows read the
/// same component.
PseudoGaussian complete_squares(const Vector& prior_mean, const Vector& prior_cov_diag,
                                const ComponentwiseLinear& H, const Vector& qsq_diag, const Vector& z);

/// Fully dense form: prior covariance P and observation covariance R are
/// arbitrary SPD matrices.
PseudoGaussian complete_squares_dense(const Vector& prior_mean, const Matrix& prior_cov, const Matrix& H,
                                      const Matrix& obs_cov, const Vector& z);

/// mean + chol * xi
Vector solve_reference(const PseudoGaussian& pg, const Vector& xi);

/// log det chol = sum_i log chol_ii
double chol_logdet(const PseudoGaussian& pg);

/// Lower Cholesky factor of an SPD matrix; throws SingularCovariance when a
/// pivot falls below kCholeskyPivotTolerance times the largest diagonal entry.
Matrix spd_cholesky(const Matrix& S);

/// Inverse of an SPD matrix through spd_cholesky.
Matrix spd_inverse(const Matrix& S);

}  // namespace ipf

#endif  // IPF_PSEUDO_GAUSSIAN_HPP
