#include "ipf/pseudo_gaussian.hpp"

#include <cmath>
#include <stdexcept>

#include "ipf/errors.hpp"

namespace ipf {

namespace {

void check_pivots(const Vector& pivots, double scale, const char* what) {
  const double limit = kCholeskyPivotTolerance * scale;
  for (Index i = 0; i < pivots.size(); ++i) {
    if (!(pivots[i] > limit) || !std::isfinite(pivots[i]))
      throw SingularCovariance(std::string(what) + ": Cholesky pivot below threshold");
  }
}

}  // namespace

Matrix spd_cholesky(const Matrix& S) {
  const Index n = S.rows();
  if (n == 0) return Matrix(0, 0);
  const double scale = S.diagonal().cwiseAbs().maxCoeff();
  Matrix L = Matrix::Zero(n, n);
  // Plain outer-product Cholesky so each pivot can be checked as it appears.
  for (Index j = 0; j < n; ++j) {
    double pivot = S(j, j);
    for (Index p = 0; p < j; ++p) pivot -= L(j, p) * L(j, p);
    if (!(pivot > kCholeskyPivotTolerance * scale) || !std::isfinite(pivot))
      throw SingularCovariance("cholesky: pivot below threshold");
    L(j, j) = std::sqrt(pivot);
    for (Index i = j + 1; i < n; ++i) {
      double s = S(i, j);
      for (Index p = 0; p < j; ++p) s -= L(i, p) * L(j, p);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

Matrix spd_inverse(const Matrix& S) {
  const Matrix L = spd_cholesky(S);
  const Index n = S.rows();
  Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  Matrix inv = Linv.transpose() * Linv;
  return 0.5 * (inv + inv.transpose());
}

Matrix PseudoGaussian::sigma_inv_dense() const {
  return diagonal ? Matrix(sigma_inv.col(0).asDiagonal()) : sigma_inv;
}

Matrix PseudoGaussian::chol_dense() const { return diagonal ? Matrix(chol.col(0).asDiagonal()) : chol; }

Matrix PseudoGaussian::innov_cov_dense() const {
  return diagonal ? Matrix(innov_cov.col(0).asDiagonal()) : innov_cov;
}

Matrix PseudoGaussian::sigma_dense() const {
  if (diagonal) return Matrix(chol.col(0).array().square().matrix().asDiagonal());
  return chol * chol.transpose();
}

double PseudoGaussian::quadratic(const Vector& x) const {
  const Vector d = x - mean;
  if (diagonal) return 0.5 * (d.array().square() * sigma_inv.col(0).array()).sum();
  return 0.5 * d.dot(sigma_inv * d);
}

std::optional<ComponentwiseLinear> as_componentwise(const Matrix& H) {
  ComponentwiseLinear out;
  out.component.assign(static_cast<std::size_t>(H.rows()), -1);
  out.coeff = Vector::Zero(H.rows());
  std::vector<bool> used(static_cast<std::size_t>(H.cols()), false);
  for (Index r = 0; r < H.rows(); ++r) {
    for (Index c = 0; c < H.cols(); ++c) {
      if (H(r, c) == 0.0) continue;
      if (out.component[static_cast<std::size_t>(r)] != -1 || used[static_cast<std::size_t>(c)])
        return std::nullopt;
      out.component[static_cast<std::size_t>(r)] = c;
      out.coeff[r] = H(r, c);
      used[static_cast<std::size_t>(c)] = true;
    }
  }
  return out;
}

PseudoGaussian complete_squares(const Vector& prior_mean, const Vector& prior_cov_diag, const Matrix& H,
                                const Vector& qsq_diag, const Vector& z) {
  if (H.cols() != prior_mean.size() || H.rows() != z.size() || qsq_diag.size() != z.size() ||
      prior_cov_diag.size() != prior_mean.size())
    throw std::invalid_argument("complete_squares: dimension mismatch");
  if (auto cw = as_componentwise(H)) return complete_squares(prior_mean, prior_cov_diag, *cw, qsq_diag, z);
  return complete_squares_dense(prior_mean, Matrix(prior_cov_diag.asDiagonal()), H,
                                Matrix(qsq_diag.asDiagonal()), z);
}

PseudoGaussian complete_squares(const Vector& prior_mean, const Vector& prior_cov_diag,
                                const ComponentwiseLinear& H, const Vector& qsq_diag, const Vector& z) {
  const Index m = prior_mean.size();
  const Index k = z.size();
  if (prior_cov_diag.size() != m || static_cast<Index>(H.component.size()) != k || H.coeff.size() != k ||
      qsq_diag.size() != k)
    throw std::invalid_argument("complete_squares: dimension mismatch");
  if ((prior_cov_diag.array() <= 0.0).any() || (qsq_diag.array() <= 0.0).any())
    throw SingularCovariance("complete_squares: covariances must be strictly positive");

  std::vector<Index> row_of(static_cast<std::size_t>(m), -1);
  for (Index r = 0; r < k; ++r) {
    const Index c = H.component[static_cast<std::size_t>(r)];
    if (c < 0) continue;
    if (c >= m) throw std::invalid_argument("complete_squares: component index out of range");
    if (row_of[static_cast<std::size_t>(c)] != -1) {
      Matrix dense = Matrix::Zero(k, m);
      for (Index rr = 0; rr < k; ++rr) {
        const Index cc = H.component[static_cast<std::size_t>(rr)];
        if (cc >= 0) dense(rr, cc) = H.coeff[rr];
      }
      return complete_squares_dense(prior_mean, Matrix(prior_cov_diag.asDiagonal()), dense,
                                    Matrix(qsq_diag.asDiagonal()), z);
    }
    row_of[static_cast<std::size_t>(c)] = r;
  }

  PseudoGaussian pg;
  pg.diagonal = true;
  pg.sigma_inv.resize(m, 1);
  pg.chol.resize(m, 1);
  pg.mean.resize(m);
  pg.innov_cov.resize(k, 1);

  for (Index a = 0; a < m; ++a) {
    double precision = 1.0 / prior_cov_diag[a];
    double info = prior_mean[a] / prior_cov_diag[a];
    const Index r = row_of[static_cast<std::size_t>(a)];
    if (r >= 0) {
      const double c = H.coeff[r];
      precision += c * c / qsq_diag[r];
      info += c * z[r] / qsq_diag[r];
    }
    pg.sigma_inv(a, 0) = precision;
    pg.chol(a, 0) = 1.0 / std::sqrt(precision);
    pg.mean[a] = info / precision;
  }
  Vector variances = pg.chol.col(0).array().square();
  check_pivots(variances, variances.maxCoeff(), "complete_squares");

  double phi = 0.0;
  for (Index r = 0; r < k; ++r) {
    const Index c = H.component[static_cast<std::size_t>(r)];
    double K = qsq_diag[r];
    double innovation = z[r];
    if (c >= 0) {
      K += H.coeff[r] * H.coeff[r] * prior_cov_diag[c];
      innovation -= H.coeff[r] * prior_mean[c];
    }
    pg.innov_cov(r, 0) = K;
    phi += innovation * innovation / K;
  }
  pg.phi = 0.5 * phi;
  return pg;
}

PseudoGaussian complete_squares_dense(const Vector& prior_mean, const Matrix& prior_cov, const Matrix& H,
                                      const Matrix& obs_cov, const Vector& z) {
  const Index m = prior_mean.size();
  const Index k = z.size();
  if (prior_cov.rows() != m || prior_cov.cols() != m || H.rows() != k || H.cols() != m ||
      obs_cov.rows() != k || obs_cov.cols() != k)
    throw std::invalid_argument("complete_squares_dense: dimension mismatch");

  const Matrix prior_prec = spd_inverse(prior_cov);
  Matrix HtRinv(m, k);
  Matrix obs_prec;
  if (k > 0) {
    obs_prec = spd_inverse(obs_cov);
    HtRinv = H.transpose() * obs_prec;
  }

  PseudoGaussian pg;
  pg.sigma_inv = prior_prec;
  Vector info = prior_prec * prior_mean;
  if (k > 0) {
    pg.sigma_inv += HtRinv * H;
    info += HtRinv * z;
  }
  pg.sigma_inv = 0.5 * (pg.sigma_inv + pg.sigma_inv.transpose());

  const Matrix sigma = spd_inverse(pg.sigma_inv);
  pg.mean = sigma * info;
  pg.chol = spd_cholesky(sigma);

  pg.innov_cov = obs_cov;
  pg.phi = 0.0;
  if (k > 0) {
    pg.innov_cov += H * prior_cov * H.transpose();
    pg.innov_cov = 0.5 * (pg.innov_cov + pg.innov_cov.transpose());
    const Vector innovation = z - H * prior_mean;
    const Matrix LK = spd_cholesky(pg.innov_cov);
    const Vector w = LK.triangularView<Eigen::Lower>().solve(innovation);
    pg.phi = 0.5 * w.squaredNorm();
  }
  return pg;
}

Vector solve_reference(const PseudoGaussian& pg, const Vector& xi) {
  if (xi.size() != pg.dim()) throw std::invalid_argument("solve_reference: xi has wrong size");
  if (pg.diagonal) return pg.mean + pg.chol.col(0).cwiseProduct(xi);
  return pg.mean + pg.chol.triangularView<Eigen::Lower>() * xi;
}

double chol_logdet(const PseudoGaussian& pg) {
  if (pg.diagonal) return pg.chol.col(0).array().log().sum();
  return pg.chol.diagonal().array().log().sum();
}

}  // namespace ipf
