#ifndef IPF_ERRORS_HPP
#define IPF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ipf {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A propagated state contains NaN or Inf.
class PropagationDiverged : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization hit a pivot below the SPD threshold.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

/// The implicit-sampling iteration ran out of iterations.
class Nonconvergence : public Error {
 public:
  Nonconvergence(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Finite-difference Jacobian of the sampling map is singular.
class SingularJacobian : public Error {
 public:
  using Error::Error;
};

/// Every particle has zero weight.
class DegenerateEnsemble : public Error {
 public:
  using Error::Error;
};

/// Operation requires a linear-Gaussian model.
class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

/// Invalid or malformed run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside a filter run, tagged with where it happened.
class FilterError : public Error {
 public:
  FilterError(const std::string& what, int step, int particle)
      : Error(what), step_(step), particle_(particle) {}

  int step() const noexcept { return step_; }
  int particle() const noexcept { return particle_; }

 private:
  int step_;
  int particle_;
};

}  // namespace ipf

#endif  // IPF_ERRORS_HPP
