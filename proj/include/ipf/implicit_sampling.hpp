#ifndef IPF_IMPLICIT_SAMPLING_HPP
#define IPF_IMPLICIT_SAMPLING_HPP

#include <optional>

#include "ipf/model.hpp"
#include "ipf/pseudo_gaussian.hpp"

namespace ipf {

enum class JacobianMode { finite_difference, linearized };

struct IterationConfig {
  double tol = 1e-10;  // relative sup-norm change between iterates
  int max_iters = 100;
  JacobianMode jacobian_mode = JacobianMode::finite_difference;
  // Use the linearized Jacobian whenever it is exact for the model at hand.
  bool auto_linearized = true;
  double fd_step = 1e-6;
  // Start from the prior mean instead of X_0 = 0.
  bool warm_start = false;
  // Restart a stalled iteration with damped updates before giving up.
  bool relaxation = true;

  void validate() const;
};

/**
 * Outcome of one implicit sampling step for one particle.
 *
 * For sparse steps `intermediate` holds X^n and `new_state` holds X^{n+1};
 * `phi` is then the remainder of the X^n block.
 */
struct StepResult {
  Vector new_state;
  std::optional<Vector> intermediate;
  double phi = 0.0;
  double log_jac = 0.0;
  int iters = 0;
  double residual = 0.0;  // sup-norm change at the last iteration
  Vector xi;
  std::optional<Vector> xi_intermediate;
  PseudoGaussian gaussian;                              // block of new_state
  std::optional<PseudoGaussian> gaussian_intermediate;  // block of X^n

  double log_weight_increment() const { return -phi + log_jac; }
};

/// Sample X^{n+1} given X^n = x_prev at time t and the observation b_next.
StepResult forward_step(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector& b_next,
                        const Vector& xi, const IterationConfig& cfg);

/// Forward step with no observation: samples the prior transition, phi = 0.
StepResult prior_step(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector& xi,
                      const IterationConfig& cfg);

/// log|det dX^{n+1}/dxi| of a converged forward step, in the requested mode.
/// Pass b_next = nullptr for a step without observation.
double jacobian_logdet(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector* b_next,
                       const StepResult& result, const IterationConfig& cfg, JacobianMode mode);

/**
 * Resample X^n given X^{n-1} (at time t_prev), X^{n+1}, and the observation
 * b_mid at time n (nullptr when there is none). F_n and G_n are frozen at the
 * current iterate.
 */
StepResult backward_step(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                         const Vector& x_next, const Vector* b_mid, const Vector& xi, const IterationConfig& cfg);

double backward_jacobian_logdet(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                                const Vector& x_next, const Vector* b_mid, const StepResult& result,
                                const IterationConfig& cfg, JacobianMode mode);

/**
 * Jointly sample (X^n, X^{n+1}) given X^{n-1} (at time t_prev) when there is no
 * observation at n and b_next is observed at n+1.
 */
StepResult sparse_step(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                       const Vector& b_next, const Vector& xi_n, const Vector& xi_np1, const IterationConfig& cfg);

double sparse_jacobian_logdet(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                              const Vector& b_next, const StepResult& result, const IterationConfig& cfg,
                              JacobianMode mode);

/// Jacobian mode actually used by forward_step for this model.
JacobianMode effective_forward_mode(const StateSpaceModel& model, const IterationConfig& cfg);
/// Jacobian mode actually used by backward_step and sparse_step.
JacobianMode effective_pair_mode(const StateSpaceModel& model, const IterationConfig& cfg);

/// Filtering mean and covariance carried by a single Gaussian particle.
struct GaussianMoments {
  Vector mean;
  Matrix cov;
};

/**
 * Forward iteration with a Gaussian prior N(filtered) instead of a point X^n.
 * Requires a linear drift. Returns the converged pseudo-Gaussian with xi = 0;
 * its (mean, Sigma) are the next filtering moments.
 */
StepResult moment_step(const StateSpaceModel& model, const GaussianMoments& filtered, double t,
                       const Vector& b_next, const IterationConfig& cfg);

}  // namespace ipf

#endif  // IPF_IMPLICIT_SAMPLING_HPP
