#include "ipf/implicit_sampling.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "ipf/errors.hpp"

namespace ipf {

namespace {

// h linearized around x:  h(y) ~ h(x) + H (y - x),  z = b - h(x) + H x.
struct Linearization {
  std::optional<ComponentwiseLinear> componentwise;
  Matrix dense;
  Vector z;

  Vector apply(const Vector& x) const {
    if (!componentwise) return dense * x;
    const auto k = static_cast<Index>(componentwise->component.size());
    Vector out(k);
    for (Index r = 0; r < k; ++r) {
      const Index c = componentwise->component[static_cast<std::size_t>(r)];
      out[r] = c >= 0 ? componentwise->coeff[r] * x[c] : 0.0;
    }
    return out;
  }

  Matrix to_dense(Index m) const {
    if (!componentwise) return dense;
    const auto k = static_cast<Index>(componentwise->component.size());
    Matrix H = Matrix::Zero(k, m);
    for (Index r = 0; r < k; ++r) {
      const Index c = componentwise->component[static_cast<std::size_t>(r)];
      if (c >= 0) H(r, c) = componentwise->coeff[r];
    }
    return H;
  }
};

Linearization linearize(const StateSpaceModel& model, const Vector& x_at, const Vector& b) {
  Linearization lin;
  // An affine h is expanded around the origin instead, which is exact and
  // keeps z free of iterate-dependent rounding, so particles that share b
  // and the prior get bitwise-equal remainders.
  const Vector x = model.obs_state_independent ? Vector::Zero(x_at.size()) : x_at;
  const Vector h = model.obs_map(x);
  if (model.componentwise_obs) {
    lin.componentwise = ComponentwiseLinear{model.componentwise_obs->component, model.componentwise_obs->derivative(x)};
  } else {
    lin.dense = model.obs_jacobian(x);
  }
  lin.z = b - h + lin.apply(x);
  return lin;
}

PseudoGaussian complete(const Vector& prior_mean, const Vector& prior_cov_diag, const Linearization& lin,
                        const Vector& obs_cov_diag, const Vector& z) {
  if (lin.componentwise) return complete_squares(prior_mean, prior_cov_diag, *lin.componentwise, obs_cov_diag, z);
  return complete_squares(prior_mean, prior_cov_diag, lin.dense, obs_cov_diag, z);
}

PseudoGaussian no_observation(const Vector& prior_mean, const Vector& prior_cov_diag) {
  return complete_squares(prior_mean, prior_cov_diag, ComponentwiseLinear{}, Vector(0), Vector(0));
}

double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

template <class Payload>
struct Iterate {
  Vector x;
  Payload payload;
  int iters;
  double residual;
};

// Fixed-point loop shared by every step: `step(x_j)` returns g(x_j) and the
// pseudo-Gaussian data it was built from. Convergence is judged on the
// undamped change |g(x_j) - x_j|, so every attempt targets the same fixed
// point. If the plain iteration stalls, it is restarted from x_0 with updates
// x_{j+1} = x_j + w (g(x_j) - x_j) for w = 1/2, 1/4, 1/8.
template <class Payload, class Step>
Iterate<Payload> fixed_point(const Vector& x0, const IterationConfig& cfg, const char* what, Step&& step) {
  bool diverged = false;
  double change = std::numeric_limits<double>::infinity();
  for (double w : {1.0, 0.5, 0.25, 0.125}) {
    Vector x = x0;
    for (int j = 0; j <= cfg.max_iters; ++j) {
      auto [next, payload] = step(x);
      if (!next.allFinite()) {
        if (w == 1.0) diverged = true;
        break;
      }
      const double norm = sup_norm(x);
      const double c = sup_norm(next - x);
      if (w == 1.0) change = c;
      if (c <= cfg.tol * (1.0 + norm)) return {std::move(next), std::move(payload), std::max(j, 1), c};
      if (w == 1.0) {
        x = std::move(next);
      } else {
        x += w * (next - x);
      }
    }
    if (!cfg.relaxation) break;
  }
  if (diverged) throw PropagationDiverged(std::string(what) + ": non-finite iterate");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", change);
  throw Nonconvergence(std::string(what) + ": iteration did not converge, last change " + buf, change,
                       cfg.max_iters);
}

double log_abs_det(const Matrix& J) {
  Eigen::PartialPivLU<Matrix> lu(J);
  const Matrix& U = lu.matrixLU();
  double total = 0.0;
  for (Index i = 0; i < U.rows(); ++i) {
    const double u = std::abs(U(i, i));
    if (!(u > 0.0) || !std::isfinite(u)) throw SingularJacobian("jacobian: numerical Jacobian is singular");
    total += std::log(u);
  }
  return total;
}

// Forward difference of the sampling map xi -> X, one column per direction.
template <class Solve>
double fd_logdet(const Vector& xi, const Vector& x, double fd_step, Solve&& solve) {
  const Index n = xi.size();
  Matrix J(x.size(), n);
  for (Index i = 0; i < n; ++i) {
    Vector shifted = xi;
    shifted[i] += fd_step;
    J.col(i) = (solve(shifted) - x) / fd_step;
  }
  return log_abs_det(J);
}

bool drift_is_constant(const StateSpaceModel& model) {
  return model.drift_matrix.has_value() && model.drift_matrix->isZero(0.0);
}

// --- forward -------------------------------------------------------------

struct ForwardProblem {
  const StateSpaceModel& model;
  Vector prior_mean;
  Vector prior_cov;
  const Vector* b;
};

ForwardProblem make_forward(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector* b) {
  if (x_prev.size() != model.dim_state) throw std::invalid_argument("forward_step: x_prev has wrong size");
  if (b && b->size() != model.dim_obs) throw std::invalid_argument("forward_step: observation has wrong size");
  return ForwardProblem{model, x_prev + model.drift(x_prev, t), model.diffusion(x_prev, t).array().square(), b};
}

Iterate<PseudoGaussian> iterate_forward(const ForwardProblem& p, const Vector& xi, Vector x0,
                                        const IterationConfig& cfg) {
  if (!p.b) {
    PseudoGaussian pg = no_observation(p.prior_mean, p.prior_cov);
    Vector x = solve_reference(pg, xi);
    return {std::move(x), std::move(pg), 1, 0.0};
  }
  const Vector qsq = p.model.obs_noise_sq();
  return fixed_point<PseudoGaussian>(std::move(x0), cfg, "forward_step", [&](const Vector& xj) {
    const Linearization lin = linearize(p.model, xj, *p.b);
    PseudoGaussian pg = complete(p.prior_mean, p.prior_cov, lin, qsq, lin.z);
    Vector next = solve_reference(pg, xi);
    return std::pair{std::move(next), std::move(pg)};
  });
}

StepResult run_forward(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector* b,
                       const Vector& xi, const IterationConfig& cfg) {
  cfg.validate();
  if (xi.size() != model.dim_state) throw std::invalid_argument("forward_step: xi has wrong size");
  const ForwardProblem problem = make_forward(model, x_prev, t, b);
  Vector x0 = cfg.warm_start ? problem.prior_mean : Vector::Zero(model.dim_state);
  auto it = iterate_forward(problem, xi, std::move(x0), cfg);

  StepResult result;
  result.new_state = std::move(it.x);
  result.phi = it.payload.phi;
  result.iters = it.iters;
  result.residual = it.residual;
  result.xi = xi;
  result.gaussian = std::move(it.payload);
  const JacobianMode mode = b ? effective_forward_mode(model, cfg) : JacobianMode::linearized;
  result.log_jac = jacobian_logdet(model, x_prev, t, b, result, cfg, mode);
  return result;
}

// --- backward ------------------------------------------------------------

struct BackwardProblem {
  const StateSpaceModel& model;
  Vector leg1_mean;
  Vector leg1_cov;
  double t_mid;
  const Vector& x_next;
  const Vector* b;
};

PseudoGaussian backward_block(const BackwardProblem& p, const Vector& xj) {
  const Vector drift = p.model.drift(xj, p.t_mid);
  const Vector leg2_cov = p.model.diffusion(xj, p.t_mid).array().square();
  // The second leg reads as an identity observation of X^new with value
  // X^{n+1} - F_n and covariance G_n^T G_n; fold it into the first leg.
  ComponentwiseLinear identity;
  identity.component.resize(static_cast<std::size_t>(xj.size()));
  for (Index a = 0; a < xj.size(); ++a) identity.component[static_cast<std::size_t>(a)] = a;
  identity.coeff = Vector::Ones(xj.size());
  PseudoGaussian legs = complete_squares(p.leg1_mean, p.leg1_cov, identity, leg2_cov, p.x_next - drift);
  if (!p.b) return legs;

  const Linearization lin = linearize(p.model, xj, *p.b);
  const Vector legs_cov = legs.chol.col(0).array().square();
  PseudoGaussian pg = complete(legs.mean, legs_cov, lin, p.model.obs_noise_sq(), lin.z);
  pg.phi += legs.phi;
  return pg;
}

BackwardProblem make_backward(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                              const Vector& x_next, const Vector* b) {
  if (x_prevprev.size() != model.dim_state || x_next.size() != model.dim_state)
    throw std::invalid_argument("backward_step: state has wrong size");
  if (b && b->size() != model.dim_obs) throw std::invalid_argument("backward_step: observation has wrong size");
  return BackwardProblem{model, x_prevprev + model.drift(x_prevprev, t_prev),
                         model.diffusion(x_prevprev, t_prev).array().square(), t_prev + model.delta, x_next, b};
}

Iterate<PseudoGaussian> iterate_backward(const BackwardProblem& p, const Vector& xi, Vector x0,
                                         const IterationConfig& cfg) {
  return fixed_point<PseudoGaussian>(std::move(x0), cfg, "backward_step", [&](const Vector& xj) {
    PseudoGaussian pg = backward_block(p, xj);
    Vector next = solve_reference(pg, xi);
    return std::pair{std::move(next), std::move(pg)};
  });
}

// --- sparse --------------------------------------------------------------

struct SparseBlocks {
  PseudoGaussian first;   // X^n
  PseudoGaussian second;  // X^{n+1} given X^n
};

struct SparseProblem {
  const StateSpaceModel& model;
  Vector leg1_mean;
  Vector leg1_cov;
  double t_mid;
  const Vector& b;
};

SparseProblem make_sparse(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev, const Vector& b) {
  if (x_prevprev.size() != model.dim_state) throw std::invalid_argument("sparse_step: state has wrong size");
  if (b.size() != model.dim_obs) throw std::invalid_argument("sparse_step: observation has wrong size");
  return SparseProblem{model, x_prevprev + model.drift(x_prevprev, t_prev),
                       model.diffusion(x_prevprev, t_prev).array().square(), t_prev + model.delta, b};
}

Iterate<SparseBlocks> iterate_sparse(const SparseProblem& p, const Vector& xi_n, const Vector& xi_np1, Vector x0,
                                     const IterationConfig& cfg) {
  const Index m = p.model.dim_state;
  const Vector qsq = p.model.obs_noise_sq();
  return fixed_point<SparseBlocks>(std::move(x0), cfg, "sparse_step", [&](const Vector& xj) {
    const Vector xn_j = xj.head(m);
    const Vector xnp1_j = xj.tail(m);
    const Vector drift = p.model.drift(xn_j, p.t_mid);
    const Vector leg2_cov = p.model.diffusion(xn_j, p.t_mid).array().square();
    const Linearization lin = linearize(p.model, xnp1_j, p.b);

    // Remainder of the X^{n+1} block is an observation of X^n with value
    // z - H F_n and covariance K^{n+1} = H G^T G H^T + Q^T Q.
    const Vector z_first = lin.z - lin.apply(drift);
    PseudoGaussian first;
    if (lin.componentwise) {
      Vector K(lin.z.size());
      bool distinct = true;
      std::vector<bool> seen(static_cast<std::size_t>(m), false);
      for (Index r = 0; r < K.size(); ++r) {
        const Index c = lin.componentwise->component[static_cast<std::size_t>(r)];
        K[r] = qsq[r];
        if (c < 0) continue;
        if (seen[static_cast<std::size_t>(c)]) distinct = false;
        seen[static_cast<std::size_t>(c)] = true;
        K[r] += lin.componentwise->coeff[r] * lin.componentwise->coeff[r] * leg2_cov[c];
      }
      if (distinct) first = complete_squares(p.leg1_mean, p.leg1_cov, *lin.componentwise, K, z_first);
    }
    if (first.mean.size() == 0) {
      const Matrix H = lin.to_dense(m);
      const Matrix K = H * leg2_cov.asDiagonal() * H.transpose() + Matrix(qsq.asDiagonal());
      first = complete_squares_dense(p.leg1_mean, Matrix(p.leg1_cov.asDiagonal()), H, K, z_first);
    }
    Vector xn_next = solve_reference(first, xi_n);

    PseudoGaussian second = complete(xn_next + drift, leg2_cov, lin, qsq, lin.z);
    Vector xnp1_next = solve_reference(second, xi_np1);

    Vector next(2 * m);
    next << xn_next, xnp1_next;
    return std::pair{std::move(next), SparseBlocks{std::move(first), std::move(second)}};
  });
}

}  // namespace

void IterationConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("iteration: tol must be positive");
  if (max_iters < 1) throw ConfigError("iteration: max_iters must be >= 1");
  if (!(fd_step > 0.0)) throw ConfigError("iteration: fd_step must be positive");
}

JacobianMode effective_forward_mode(const StateSpaceModel& model, const IterationConfig& cfg) {
  if (cfg.auto_linearized && model.obs_state_independent) return JacobianMode::linearized;
  return cfg.jacobian_mode;
}

JacobianMode effective_pair_mode(const StateSpaceModel& model, const IterationConfig& cfg) {
  if (cfg.auto_linearized && model.obs_state_independent && model.diffusion_state_independent &&
      drift_is_constant(model))
    return JacobianMode::linearized;
  return cfg.jacobian_mode;
}

StepResult forward_step(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector& b_next,
                        const Vector& xi, const IterationConfig& cfg) {
  return run_forward(model, x_prev, t, &b_next, xi, cfg);
}

StepResult prior_step(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector& xi,
                      const IterationConfig& cfg) {
  return run_forward(model, x_prev, t, nullptr, xi, cfg);
}

double jacobian_logdet(const StateSpaceModel& model, const Vector& x_prev, double t, const Vector* b_next,
                       const StepResult& result, const IterationConfig& cfg, JacobianMode mode) {
  if (mode == JacobianMode::linearized) return chol_logdet(result.gaussian);
  const ForwardProblem problem = make_forward(model, x_prev, t, b_next);
  return fd_logdet(result.xi, result.new_state, cfg.fd_step, [&](const Vector& shifted) {
    return iterate_forward(problem, shifted, result.new_state, cfg).x;
  });
}

StepResult backward_step(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                         const Vector& x_next, const Vector* b_mid, const Vector& xi, const IterationConfig& cfg) {
  cfg.validate();
  if (xi.size() != model.dim_state) throw std::invalid_argument("backward_step: xi has wrong size");
  const BackwardProblem problem = make_backward(model, x_prevprev, t_prev, x_next, b_mid);
  Vector x0 = cfg.warm_start ? problem.leg1_mean : Vector::Zero(model.dim_state);
  auto it = iterate_backward(problem, xi, std::move(x0), cfg);

  StepResult result;
  result.new_state = std::move(it.x);
  result.phi = it.payload.phi;
  result.iters = it.iters;
  result.residual = it.residual;
  result.xi = xi;
  result.gaussian = std::move(it.payload);
  result.log_jac = backward_jacobian_logdet(model, x_prevprev, t_prev, x_next, b_mid, result, cfg,
                                            effective_pair_mode(model, cfg));
  return result;
}

double backward_jacobian_logdet(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                                const Vector& x_next, const Vector* b_mid, const StepResult& result,
                                const IterationConfig& cfg, JacobianMode mode) {
  if (mode == JacobianMode::linearized) return chol_logdet(result.gaussian);
  const BackwardProblem problem = make_backward(model, x_prevprev, t_prev, x_next, b_mid);
  return fd_logdet(result.xi, result.new_state, cfg.fd_step, [&](const Vector& shifted) {
    return iterate_backward(problem, shifted, result.new_state, cfg).x;
  });
}

StepResult sparse_step(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                       const Vector& b_next, const Vector& xi_n, const Vector& xi_np1, const IterationConfig& cfg) {
  cfg.validate();
  const Index m = model.dim_state;
  if (xi_n.size() != m || xi_np1.size() != m) throw std::invalid_argument("sparse_step: xi has wrong size");
  const SparseProblem problem = make_sparse(model, x_prevprev, t_prev, b_next);
  Vector x0 = Vector::Zero(2 * m);
  if (cfg.warm_start) {
    x0.head(m) = problem.leg1_mean;
    x0.tail(m) = problem.leg1_mean + model.drift(problem.leg1_mean, problem.t_mid);
  }
  auto it = iterate_sparse(problem, xi_n, xi_np1, std::move(x0), cfg);

  StepResult result;
  result.intermediate = it.x.head(m);
  result.new_state = it.x.tail(m);
  result.phi = it.payload.first.phi;
  result.iters = it.iters;
  result.residual = it.residual;
  result.xi_intermediate = xi_n;
  result.xi = xi_np1;
  result.gaussian_intermediate = std::move(it.payload.first);
  result.gaussian = std::move(it.payload.second);
  result.log_jac = sparse_jacobian_logdet(model, x_prevprev, t_prev, b_next, result, cfg,
                                          effective_pair_mode(model, cfg));
  return result;
}

double sparse_jacobian_logdet(const StateSpaceModel& model, const Vector& x_prevprev, double t_prev,
                              const Vector& b_next, const StepResult& result, const IterationConfig& cfg,
                              JacobianMode mode) {
  if (!result.intermediate || !result.xi_intermediate || !result.gaussian_intermediate)
    throw std::invalid_argument("sparse_jacobian_logdet: not a sparse step result");
  if (mode == JacobianMode::linearized)
    return chol_logdet(*result.gaussian_intermediate) + chol_logdet(result.gaussian);

  const Index m = model.dim_state;
  const SparseProblem problem = make_sparse(model, x_prevprev, t_prev, b_next);
  Vector xi(2 * m), x(2 * m);
  xi << *result.xi_intermediate, result.xi;
  x << *result.intermediate, result.new_state;
  return fd_logdet(xi, x, cfg.fd_step, [&](const Vector& shifted) {
    return iterate_sparse(problem, shifted.head(m), shifted.tail(m), x, cfg).x;
  });
}

StepResult moment_step(const StateSpaceModel& model, const GaussianMoments& filtered, double t,
                       const Vector& b_next, const IterationConfig& cfg) {
  cfg.validate();
  if (!model.drift_matrix || !model.diffusion_state_independent)
    throw UnsupportedModel("moment_step: requires linear drift and state-independent diffusion");
  const Index m = model.dim_state;
  const Matrix transition = Matrix::Identity(m, m) + *model.drift_matrix * model.delta;
  const Vector prior_mean = filtered.mean + model.drift(filtered.mean, t);
  Matrix prior_cov = transition * filtered.cov * transition.transpose();
  prior_cov.diagonal() += model.diffusion(filtered.mean, t).array().square().matrix();
  const Matrix obs_cov = model.obs_noise_sq().asDiagonal();
  const Vector xi = Vector::Zero(m);

  Vector x0 = cfg.warm_start ? prior_mean : Vector::Zero(m);
  auto it = fixed_point<PseudoGaussian>(std::move(x0), cfg, "moment_step", [&](const Vector& xj) {
    const Linearization lin = linearize(model, xj, b_next);
    PseudoGaussian pg = complete_squares_dense(prior_mean, prior_cov, lin.to_dense(m), obs_cov, lin.z);
    Vector next = solve_reference(pg, xi);
    return std::pair{std::move(next), std::move(pg)};
  });

  StepResult result;
  result.new_state = std::move(it.x);
  result.phi = it.payload.phi;
  result.iters = it.iters;
  result.residual = it.residual;
  result.xi = xi;
  result.log_jac = chol_logdet(it.payload);
  result.gaussian = std::move(it.payload);
  return result;
}

}  // namespace ipf
