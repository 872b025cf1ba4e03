#include "ipf/baselines.hpp"

#include <algorithm>

#include "ipf/errors.hpp"
#include "ipf/pseudo_gaussian.hpp"
#include "ipf/resampling.hpp"

namespace ipf {

SirStep sir_step(const StateSpaceModel& model, const Vector& state, double t, const Vector* b_next,
                 const Vector& noise) {
  SirStep out;
  out.new_state = propagate(model, state, t, noise);
  model.apply_projection(out.new_state);
  out.log_weight_increment = b_next ? observe_likelihood_log(model, out.new_state, *b_next) : 0.0;
  return out;
}

KalmanState kalman_step(const StateSpaceModel& model, const KalmanState& ks, double t, const Vector* b_next) {
  if (!model.is_linear_gaussian()) throw UnsupportedModel("kalman_step: model is not linear-Gaussian");
  const Index m = model.dim_state;
  const Matrix transition = Matrix::Identity(m, m) + *model.drift_matrix * model.delta;

  KalmanState next;
  next.mean = transition * ks.mean;
  next.cov = transition * ks.cov * transition.transpose();
  next.cov.diagonal() += model.diffusion(ks.mean, t).array().square().matrix();
  if (!b_next) return next;

  const Matrix H = model.obs_jacobian(next.mean);
  Matrix S = H * next.cov * H.transpose();
  S.diagonal() += model.obs_noise_sq();
  const Matrix gain = next.cov * H.transpose() * spd_inverse(S);
  next.mean += gain * (*b_next - model.obs_map(next.mean));
  next.cov = (Matrix::Identity(m, m) - gain * H) * next.cov;
  next.cov = 0.5 * (next.cov + next.cov.transpose());
  return next;
}

double max_normalized_weight(std::span<const double> log_weights) {
  const auto probs = normalize_log_weights(log_weights);
  return *std::max_element(probs.begin(), probs.end());
}

}  // namespace ipf
