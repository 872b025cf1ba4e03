#include "ipf/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ipf/errors.hpp"

namespace ipf {

Vector StateSpaceModel::drift(const Vector& x, double t) const { return drift_rate(x, t) * delta; }

Vector StateSpaceModel::diffusion(const Vector& x, double t) const {
  return diffusion_rate(x, t) * std::sqrt(delta);
}

StateSpaceModel StateSpaceModel::with_delta(double new_delta) const {
  StateSpaceModel refined = *this;
  refined.delta = new_delta;
  return refined;
}

void StateSpaceModel::validate() const {
  if (dim_state <= 0) throw ConfigError("model: dim_state must be positive");
  if (dim_obs < 0 || dim_obs > dim_state) throw ConfigError("model: dim_obs must satisfy 0 <= k <= m");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("model: delta must be positive");
  if (!drift_rate || !diffusion_rate || !obs_map || !obs_jacobian)
    throw ConfigError("model: drift, diffusion, and observation functions are required");
  if (obs_noise.size() != dim_obs) throw ConfigError("model: obs_noise must have dim_obs entries");
  if ((obs_noise.array() <= 0.0).any()) throw ConfigError("model: obs_noise must be strictly positive");
  if (initial_state.size() != dim_state) throw ConfigError("model: initial_state has wrong size");
  if (componentwise_obs && static_cast<Index>(componentwise_obs->component.size()) != dim_obs)
    throw ConfigError("model: componentwise observation map has wrong size");
}

void Particle::advance(Vector next, std::size_t history_limit) {
  history.push_back(std::move(state));
  while (history.size() > history_limit) history.pop_front();
  state = std::move(next);
}

Ensemble Ensemble::from_state(const Vector& x0, int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("ensemble: particle count must be >= 1");
  Ensemble ens;
  ens.rng_seed = seed;
  ens.particles.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ens.particles[static_cast<std::size_t>(i)].state = x0;
    ens.particles[static_cast<std::size_t>(i)].ancestor = i;
  }
  return ens;
}

std::vector<double> Ensemble::log_weights() const {
  std::vector<double> out;
  out.reserve(particles.size());
  for (const auto& p : particles) out.push_back(p.log_weight);
  return out;
}

Vector propagate(const StateSpaceModel& model, const Vector& state, double time, const Vector& noise) {
  if (noise.size() != model.dim_state) throw std::invalid_argument("propagate: noise has wrong size");
  Vector next = state + model.drift(state, time) + model.diffusion(state, time).cwiseProduct(noise);
  if (!next.allFinite()) throw PropagationDiverged("propagate: non-finite state");
  return next;
}

double observe_likelihood_log(const StateSpaceModel& model, const Vector& state, const Vector& b) {
  const Vector r = model.obs_map(state) - b;
  return -0.5 * (r.array().square() / model.obs_noise_sq().array()).sum();
}

}  // namespace ipf
