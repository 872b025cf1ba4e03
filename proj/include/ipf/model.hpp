#ifndef IPF_MODEL_HPP
#define IPF_MODEL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ipf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Observation operator whose row r depends on the single state component
/// `component[r]`. `derivative(x)[r]` is dh_r/dx_{component[r]}.
struct ComponentwiseObs {
  std::vector<Index> component;
  std::function<Vector(const Vector&)> derivative;
};

/**
 * Discretized SDE  X' = X + f(X,t) delta + sqrt(delta) g(X,t) V,  V ~ N(0,I),
 * observed through  b = h(X) + Q W,  W ~ N(0,I).
 *
 * g and Q are diagonal and stored as vectors. Rates are stored rather than
 * increments so that the time step can be refined (see `with_delta`).
 */
struct StateSpaceModel {
  std::string name;
  Index dim_state = 0;
  Index dim_obs = 0;
  double delta = 1.0;

  std::function<Vector(const Vector&, double)> drift_rate;      // f(x, t)
  std::function<Vector(const Vector&, double)> diffusion_rate;  // diag g(x, t)
  std::function<Vector(const Vector&)> obs_map;                 // h(x)
  std::function<Matrix(const Vector&)> obs_jacobian;            // H(x), k x m
  Vector obs_noise;                                             // diag Q

  // Structural hints. They enable fast paths and the Kalman oracle; they never
  // change results beyond rounding.
  std::optional<ComponentwiseObs> componentwise_obs;
  bool obs_state_independent = false;
  bool diffusion_state_independent = false;
  std::optional<Matrix> drift_matrix;  // f(x, t) = A x

  // Applied to every new state after a step (e.g. concentration floors).
  std::function<void(Vector&)> project;

  Vector initial_state;

  /// F(x,t) delta.
  Vector drift(const Vector& x, double t) const;
  /// Diagonal of sqrt(delta) g(x,t).
  Vector diffusion(const Vector& x, double t) const;
  /// Diagonal of Q^T Q.
  Vector obs_noise_sq() const { return obs_noise.array().square(); }

  double time_of(std::int64_t step) const { return static_cast<double>(step) * delta; }

  void apply_projection(Vector& x) const {
    if (project) project(x);
  }

  /// True when the Kalman oracle applies.
  bool is_linear_gaussian() const {
    return drift_matrix.has_value() && diffusion_state_independent && obs_state_independent;
  }

  /// Same model on a refined (or coarsened) time grid.
  StateSpaceModel with_delta(double new_delta) const;

  /// Throws ConfigError when dimensions or noise levels are inconsistent.
  void validate() const;
};

struct Particle {
  Vector state;
  double log_weight = 0.0;
  std::deque<Vector> history;  // oldest first; does not include `state`
  int ancestor = 0;            // index selected by the most recent resample

  /// Push the current state into the history before overwriting it.
  void advance(Vector next, std::size_t history_limit);
};

struct Ensemble {
  std::vector<Particle> particles;
  std::int64_t time_index = 0;
  std::uint64_t rng_seed = 0;

  /// M copies of `x0` with zero log-weights and identity ancestry.
  static Ensemble from_state(const Vector& x0, int count, std::uint64_t seed);

  int size() const { return static_cast<int>(particles.size()); }
  std::vector<double> log_weights() const;
};

struct ObservationRecord {
  std::int64_t time_index = 0;
  Vector value;
  bool present = false;
};

/// x + F(x,t) delta + sqrt(delta) g(x,t) noise. Throws PropagationDiverged on
/// non-finite output.
Vector propagate(const StateSpaceModel& model, const Vector& state, double time,
                 const Vector& noise);

/// -(h(x)-b)^T (Q^T Q)^{-1} (h(x)-b) / 2
double observe_likelihood_log(const StateSpaceModel& model, const Vector& state, const Vector& b);

}  // namespace ipf

#endif  // IPF_MODEL_HPP
