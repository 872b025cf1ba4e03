#ifndef IPF_TESTS_TEST_SUPPORT_HPP
#define IPF_TESTS_TEST_SUPPORT_HPP

#include <cmath>
#include <random>

#include "ipf/model.hpp"
#include "ipf/models.hpp"

namespace ipf::testing {

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline Vector random_normal(std::mt19937_64& gen, Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(gen);
  return v;
}

/// x' = x + a x delta + sqrt(delta) g V, b = c x + q W, all scalar.
inline StateSpaceModel scalar_linear(double a, double g, double c, double q, double delta = 1.0) {
  return linear_gaussian_model(Matrix::Constant(1, 1, a), vec({g}), Matrix::Constant(1, 1, c), vec({q}), delta,
                               vec({0.0}));
}

/// Scalar model with drift a x, diffusion g and observation h(x) = x^3.
inline StateSpaceModel scalar_cubic(double a, double g, double q) {
  StateSpaceModel m;
  m.name = "cubic";
  m.dim_state = 1;
  m.dim_obs = 1;
  m.delta = 1.0;
  m.drift_rate = [a](const Vector& x, double) { return Vector(a * x); };
  m.diffusion_rate = [g](const Vector&, double) { return vec({g}); };
  m.diffusion_state_independent = true;
  m.obs_map = [](const Vector& x) { return vec({x[0] * x[0] * x[0]}); };
  m.obs_jacobian = [](const Vector& x) { return Matrix::Constant(1, 1, 3.0 * x[0] * x[0]); };
  m.obs_noise = vec({q});
  m.initial_state = vec({0.0});
  return m;
}

/// Central differences of model.obs_map at x.
inline Matrix central_jacobian(const StateSpaceModel& model, const Vector& x, double h) {
  Matrix J(model.dim_obs, model.dim_state);
  for (Index i = 0; i < model.dim_state; ++i) {
    Vector up = x, down = x;
    up[i] += h;
    down[i] -= h;
    J.col(i) = (model.obs_map(up) - model.obs_map(down)) / (2.0 * h);
  }
  return J;
}

}  // namespace ipf::testing

#endif  // IPF_TESTS_TEST_SUPPORT_HPP
