#include "ipf/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ipf/errors.hpp"
#include "ipf/pseudo_gaussian.hpp"
#include "ipf/rng.hpp"

namespace ipf {

Vector PlanktonState::to_vector() const {
  Vector v(5);
  v << P, Z, N, D, dgamma;
  return v;
}

PlanktonState PlanktonState::from_vector(const Vector& v) {
  if (v.size() != 5) throw std::invalid_argument("PlanktonState: expected 5 components");
  return PlanktonState{v[0], v[1], v[2], v[3], v[4]};
}

PlanktonState PlanktonParams::floors() const {
  return PlanktonState{kFloorFraction * initial.P, kFloorFraction * initial.Z, kFloorFraction * initial.N,
                       kFloorFraction * initial.D, 0.0};
}

Vector PlanktonParams::noise_std() const {
  Vector s(5);
  s << sigma_P, sigma_Z, sigma_N, sigma_D, sigma_gamma;
  return s;
}

void PlanktonParams::validate() const {
  if ((noise_std().array() <= 0.0).any() || !(sigma_obs > 0.0))
    throw ConfigError("plankton: all noise standard deviations must be positive");
  if (!(initial.P > 0.0 && initial.Z > 0.0 && initial.N > 0.0 && initial.D > 0.0))
    throw ConfigError("plankton: initial concentrations must be positive");
  if (!(dt > 0.0)) throw ConfigError("plankton: dt must be positive");
}

Vector plankton_drift(const PlanktonState& s, const PlanktonParams&) {
  const double gamma = s.gamma();
  const double uptake = s.N / (0.2 + s.N) * gamma * s.P;
  const double grazing = s.P / (0.1 + s.P) * s.Z;
  Vector f(5);
  f[0] = uptake - 0.1 * s.P - 0.6 * grazing;
  f[1] = 0.18 * grazing - 0.1 * s.Z;
  f[2] = 0.1 * s.D + 0.24 * grazing - uptake + 0.05 * s.Z;
  f[3] = -0.1 * s.D + 0.1 * s.P + 0.18 * grazing + 0.05 * s.Z;
  f[4] = -0.1 * s.dgamma;
  return f;
}

void plankton_clamp(Vector& x, const PlanktonParams& params) {
  const Vector floor = params.floors().to_vector();
  for (Index i = 0; i < 4; ++i) x[i] = std::max(x[i], floor[i]);
}

PlanktonState plankton_step(const PlanktonState& state, const PlanktonParams& params, const Vector& noise) {
  if (noise.size() != 5) throw std::invalid_argument("plankton_step: noise must have 5 entries");
  Vector x = state.to_vector() + plankton_drift(state, params) * params.dt +
             std::sqrt(params.dt) * params.noise_std().cwiseProduct(noise);
  if (!x.allFinite()) throw PropagationDiverged("plankton_step: non-finite state");
  plankton_clamp(x, params);
  return PlanktonState::from_vector(x);
}

double plankton_obs(const PlanktonState& state, const PlanktonParams& params) {
  const double floor = params.floors().P;
  if (state.P >= floor) return std::log(state.P);
  return std::log(floor) + (state.P - floor) / floor;
}

Matrix plankton_obs_jacobian(const PlanktonState& state, const PlanktonParams& params) {
  Matrix H = Matrix::Zero(1, 5);
  H(0, 0) = 1.0 / std::max(state.P, params.floors().P);
  return H;
}

StateSpaceModel plankton_model(const PlanktonParams& params) {
  params.validate();
  StateSpaceModel model;
  model.name = "plankton";
  model.dim_state = 5;
  model.dim_obs = 1;
  model.delta = params.dt;
  // Rates are evaluated at the clamped state. Filtered states are always
  // clamped, so this only matters for intermediate iterates, which would
  // otherwise reach the pole of P / (0.1 + P) at P = -0.1.
  model.drift_rate = [params](const Vector& x, double) {
    Vector clamped = x;
    plankton_clamp(clamped, params);
    return plankton_drift(PlanktonState::from_vector(clamped), params);
  };
  const Vector sigma = params.noise_std();
  model.diffusion_rate = [sigma](const Vector&, double) { return sigma; };
  model.diffusion_state_independent = true;
  model.obs_map = [params](const Vector& x) {
    Vector h(1);
    h[0] = plankton_obs(PlanktonState::from_vector(x), params);
    return h;
  };
  model.obs_jacobian = [params](const Vector& x) {
    return plankton_obs_jacobian(PlanktonState::from_vector(x), params);
  };
  model.componentwise_obs = ComponentwiseObs{{0}, [params](const Vector& x) {
                                               Vector d(1);
                                               d[0] = 1.0 / std::max(x[0], params.floors().P);
                                               return d;
                                             }};
  model.obs_noise = Vector::Constant(1, params.sigma_obs);
  model.project = [params](Vector& x) { plankton_clamp(x, params); };
  model.initial_state = params.initial.to_vector();
  return model;
}

StateSpaceModel iid_gaussian_model(Index d) {
  if (d < 1) throw ConfigError("iid_gaussian: dimension must be >= 1");
  StateSpaceModel model;
  model.name = "iid_gaussian";
  model.dim_state = d;
  model.dim_obs = d;
  model.delta = 1.0;
  model.drift_rate = [](const Vector& x, double) -> Vector { return -x; };
  model.diffusion_rate = [d](const Vector&, double) -> Vector { return Vector::Ones(d); };
  model.diffusion_state_independent = true;
  model.drift_matrix = -Matrix::Identity(d, d);
  model.obs_map = [](const Vector& x) -> Vector { return x; };
  model.obs_jacobian = [d](const Vector&) -> Matrix { return Matrix::Identity(d, d); };
  std::vector<Index> comp(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) comp[static_cast<std::size_t>(i)] = i;
  model.componentwise_obs = ComponentwiseObs{std::move(comp), [d](const Vector&) -> Vector { return Vector::Ones(d); }};
  model.obs_state_independent = true;
  model.obs_noise = Vector::Ones(d);
  model.initial_state = Vector::Zero(d);
  return model;
}

StateSpaceModel linear_gaussian_model(const Matrix& A, const Vector& g, const Matrix& H, const Vector& q,
                                      double delta, const Vector& x0) {
  const Index m = A.rows();
  if (A.cols() != m || g.size() != m || H.cols() != m || q.size() != H.rows() || x0.size() != m)
    throw ConfigError("linear_gaussian: inconsistent dimensions");
  StateSpaceModel model;
  model.name = "linear";
  model.dim_state = m;
  model.dim_obs = H.rows();
  model.delta = delta;
  model.drift_rate = [A](const Vector& x, double) -> Vector { return A * x; };
  model.diffusion_rate = [g](const Vector&, double) -> Vector { return g; };
  model.diffusion_state_independent = true;
  model.drift_matrix = A;
  model.obs_map = [H](const Vector& x) -> Vector { return H * x; };
  model.obs_jacobian = [H](const Vector&) -> Matrix { return H; };
  model.obs_state_independent = true;
  if (auto cw = as_componentwise(H)) {
    const Vector coeff = cw->coeff;
    model.componentwise_obs = ComponentwiseObs{cw->component, [coeff](const Vector&) { return coeff; }};
  }
  model.obs_noise = q;
  model.initial_state = x0;
  model.validate();
  return model;
}

StateSpaceModel random_stable_linear_model(Index m, Index k, std::uint64_t seed) {
  Substream rng(seed, 0, 0, StreamRole::truth);
  const double delta = 0.1;
  // I + A delta with spectral norm 0.95: a scaled random matrix.
  Matrix B(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) B(i, j) = rng.normal();
  const double norm = Eigen::JacobiSVD<Matrix>(B).singularValues()[0];
  const Matrix transition = 0.95 * B / norm;
  const Matrix A = (transition - Matrix::Identity(m, m)) / delta;

  Vector g(m);
  for (Index i = 0; i < m; ++i) g[i] = 0.5 + rng.uniform();
  Matrix H(k, m);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < m; ++j) H(i, j) = rng.normal();
  Vector q(k);
  for (Index i = 0; i < k; ++i) q[i] = 0.3 + 0.7 * rng.uniform();
  Vector x0(m);
  for (Index i = 0; i < m; ++i) x0[i] = rng.normal();
  return linear_gaussian_model(A, g, H, q, delta, x0);
}

TwinData synth_twin_data(const StateSpaceModel& model, std::uint64_t truth_seed,
                         const std::vector<std::int64_t>& obs_times, std::int64_t steps) {
  for (std::size_t i = 1; i < obs_times.size(); ++i)
    if (obs_times[i] <= obs_times[i - 1]) throw ConfigError("twin data: obs_times must be strictly increasing");
  if (!obs_times.empty() && (obs_times.front() < 1 || obs_times.back() > steps))
    throw ConfigError("twin data: obs_times must lie in 1..steps");

  TwinData data;
  data.truth.reserve(static_cast<std::size_t>(steps + 1));
  data.truth.push_back(model.initial_state);
  data.observations.resize(static_cast<std::size_t>(steps));
  std::size_t next_obs = 0;
  for (std::int64_t n = 1; n <= steps; ++n) {
    Substream noise(truth_seed, n, 0, StreamRole::truth);
    Vector x = propagate(model, data.truth.back(), model.time_of(n - 1), noise.normals(model.dim_state));
    model.apply_projection(x);
    data.truth.push_back(x);

    auto& rec = data.observations[static_cast<std::size_t>(n - 1)];
    rec.time_index = n;
    if (next_obs < obs_times.size() && obs_times[next_obs] == n) {
      Substream obs_noise(truth_seed, n, 0, StreamRole::observation);
      rec.value = model.obs_map(x) + model.obs_noise.cwiseProduct(obs_noise.normals(model.dim_obs));
      rec.present = true;
      ++next_obs;
    }
  }
  return data;
}

std::vector<std::int64_t> regular_schedule(std::int64_t first, std::int64_t interval, std::int64_t count) {
  std::vector<std::int64_t> times;
  times.reserve(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  for (std::int64_t i = 0; i < count; ++i) times.push_back(first + i * interval);
  return times;
}

}  // namespace ipf
