#ifndef IPF_MODELS_HPP
#define IPF_MODELS_HPP

#include <cstdint>
#include <vector>

#include "ipf/model.hpp"

namespace ipf {

// --- NPZD plankton model --------------------------------------------------

/// Phytoplankton, zooplankton, nutrients, detritus, and the growth-rate
/// perturbation dgamma (gamma = 0.14 + 3 dgamma is derived, never stored).
struct PlanktonState {
  double P = 0.0;
  double Z = 0.0;
  double N = 0.0;
  double D = 0.0;
  double dgamma = 0.0;

  Vector to_vector() const;
  static PlanktonState from_vector(const Vector& v);
  double gamma() const { return 0.14 + 3.0 * dgamma; }
};

struct PlanktonParams {
  PlanktonState initial{0.125, 0.00708, 0.764, 0.136, 0.0};
  double sigma_P = 0.01 * 0.125;
  double sigma_Z = 0.01 * 0.00708;
  double sigma_N = 0.01 * 0.764;
  double sigma_D = 0.01 * 0.136;
  double sigma_gamma = 0.01;
  double sigma_obs = 0.3;
  double dt = 1.0;  // days

  /// Concentrations may not drop below this fraction of their initial value.
  static constexpr double kFloorFraction = 0.01;

  PlanktonState floors() const;
  Vector noise_std() const;
  void validate() const;
};

/// Deterministic right-hand side (per day) of the NPZD system plus the AR(1)
/// drift -0.1 dgamma of the growth-rate perturbation.
Vector plankton_drift(const PlanktonState& state, const PlanktonParams& params);

/// Clamp P, Z, N, D at their floors.
void plankton_clamp(Vector& x, const PlanktonParams& params);

/// One Euler step with additive noise (noise ~ N(0, I_5)), then clamp.
PlanktonState plankton_step(const PlanktonState& state, const PlanktonParams& params, const Vector& noise);

/// log P. Below the P floor the map continues linearly (C^1) so that
/// iterates which stray below the floor stay well defined.
double plankton_obs(const PlanktonState& state, const PlanktonParams& params);
/// 1 x 5 Jacobian (1/P, 0, 0, 0, 0).
Matrix plankton_obs_jacobian(const PlanktonState& state, const PlanktonParams& params);

StateSpaceModel plankton_model(const PlanktonParams& params);

// --- Other models -----------------------------------------------------------

/// d independent unit Gaussians redrawn every step, observed with unit noise.
/// The X^n term is cancelled by the drift F(x) delta = -x, so the one-step
/// prior is N(0, I) regardless of X^n.
StateSpaceModel iid_gaussian_model(Index d);

/// x' = x + A x delta + sqrt(delta) diag(g) V,  b = H x + diag(q) W.
StateSpaceModel linear_gaussian_model(const Matrix& A, const Vector& g, const Matrix& H, const Vector& q,
                                      double delta, const Vector& x0);

/// Random linear-Gaussian model with spectral radius of (I + A delta) < 1.
StateSpaceModel random_stable_linear_model(Index m, Index k, std::uint64_t seed);

// --- Twin experiments -------------------------------------------------------

struct TwinData {
  std::vector<Vector> truth;                   // truth[n], n = 0..steps
  std::vector<ObservationRecord> observations; // observations[n-1] for n = 1..steps
};

/// Simulates a truth path from model.initial_state and observes it at
/// `obs_times` (strictly increasing step indices in 1..steps).
TwinData synth_twin_data(const StateSpaceModel& model, std::uint64_t truth_seed,
                         const std::vector<std::int64_t>& obs_times, std::int64_t steps);

/// first, first + interval, ... (count entries).
std::vector<std::int64_t> regular_schedule(std::int64_t first, std::int64_t interval, std::int64_t count);

}  // namespace ipf

#endif  // IPF_MODELS_HPP
