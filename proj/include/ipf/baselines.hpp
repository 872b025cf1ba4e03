#ifndef IPF_BASELINES_HPP
#define IPF_BASELINES_HPP

#include <span>

#include "ipf/model.hpp"

namespace ipf {

struct SirStep {
  Vector new_state;
  double log_weight_increment = 0.0;
};

/// Bootstrap SIR: propagate with the dynamics (then project), weight by the
/// observation likelihood. `b_next == nullptr` means no observation.
SirStep sir_step(const StateSpaceModel& model, const Vector& state, double t, const Vector* b_next,
                 const Vector& noise);

struct KalmanState {
  Vector mean;
  Matrix cov;
};

/// Predict with (I + A delta) and delta G G^T, then the gain-form update.
/// Throws UnsupportedModel unless the model is linear-Gaussian.
KalmanState kalman_step(const StateSpaceModel& model, const KalmanState& ks, double t, const Vector* b_next);

/// Largest entry of normalize_log_weights(log_weights).
double max_normalized_weight(std::span<const double> log_weights);

}  // namespace ipf

#endif  // IPF_BASELINES_HPP
