#ifndef IPF_RESAMPLING_HPP
#define IPF_RESAMPLING_HPP

#include <optional>
#include <span>
#include <vector>

#include "ipf/model.hpp"

namespace ipf {

enum class ResampleMode { every_step, weight_ratio };

struct ResamplePolicy {
  ResampleMode mode = ResampleMode::every_step;
  double ratio_limit = 10.0;          // L, used by weight_ratio
  std::optional<int> subset_size;     // resample within index blocks of this size
  bool stratified = false;            // theta_k = (k + u_k) / M instead of i.i.d. uniforms

  void validate() const;
};

/// exp(w - max w) / sum. Throws DegenerateEnsemble when no entry is finite.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Index i selected by theta: the cumulative bracket (c_{i-1}, c_i] contains it.
std::size_t select_index(std::span<const double> cumulative, double theta);

/**
 * Multinomial resampling by inversion of the cumulative weights. Output
 * particle k copies input particle i whose bracket contains thetas[k]; log
 * weights are reset to 0 and `ancestor` records i.
 */
std::vector<Particle> resample(std::span<const Particle> particles, std::span<const double> probs,
                               std::span<const double> thetas);

/**
 * Applies the policy's subset rule: each block of `subset_size` consecutive
 * particles is resampled against its own weights and keeps its share of the
 * total weight. Without subsets this is `resample` on the normalized weights.
 */
std::vector<Particle> resample_with_policy(std::span<const Particle> particles, const ResamplePolicy& policy,
                                           std::span<const double> thetas);

/// every_step: always. weight_ratio: max - min > log L.
bool should_resample(std::span<const double> cumulative_log_weights, const ResamplePolicy& policy);

/// Number of distinct ancestors surviving the most recent resample.
int distinct_count(std::span<const Particle> particles);

/// Turns M uniforms in [0,1) into thetas in (0,1], optionally stratified.
std::vector<double> make_thetas(std::span<const double> uniforms, bool stratified);

}  // namespace ipf

#endif  // IPF_RESAMPLING_HPP
