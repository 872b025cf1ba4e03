#include "ipf/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "ipf/errors.hpp"

namespace ipf {

void ResamplePolicy::validate() const {
  if (mode == ResampleMode::weight_ratio && !(ratio_limit > 1.0))
    throw ConfigError("resample: ratio_limit must exceed 1");
  if (subset_size && *subset_size < 1) throw ConfigError("resample: subset_size must be positive");
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  double max = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) {
    if (std::isnan(w)) throw DegenerateEnsemble("normalize_log_weights: NaN log-weight");
    max = std::max(max, w);
  }
  if (!std::isfinite(max)) throw DegenerateEnsemble("normalize_log_weights: no finite log-weight");

  std::vector<double> probs(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(log_weights[i] - max);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

std::size_t select_index(std::span<const double> cumulative, double theta) {
  auto it = std::lower_bound(cumulative.begin(), cumulative.end(), theta);
  if (it == cumulative.end()) {
    // theta beyond the rounded total: take the last particle with positive mass.
    it = std::prev(cumulative.end());
    while (it != cumulative.begin() && *it == *std::prev(it)) --it;
  }
  return static_cast<std::size_t>(std::distance(cumulative.begin(), it));
}

std::vector<Particle> resample(std::span<const Particle> particles, std::span<const double> probs,
                               std::span<const double> thetas) {
  if (probs.size() != particles.size()) throw std::invalid_argument("resample: probs size mismatch");
  std::vector<double> cumulative(probs.size());
  double running = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    running += probs[i];
    cumulative[i] = running;
  }
  std::vector<Particle> out;
  out.reserve(thetas.size());
  for (double theta : thetas) {
    const std::size_t i = select_index(cumulative, theta);
    Particle copy = particles[i];
    copy.log_weight = 0.0;
    copy.ancestor = static_cast<int>(i);
    out.push_back(std::move(copy));
  }
  return out;
}

std::vector<Particle> resample_with_policy(std::span<const Particle> particles, const ResamplePolicy& policy,
                                           std::span<const double> thetas) {
  if (thetas.size() != particles.size()) throw std::invalid_argument("resample: need one theta per particle");
  std::vector<double> logw;
  logw.reserve(particles.size());
  for (const auto& p : particles) logw.push_back(p.log_weight);

  if (!policy.subset_size || static_cast<std::size_t>(*policy.subset_size) >= particles.size())
    return resample(particles, normalize_log_weights(logw), thetas);

  const double max = *std::max_element(logw.begin(), logw.end());
  const std::size_t block = static_cast<std::size_t>(*policy.subset_size);
  std::vector<Particle> out;
  out.reserve(particles.size());
  for (std::size_t start = 0; start < particles.size(); start += block) {
    const std::size_t stop = std::min(start + block, particles.size());
    const auto members = particles.subspan(start, stop - start);
    const auto block_logw = std::span<const double>(logw).subspan(start, stop - start);
    // Log of the block's mean weight relative to the global maximum.
    double total = 0.0;
    for (double w : block_logw) total += std::exp(w - max);
    const double shared = total > 0.0 ? std::log(total / static_cast<double>(members.size())) + max
                                      : -std::numeric_limits<double>::infinity();
    std::vector<Particle> drawn;
    if (total > 0.0) {
      drawn = resample(members, normalize_log_weights(block_logw), thetas.subspan(start, stop - start));
    } else {
      drawn.assign(members.begin(), members.end());
      for (std::size_t i = 0; i < drawn.size(); ++i) drawn[i].ancestor = static_cast<int>(i);
    }
    for (auto& p : drawn) {
      p.ancestor += static_cast<int>(start);
      p.log_weight = shared;
      out.push_back(std::move(p));
    }
  }
  return out;
}

bool should_resample(std::span<const double> cumulative_log_weights, const ResamplePolicy& policy) {
  if (policy.mode == ResampleMode::every_step) return true;
  if (cumulative_log_weights.empty()) return false;
  const auto [lo, hi] = std::minmax_element(cumulative_log_weights.begin(), cumulative_log_weights.end());
  return *hi - *lo > std::log(policy.ratio_limit);
}

int distinct_count(std::span<const Particle> particles) {
  std::set<int> ancestors;
  for (const auto& p : particles) ancestors.insert(p.ancestor);
  return static_cast<int>(ancestors.size());
}

std::vector<double> make_thetas(std::span<const double> uniforms, bool stratified) {
  const double M = static_cast<double>(uniforms.size());
  std::vector<double> thetas(uniforms.size());
  for (std::size_t k = 0; k < uniforms.size(); ++k) {
    const double u = 1.0 - uniforms[k];  // (0, 1]
    thetas[k] = stratified ? (static_cast<double>(k) + u) / M : u;
  }
  return thetas;
}

}  // namespace ipf
