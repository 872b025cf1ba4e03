#ifndef IPF_DRIVER_HPP
#define IPF_DRIVER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipf/implicit_sampling.hpp"
#include "ipf/kernels.hpp"
#include "ipf/models.hpp"
#include "ipf/resampling.hpp"

namespace ipf {

enum class FilterKind { implicit, implicit_backward, sir };

std::string to_string(FilterKind kind);
FilterKind filter_from_string(const std::string& name);

enum class ModelKind { linear, iid_gaussian, plankton };

std::string to_string(ModelKind kind);
ModelKind model_from_string(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::linear;
  Index dims = 1;            // iid_gaussian
  Index linear_state = 3;    // random stable linear model
  Index linear_obs = 3;
  std::uint64_t linear_seed = 1;
  PlanktonParams plankton;
};

StateSpaceModel build_model(const ModelSpec& spec);

/// Steps at which observations are taken: first, first + interval, ... up to
/// `count` entries (or to the last step), unless `times` is given explicitly.
struct ObsSchedule {
  std::int64_t first = 1;
  std::int64_t interval = 1;
  std::optional<std::int64_t> count;
  std::vector<std::int64_t> times;

  std::vector<std::int64_t> resolve(std::int64_t steps) const;
};

struct RunConfig {
  ModelSpec model;
  FilterKind filter = FilterKind::implicit;
  int particles = 100;
  std::int64_t steps = 100;
  ObsSchedule observations;
  ResamplePolicy resample;
  IterationConfig iteration;
  std::uint64_t master_seed = 1;
  std::optional<std::uint64_t> truth_seed;  // defaults to master_seed
  int workers = 1;
  int backward_depth = 1;
  bool retry_half_step = true;
  bool track_moments = false;  // linear drift only: record Gaussian-moment trajectory

  void validate() const;
  std::uint64_t effective_truth_seed() const { return truth_seed.value_or(master_seed); }
};

struct StepMetrics {
  std::int64_t step = 0;
  double time = 0.0;
  Vector mean;
  Vector stddev;
  std::optional<Vector> truth;
  std::optional<Vector> observation;
  int distinct_count = 0;
  double max_weight = 0.0;
  double iters_mean = 0.0;
  int retries = 0;  // particles that needed a half-step retry or a pair fallback
  bool resampled = false;
};

struct RunMetrics {
  std::string filter;
  std::vector<StepMetrics> steps;
  std::vector<GaussianMoments> moments;  // filled when track_moments is set

  double rmse = 0.0;
  Vector rmse_per_component;
  double distinct_mean = 0.0;
  double distinct_mean_observed = 0.0;
  double max_weight_mean = 0.0;
  double iters_mean = 0.0;
  std::int64_t retries = 0;

  void summarize();
};

/// Builds the model, simulates twin data from the truth seed, and runs.
RunMetrics run_filter(const RunConfig& cfg);

/// Runs against supplied data. Deterministic given cfg.master_seed and
/// independent of cfg.workers.
RunMetrics run_filter(const RunConfig& cfg, const StateSpaceModel& model, const TwinData& data);

/// Serial reference execution of the same run (ignores cfg.workers).
RunMetrics run_filter_serial(const RunConfig& cfg, const StateSpaceModel& model, const TwinData& data);

}  // namespace ipf

#endif  // IPF_DRIVER_HPP
