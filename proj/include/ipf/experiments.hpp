#ifndef IPF_EXPERIMENTS_HPP
#define IPF_EXPERIMENTS_HPP

#include <cstdint>
#include <vector>

#include "ipf/driver.hpp"

namespace ipf {

/// Max normalized weight after one observed step, one entry per run.
struct Example2Result {
  Index dims = 0;
  int particles = 0;
  std::vector<double> implicit_max;
  std::vector<double> sir_max;
};

/**
 * One-step runs of both filters on iid_gaussian_model(dims). Run r uses
 * derive_seed(seed, r) for both its data and its filter streams; runs fan
 * out over `workers` threads and the result does not depend on the count.
 */
Example2Result example2_study(Index dims, int particles, int runs, std::uint64_t seed, int workers);

/// Bin counts over [0, 1] in `bins` equal bins; the last bin is closed.
struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<int> counts;
};

Histogram histogram01(const std::vector<double>& values, int bins = 20);

struct CompareRow {
  FilterKind filter = FilterKind::implicit;
  double distinct_mean = 0.0;
  double distinct_mean_observed = 0.0;
  double rmse = 0.0;
  double max_weight_mean = 0.0;
  double iters_mean = 0.0;
  int seeds = 0;
};

/**
 * Runs every filter on the same synthetic data and filter seeds. Seed s uses
 * derive_seed(cfg.master_seed, s) for the filter streams and
 * derive_seed(cfg.effective_truth_seed(), s) for the truth; rows are averages
 * over seeds. Seeds fan out over cfg.workers threads.
 */
std::vector<CompareRow> compare_filters(const RunConfig& cfg, const std::vector<FilterKind>& filters, int seeds);

}  // namespace ipf

#endif  // IPF_EXPERIMENTS_HPP
