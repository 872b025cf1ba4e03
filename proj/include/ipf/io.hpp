#ifndef IPF_IO_HPP
#define IPF_IO_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ipf/driver.hpp"
#include "ipf/experiments.hpp"

namespace ipf {

/// Shortest round-trip decimal form, independent of the global locale.
/// The CSV writers imbue the classic locale on their stream.
std::string format_double(double v);

/// step,time,filter,mean_0..,std_0..,truth_0..,obs_0..,distinct_count,max_weight,iters_mean
/// Missing truth or observation values are empty fields.
void write_trajectory_csv(std::ostream& out, const RunMetrics& metrics, Index dim_obs);

/// step,time,filter,distinct_count,max_weight,iters_mean,retries,resampled
void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);

/// run,filter,max_weight
void write_maxweights_csv(std::ostream& out, const Example2Result& result);

/// bin_lo,bin_hi,implicit,sir
void write_histogram_csv(std::ostream& out, const Example2Result& result);

/// filter,seeds,distinct_mean,distinct_mean_observed,rmse,max_weight_mean,iters_mean
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

/// Run-level aggregates as read back from summary.json.
struct RunSummary {
  std::string filter;
  std::int64_t steps = 0;
  int particles = 0;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  std::vector<double> rmse_per_component;
  double distinct_mean = 0.0;
  double distinct_mean_observed = 0.0;
  double max_weight_mean = 0.0;
  double iters_mean = 0.0;
  std::int64_t retries = 0;

  bool operator==(const RunSummary&) const = default;
};

RunSummary make_summary(const RunMetrics& metrics, const RunConfig& cfg);
std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& text);

/// Writes `contents` to `path` in binary mode, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace ipf

#endif  // IPF_IO_HPP
