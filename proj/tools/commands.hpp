#ifndef IPF_TOOLS_COMMANDS_HPP
#define IPF_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace ipf::cli {

/// Command-line overrides; unset fields leave the config file value alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> truth_seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> filter;
  std::optional<std::string> filters;  // comma separated, compare only
  std::optional<int> seeds;
  std::optional<int> particles;
  std::optional<std::int64_t> steps;
  std::optional<int> workers;
  std::optional<int> backward_depth;
  std::optional<bool> retry_half_step;
  std::optional<bool> track_moments;
  std::optional<std::string> model;
  std::optional<std::int64_t> dims;
  std::optional<std::int64_t> obs_first;
  std::optional<std::int64_t> obs_interval;
  std::optional<std::int64_t> obs_count;
  std::optional<std::string> resample_mode;
  std::optional<double> ratio_limit;
  std::optional<int> subset_size;
  std::optional<bool> stratified;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<std::string> jacobian_mode;
  std::optional<bool> auto_linearized;
  std::optional<double> fd_step;
  std::optional<bool> warm_start;
  std::optional<bool> relaxation;
};

struct Example2Args {
  std::int64_t dims = 100;
  int particles = 1000;
  int runs = 1000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: all available threads
  std::filesystem::path output_dir = ".";
};

enum ExitCode : int { kOk = 0, kConfigError = 1, kNumericalError = 2 };

int cmd_run(const std::filesystem::path& config, const Overrides& overrides, bool quiet, std::ostream& out,
            std::ostream& err);
int cmd_compare(const std::filesystem::path& config, const Overrides& overrides, bool quiet, std::ostream& out,
                std::ostream& err);
int cmd_example2(const Example2Args& args, bool quiet, std::ostream& out, std::ostream& err);

}  // namespace ipf::cli

#endif  // IPF_TOOLS_COMMANDS_HPP
