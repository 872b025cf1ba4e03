#ifndef IPF_CONFIG_HPP
#define IPF_CONFIG_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "ipf/driver.hpp"

namespace ipf {

/// A run configuration plus the experiment-level keys used by `compare`.
struct ExperimentConfig {
  RunConfig run;
  std::vector<FilterKind> filters;  // compare only
  int seeds = 1;                    // compare only
  std::filesystem::path output_dir = ".";
};

/// Parses a JSON document (schema in docs/config.md). Unknown keys and
/// ill-typed values raise ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Serializes every key understood by parse_config.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace ipf

#endif  // IPF_CONFIG_HPP
