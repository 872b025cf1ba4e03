#include "ipf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <locale>

#include <json.hpp>

#include "ipf/errors.hpp"

namespace ipf {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

namespace {

void vector_fields(std::ostream& out, const std::optional<Vector>& v, Index n) {
  for (Index j = 0; j < n; ++j) {
    out << ',';
    if (v) out << format_double((*v)(j));
  }
}

void header_block(std::ostream& out, const char* prefix, Index n) {
  for (Index j = 0; j < n; ++j) out << ',' << prefix << j;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const RunMetrics& metrics, Index dim_obs) {
  out.imbue(std::locale::classic());
  const Index m = metrics.steps.empty() ? 0 : metrics.steps.front().mean.size();
  out << "step,time,filter";
  header_block(out, "mean_", m);
  header_block(out, "std_", m);
  header_block(out, "truth_", m);
  header_block(out, "obs_", dim_obs);
  out << ",distinct_count,max_weight,iters_mean\n";
  for (const auto& s : metrics.steps) {
    out << s.step << ',' << format_double(s.time) << ',' << metrics.filter;
    vector_fields(out, s.mean, m);
    vector_fields(out, s.stddev, m);
    vector_fields(out, s.truth, m);
    vector_fields(out, s.observation, dim_obs);
    out << ',' << s.distinct_count << ',' << format_double(s.max_weight) << ',' << format_double(s.iters_mean)
        << '\n';
  }
}

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
  out.imbue(std::locale::classic());
  out << "step,time,filter,distinct_count,max_weight,iters_mean,retries,resampled\n";
  for (const auto& s : metrics.steps)
    out << s.step << ',' << format_double(s.time) << ',' << metrics.filter << ',' << s.distinct_count << ','
        << format_double(s.max_weight) << ',' << format_double(s.iters_mean) << ',' << s.retries << ','
        << (s.resampled ? 1 : 0)
        << '\n';
}

void write_maxweights_csv(std::ostream& out, const Example2Result& result) {
  out.imbue(std::locale::classic());
  out << "run,filter,max_weight\n";
  for (std::size_t r = 0; r < result.implicit_max.size(); ++r)
    out << r << ",implicit," << format_double(result.implicit_max[r]) << '\n';
  for (std::size_t r = 0; r < result.sir_max.size(); ++r)
    out << r << ",sir," << format_double(result.sir_max[r]) << '\n';
}

void write_histogram_csv(std::ostream& out, const Example2Result& result) {
  out.imbue(std::locale::classic());
  const Histogram hi = histogram01(result.implicit_max);
  const Histogram hs = histogram01(result.sir_max);
  out << "bin_lo,bin_hi,implicit,sir\n";
  for (std::size_t k = 0; k < hi.counts.size(); ++k)
    out << format_double(hi.edges[k]) << ',' << format_double(hi.edges[k + 1]) << ',' << hi.counts[k] << ','
        << hs.counts[k] << '\n';
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out.imbue(std::locale::classic());
  out << "filter,seeds,distinct_mean,distinct_mean_observed,rmse,max_weight_mean,iters_mean\n";
  for (const auto& r : rows)
    out << to_string(r.filter) << ',' << r.seeds << ',' << format_double(r.distinct_mean) << ','
        << format_double(r.distinct_mean_observed) << ',' << format_double(r.rmse) << ','
        << format_double(r.max_weight_mean) << ',' << format_double(r.iters_mean) << '\n';
}

RunSummary make_summary(const RunMetrics& metrics, const RunConfig& cfg) {
  RunSummary s;
  s.filter = metrics.filter;
  s.steps = static_cast<std::int64_t>(metrics.steps.size());
  s.particles = cfg.particles;
  s.seed = cfg.master_seed;
  s.rmse = metrics.rmse;
  s.rmse_per_component.assign(metrics.rmse_per_component.data(),
                              metrics.rmse_per_component.data() + metrics.rmse_per_component.size());
  s.distinct_mean = metrics.distinct_mean;
  s.distinct_mean_observed = metrics.distinct_mean_observed;
  s.max_weight_mean = metrics.max_weight_mean;
  s.iters_mean = metrics.iters_mean;
  s.retries = metrics.retries;
  return s;
}

std::string summary_to_json(const RunSummary& s) {
  // nlohmann writes doubles in shortest round-trip form, so parsing the
  // output reproduces every aggregate bit for bit.
  nlohmann::ordered_json doc;
  doc["filter"] = s.filter;
  doc["steps"] = s.steps;
  doc["particles"] = s.particles;
  doc["seed"] = s.seed;
  doc["rmse"] = s.rmse;
  doc["rmse_per_component"] = s.rmse_per_component;
  doc["distinct_mean"] = s.distinct_mean;
  doc["distinct_mean_observed"] = s.distinct_mean_observed;
  doc["max_weight_mean"] = s.max_weight_mean;
  doc["iters_mean"] = s.iters_mean;
  doc["retries"] = s.retries;
  return doc.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    RunSummary s;
    s.filter = doc.at("filter").get<std::string>();
    s.steps = doc.at("steps").get<std::int64_t>();
    s.particles = doc.at("particles").get<int>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.rmse = doc.at("rmse").get<double>();
    s.rmse_per_component = doc.at("rmse_per_component").get<std::vector<double>>();
    s.distinct_mean = doc.at("distinct_mean").get<double>();
    s.distinct_mean_observed = doc.at("distinct_mean_observed").get<double>();
    s.max_weight_mean = doc.at("max_weight_mean").get<double>();
    s.iters_mean = doc.at("iters_mean").get<double>();
    s.retries = doc.at("retries").get<std::int64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("summary.json: ") + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace ipf
