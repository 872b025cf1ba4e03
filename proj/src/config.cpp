#include "ipf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ipf/errors.hpp"

namespace ipf {

namespace {

using nlohmann::json;

// Walks one JSON object, checking types and rejecting keys nobody read.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where("") + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    out = convert<T>(*it, key);
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return;
    out = convert<T>(*it, key);
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  template <class T>
  T convert(const json& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
          throw ConfigError(where(key) + ": expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
      if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of integers");
      for (const auto& e : v)
        if (!e.is_number_integer()) throw ConfigError(where(key) + ": expected an array of integers");
    }
    return v.get<T>();
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

JacobianMode jacobian_from_string(const std::string& s) {
  if (s == "finite_difference") return JacobianMode::finite_difference;
  if (s == "linearized") return JacobianMode::linearized;
  throw ConfigError("iteration.jacobian_mode: unknown mode '" + s + "'");
}

std::string to_string(JacobianMode m) {
  return m == JacobianMode::linearized ? "linearized" : "finite_difference";
}

ResampleMode resample_from_string(const std::string& s) {
  if (s == "every_step") return ResampleMode::every_step;
  if (s == "weight_ratio") return ResampleMode::weight_ratio;
  throw ConfigError("resample.mode: unknown mode '" + s + "'");
}

std::string to_string(ResampleMode m) { return m == ResampleMode::weight_ratio ? "weight_ratio" : "every_step"; }

void read_plankton(const json& node, PlanktonParams& p) {
  Reader r(node, "model.plankton");
  if (const json* init = r.child("initial")) {
    Reader ri(*init, "model.plankton.initial");
    ri.get("P", p.initial.P);
    ri.get("Z", p.initial.Z);
    ri.get("N", p.initial.N);
    ri.get("D", p.initial.D);
    ri.get("dgamma", p.initial.dgamma);
  }
  r.get("sigma_P", p.sigma_P);
  r.get("sigma_Z", p.sigma_Z);
  r.get("sigma_N", p.sigma_N);
  r.get("sigma_D", p.sigma_D);
  r.get("sigma_gamma", p.sigma_gamma);
  r.get("sigma_obs", p.sigma_obs);
  r.get("dt", p.dt);
}

void read_model(const json& node, ModelSpec& m) {
  Reader r(node, "model");
  std::string kind = to_string(m.kind);
  r.get("kind", kind);
  m.kind = model_from_string(kind);
  r.get("dims", m.dims);
  if (const json* lin = r.child("linear")) {
    Reader rl(*lin, "model.linear");
    rl.get("state", m.linear_state);
    rl.get("obs", m.linear_obs);
    rl.get("seed", m.linear_seed);
  }
  if (const json* pl = r.child("plankton")) read_plankton(*pl, m.plankton);
}

void read_observations(const json& node, ObsSchedule& o) {
  Reader r(node, "observations");
  r.get("first", o.first);
  r.get("interval", o.interval);
  r.get("count", o.count);
  r.get("times", o.times);
}

void read_resample(const json& node, ResamplePolicy& p) {
  Reader r(node, "resample");
  std::string mode = to_string(p.mode);
  r.get("mode", mode);
  p.mode = resample_from_string(mode);
  r.get("ratio_limit", p.ratio_limit);
  r.get("subset_size", p.subset_size);
  r.get("stratified", p.stratified);
}

void read_iteration(const json& node, IterationConfig& c) {
  Reader r(node, "iteration");
  r.get("tol", c.tol);
  r.get("max_iters", c.max_iters);
  std::string mode = to_string(c.jacobian_mode);
  r.get("jacobian_mode", mode);
  c.jacobian_mode = jacobian_from_string(mode);
  r.get("auto_linearized", c.auto_linearized);
  r.get("fd_step", c.fd_step);
  r.get("warm_start", c.warm_start);
  r.get("relaxation", c.relaxation);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  RunConfig& run = cfg.run;
  try {
    Reader r(doc, "");
    if (const json* m = r.child("model")) read_model(*m, run.model);
    std::string filter = to_string(run.filter);
    r.get("filter", filter);
    run.filter = filter_from_string(filter);
    if (const json* fs = r.child("filters")) {
      if (!fs->is_array()) throw ConfigError("filters: expected an array of strings");
      for (const auto& f : *fs) {
        if (!f.is_string()) throw ConfigError("filters: expected an array of strings");
        cfg.filters.push_back(filter_from_string(f.get<std::string>()));
      }
    }
    r.get("seeds", cfg.seeds);
    r.get("particles", run.particles);
    r.get("steps", run.steps);
    if (const json* o = r.child("observations")) read_observations(*o, run.observations);
    if (const json* rs = r.child("resample")) read_resample(*rs, run.resample);
    if (const json* it = r.child("iteration")) read_iteration(*it, run.iteration);
    r.get("seed", run.master_seed);
    r.get("truth_seed", run.truth_seed);
    r.get("workers", run.workers);
    r.get("backward_depth", run.backward_depth);
    r.get("retry_half_step", run.retry_half_step);
    r.get("track_moments", run.track_moments);
    std::string out = cfg.output_dir.string();
    r.get("output_dir", out);
    cfg.output_dir = out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  run.validate();
  run.model.plankton.validate();
  if (cfg.seeds < 1) throw ConfigError("seeds must be >= 1");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  const RunConfig& run = cfg.run;
  const PlanktonParams& p = run.model.plankton;
  json doc;
  doc["model"] = {
      {"kind", to_string(run.model.kind)},
      {"dims", run.model.dims},
      {"linear", {{"state", run.model.linear_state}, {"obs", run.model.linear_obs}, {"seed", run.model.linear_seed}}},
      {"plankton",
       {{"initial",
         {{"P", p.initial.P}, {"Z", p.initial.Z}, {"N", p.initial.N}, {"D", p.initial.D}, {"dgamma", p.initial.dgamma}}},
        {"sigma_P", p.sigma_P},
        {"sigma_Z", p.sigma_Z},
        {"sigma_N", p.sigma_N},
        {"sigma_D", p.sigma_D},
        {"sigma_gamma", p.sigma_gamma},
        {"sigma_obs", p.sigma_obs},
        {"dt", p.dt}}}};
  doc["filter"] = to_string(run.filter);
  json filters = json::array();
  for (FilterKind f : cfg.filters) filters.push_back(to_string(f));
  doc["filters"] = filters;
  doc["seeds"] = cfg.seeds;
  doc["particles"] = run.particles;
  doc["steps"] = run.steps;
  doc["observations"] = {{"first", run.observations.first},
                         {"interval", run.observations.interval},
                         {"count", run.observations.count ? json(*run.observations.count) : json(nullptr)},
                         {"times", run.observations.times}};
  doc["resample"] = {{"mode", to_string(run.resample.mode)},
                     {"ratio_limit", run.resample.ratio_limit},
                     {"subset_size", run.resample.subset_size ? json(*run.resample.subset_size) : json(nullptr)},
                     {"stratified", run.resample.stratified}};
  doc["iteration"] = {{"tol", run.iteration.tol},
                      {"max_iters", run.iteration.max_iters},
                      {"jacobian_mode", to_string(run.iteration.jacobian_mode)},
                      {"auto_linearized", run.iteration.auto_linearized},
                      {"fd_step", run.iteration.fd_step},
                      {"warm_start", run.iteration.warm_start},
                      {"relaxation", run.iteration.relaxation}};
  doc["seed"] = run.master_seed;
  doc["truth_seed"] = run.truth_seed ? json(*run.truth_seed) : json(nullptr);
  doc["workers"] = run.workers;
  doc["backward_depth"] = run.backward_depth;
  doc["retry_half_step"] = run.retry_half_step;
  doc["track_moments"] = run.track_moments;
  doc["output_dir"] = cfg.output_dir.string();
  return doc.dump(2);
}

}  // namespace ipf
