#include "commands.hpp"

#include <sstream>

#include "ipf/config.hpp"
#include "ipf/errors.hpp"
#include "ipf/experiments.hpp"
#include "ipf/io.hpp"

namespace ipf::cli {

namespace {

// Config file first, then flags on top; validation runs on the merged result.
ExperimentConfig merged_config(const std::filesystem::path& path, const Overrides& o) {
  ExperimentConfig cfg = load_config(path);
  RunConfig& run = cfg.run;
  if (o.seed) run.master_seed = *o.seed;
  if (o.truth_seed) run.truth_seed = *o.truth_seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.filter) run.filter = filter_from_string(*o.filter);
  if (o.filters) {
    cfg.filters.clear();
    std::stringstream list(*o.filters);
    for (std::string name; std::getline(list, name, ',');) cfg.filters.push_back(filter_from_string(name));
  }
  if (o.seeds) cfg.seeds = *o.seeds;
  if (o.particles) run.particles = *o.particles;
  if (o.steps) run.steps = *o.steps;
  if (o.workers) run.workers = *o.workers;
  if (o.backward_depth) run.backward_depth = *o.backward_depth;
  if (o.retry_half_step) run.retry_half_step = *o.retry_half_step;
  if (o.track_moments) run.track_moments = *o.track_moments;
  if (o.model) run.model.kind = model_from_string(*o.model);
  if (o.dims) run.model.dims = *o.dims;
  if (o.obs_first) run.observations.first = *o.obs_first;
  if (o.obs_interval) run.observations.interval = *o.obs_interval;
  if (o.obs_count) run.observations.count = *o.obs_count;
  if (o.resample_mode) {
    if (*o.resample_mode == "every_step") run.resample.mode = ResampleMode::every_step;
    else if (*o.resample_mode == "weight_ratio") run.resample.mode = ResampleMode::weight_ratio;
    else throw ConfigError("--resample-mode: unknown mode '" + *o.resample_mode + "'");
  }
  if (o.ratio_limit) run.resample.ratio_limit = *o.ratio_limit;
  if (o.subset_size) run.resample.subset_size = *o.subset_size;
  if (o.stratified) run.resample.stratified = *o.stratified;
  if (o.tol) run.iteration.tol = *o.tol;
  if (o.max_iters) run.iteration.max_iters = *o.max_iters;
  if (o.jacobian_mode) {
    if (*o.jacobian_mode == "finite_difference") run.iteration.jacobian_mode = JacobianMode::finite_difference;
    else if (*o.jacobian_mode == "linearized") run.iteration.jacobian_mode = JacobianMode::linearized;
    else throw ConfigError("--jacobian-mode: unknown mode '" + *o.jacobian_mode + "'");
  }
  if (o.auto_linearized) run.iteration.auto_linearized = *o.auto_linearized;
  if (o.fd_step) run.iteration.fd_step = *o.fd_step;
  if (o.warm_start) run.iteration.warm_start = *o.warm_start;
  if (o.relaxation) run.iteration.relaxation = *o.relaxation;
  run.validate();
  return cfg;
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const FilterError& e) {
    err << "numerical failure at step " << e.step() << ", particle " << e.particle() << ": " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace

int cmd_run(const std::filesystem::path& config, const Overrides& overrides, bool quiet, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = merged_config(config, overrides);
    const StateSpaceModel model = build_model(cfg.run.model);
    const TwinData data = synth_twin_data(model, cfg.run.effective_truth_seed(),
                                          cfg.run.observations.resolve(cfg.run.steps), cfg.run.steps);
    const RunMetrics metrics = run_filter(cfg.run, model, data);

    write_file(cfg.output_dir / "trajectory.csv",
               render([&](std::ostream& s) { write_trajectory_csv(s, metrics, model.dim_obs); }));
    write_file(cfg.output_dir / "metrics.csv", render([&](std::ostream& s) { write_metrics_csv(s, metrics); }));
    write_file(cfg.output_dir / "summary.json", summary_to_json(make_summary(metrics, cfg.run)));
    if (!quiet)
      out << metrics.filter << ": steps=" << metrics.steps.size() << " rmse=" << format_double(metrics.rmse)
          << " distinct_mean=" << format_double(metrics.distinct_mean) << " -> " << cfg.output_dir.string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_compare(const std::filesystem::path& config, const Overrides& overrides, bool quiet, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = merged_config(config, overrides);
    if (cfg.filters.size() < 2) throw ConfigError("compare: config must list at least two filters");
    const auto rows = compare_filters(cfg.run, cfg.filters, cfg.seeds);
    const std::string table = render([&](std::ostream& s) { write_compare_csv(s, rows); });
    write_file(cfg.output_dir / "compare.csv", table);
    if (!quiet) out << table;
    return static_cast<int>(kOk);
  });
}

int cmd_example2(const Example2Args& args, bool quiet, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.dims < 1 || args.particles < 1 || args.runs < 1)
      throw ConfigError("example2: --dims, --particles and --runs must be positive");
    const Example2Result result = example2_study(args.dims, args.particles, args.runs, args.seed, args.workers);
    write_file(args.output_dir / "maxweights.csv", render([&](std::ostream& s) { write_maxweights_csv(s, result); }));
    write_file(args.output_dir / "histogram.csv", render([&](std::ostream& s) { write_histogram_csv(s, result); }));
    if (!quiet) {
      int over_half = 0;
      for (double w : result.sir_max) over_half += w > 0.5;
      out << "d=" << args.dims << " M=" << args.particles << " runs=" << args.runs
          << ": SIR max weight > 0.5 in " << over_half << " runs\n";
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace ipf::cli
