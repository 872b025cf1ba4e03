#include "ipf/experiments.hpp"

#include <algorithm>

#include "ipf/errors.hpp"
#include "ipf/kernels.hpp"
#include "ipf/rng.hpp"

namespace ipf {

Example2Result example2_study(Index dims, int particles, int runs, std::uint64_t seed, int workers) {
  if (dims < 1 || particles < 1 || runs < 1) throw ConfigError("example2: dims, particles and runs must be positive");
  const StateSpaceModel model = iid_gaussian_model(dims);
  Example2Result out{dims, particles, std::vector<double>(static_cast<std::size_t>(runs)),
                     std::vector<double>(static_cast<std::size_t>(runs))};

  for_each_index(Execution::parallel, runs, workers, [&](int r) {
    const std::uint64_t run_seed = derive_seed(seed, r);
    const TwinData data = synth_twin_data(model, run_seed, {1}, 1);
    RunConfig cfg;
    cfg.model.kind = ModelKind::iid_gaussian;
    cfg.model.dims = dims;
    cfg.particles = particles;
    cfg.steps = 1;
    cfg.master_seed = run_seed;
    cfg.workers = 1;
    cfg.filter = FilterKind::implicit;
    out.implicit_max[static_cast<std::size_t>(r)] = run_filter_serial(cfg, model, data).steps.front().max_weight;
    cfg.filter = FilterKind::sir;
    out.sir_max[static_cast<std::size_t>(r)] = run_filter_serial(cfg, model, data).steps.front().max_weight;
  });
  return out;
}

Histogram histogram01(const std::vector<double>& values, int bins) {
  if (bins < 1) throw ConfigError("histogram: bins must be positive");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) h.edges[static_cast<std::size_t>(k)] = static_cast<double>(k) / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) continue;
    const int k = std::min(static_cast<int>(v * bins), bins - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

std::vector<CompareRow> compare_filters(const RunConfig& cfg, const std::vector<FilterKind>& filters, int seeds) {
  if (filters.size() < 2) throw ConfigError("compare: need at least two filters");
  if (seeds < 1) throw ConfigError("compare: seeds must be positive");
  cfg.validate();
  const StateSpaceModel model = build_model(cfg.model);
  const auto obs_times = cfg.observations.resolve(cfg.steps);

  const std::size_t nf = filters.size();
  std::vector<RunMetrics> results(nf * static_cast<std::size_t>(seeds));
  for_each_index(Execution::parallel, seeds, cfg.workers, [&](int s) {
    const TwinData data = synth_twin_data(model, derive_seed(cfg.effective_truth_seed(), s), obs_times, cfg.steps);
    RunConfig run = cfg;
    run.master_seed = derive_seed(cfg.master_seed, s);
    run.workers = 1;
    for (std::size_t f = 0; f < nf; ++f) {
      run.filter = filters[f];
      results[static_cast<std::size_t>(s) * nf + f] = run_filter_serial(run, model, data);
    }
  });

  std::vector<CompareRow> rows(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    CompareRow& row = rows[f];
    row.filter = filters[f];
    row.seeds = seeds;
    for (int s = 0; s < seeds; ++s) {
      const RunMetrics& m = results[static_cast<std::size_t>(s) * nf + f];
      row.distinct_mean += m.distinct_mean;
      row.distinct_mean_observed += m.distinct_mean_observed;
      row.rmse += m.rmse;
      row.max_weight_mean += m.max_weight_mean;
      row.iters_mean += m.iters_mean;
    }
    const double n = seeds;
    row.distinct_mean /= n;
    row.distinct_mean_observed /= n;
    row.rmse /= n;
    row.max_weight_mean /= n;
    row.iters_mean /= n;
  }
  return rows;
}

}  // namespace ipf
