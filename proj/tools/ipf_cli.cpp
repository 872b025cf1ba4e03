// ipf: run implicit and SIR particle filters on synthetic twin experiments.
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_run_flags(CLI::App& cmd, ipf::cli::Overrides& o) {
  cmd.add_option("--seed", o.seed, "Master seed for filter streams");
  cmd.add_option("--truth-seed", o.truth_seed, "Seed for the synthetic truth (default: --seed)");
  cmd.add_option("--output-dir", o.output_dir, "Directory for output files");
  cmd.add_option("--filter", o.filter, "implicit | implicit_backward | sir");
  cmd.add_option("--particles", o.particles, "Ensemble size M");
  cmd.add_option("--steps", o.steps, "Number of model steps");
  cmd.add_option("--workers", o.workers, "Threads (0: all available)");
  cmd.add_option("--backward-depth", o.backward_depth, "Backward passes after each observed step");
  cmd.add_option("--retry-half-step", o.retry_half_step, "Retry nonconverged steps as two half steps");
  cmd.add_option("--track-moments", o.track_moments, "Record Gaussian moments (linear models)");
  cmd.add_option("--model", o.model, "linear | iid_gaussian | plankton");
  cmd.add_option("--dims", o.dims, "Dimension of the iid_gaussian model");
  cmd.add_option("--obs-first", o.obs_first, "First observed step");
  cmd.add_option("--obs-interval", o.obs_interval, "Steps between observations");
  cmd.add_option("--obs-count", o.obs_count, "Number of observations");
  cmd.add_option("--resample-mode", o.resample_mode, "every_step | weight_ratio");
  cmd.add_option("--ratio-limit", o.ratio_limit, "Weight ratio that triggers resampling");
  cmd.add_option("--subset-size", o.subset_size, "Resample within blocks of this size");
  cmd.add_option("--stratified", o.stratified, "Stratified resampling uniforms");
  cmd.add_option("--tol", o.tol, "Iteration tolerance");
  cmd.add_option("--max-iters", o.max_iters, "Iteration cap");
  cmd.add_option("--jacobian-mode", o.jacobian_mode, "finite_difference | linearized");
  cmd.add_option("--auto-linearized", o.auto_linearized, "Use the exact linearized Jacobian when available");
  cmd.add_option("--fd-step", o.fd_step, "Finite-difference step");
  cmd.add_option("--warm-start", o.warm_start, "Start iterations at the prior mean");
  cmd.add_option("--relaxation", o.relaxation, "Retry stalled iterations with damped updates");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit particle filter experiments"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet,-q", quiet, "Suppress progress output");

  std::string run_config;
  ipf::cli::Overrides run_over;
  auto* run = app.add_subcommand("run", "Run one filter and write trajectory.csv, metrics.csv, summary.json");
  run->add_option("--config", run_config, "JSON config file")->required();
  add_run_flags(*run, run_over);
  run->add_flag("--quiet,-q", quiet, "Suppress progress output");

  std::string cmp_config;
  ipf::cli::Overrides cmp_over;
  auto* cmp = app.add_subcommand("compare", "Run several filters on identical data and seeds");
  cmp->add_option("--config", cmp_config, "JSON config file")->required();
  add_run_flags(*cmp, cmp_over);
  cmp->add_option("--filters", cmp_over.filters, "Comma-separated filter list");
  cmp->add_option("--seeds", cmp_over.seeds, "Number of seeds to average over");
  cmp->add_flag("--quiet,-q", quiet, "Suppress progress output");

  ipf::cli::Example2Args ex2;
  std::string ex2_out = ".";
  auto* e2 = app.add_subcommand("example2", "Max-weight study on the iid Gaussian model");
  e2->add_option("--dims", ex2.dims, "State dimension")->check(CLI::PositiveNumber);
  e2->add_option("--particles", ex2.particles, "Particles per run")->check(CLI::PositiveNumber);
  e2->add_option("--runs", ex2.runs, "Number of runs")->check(CLI::PositiveNumber);
  e2->add_option("--seed", ex2.seed, "Master seed");
  e2->add_option("--workers", ex2.workers, "Threads (0: all available)");
  e2->add_option("--output-dir", ex2_out, "Directory for output files");
  e2->add_flag("--quiet,-q", quiet, "Suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Error& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ipf::cli::kConfigError;
  }

  if (*run) return ipf::cli::cmd_run(run_config, run_over, quiet, std::cout, std::cerr);
  if (*cmp) return ipf::cli::cmd_compare(cmp_config, cmp_over, quiet, std::cout, std::cerr);
  ex2.output_dir = ex2_out;
  return ipf::cli::cmd_example2(ex2, quiet, std::cout, std::cerr);
}
