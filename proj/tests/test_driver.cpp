#include <gmock/gmock.h>

#include <cmath>

#include "ipf/baselines.hpp"
#include "ipf/driver.hpp"
#include "ipf/errors.hpp"
#include "ipf/rng.hpp"
#include "test_support.hpp"

namespace {

using ipf::FilterKind;
using ipf::Matrix;
using ipf::ModelKind;
using ipf::RunConfig;
using ipf::RunMetrics;
using ipf::Vector;
using ipf::testing::vec;

RunConfig linear_config() {
  RunConfig cfg;
  cfg.model.kind = ModelKind::linear;
  cfg.model.linear_seed = 4;
  cfg.particles = 40;
  cfg.steps = 30;
  cfg.master_seed = 17;
  return cfg;
}

RunConfig plankton_config(FilterKind filter) {
  RunConfig cfg;
  cfg.model.kind = ModelKind::plankton;
  cfg.model.plankton.sigma_P = cfg.model.plankton.initial.P;
  cfg.filter = filter;
  cfg.particles = 12;
  cfg.steps = 60;
  cfg.observations.first = 3;
  cfg.observations.interval = 3;
  cfg.iteration.warm_start = true;
  cfg.master_seed = 5;
  return cfg;
}

void expect_identical(const RunMetrics& a, const RunMetrics& b) {
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t n = 0; n < a.steps.size(); ++n) {
    EXPECT_EQ(a.steps[n].mean, b.steps[n].mean) << "step " << n;
    EXPECT_EQ(a.steps[n].stddev, b.steps[n].stddev) << "step " << n;
    EXPECT_EQ(a.steps[n].max_weight, b.steps[n].max_weight) << "step " << n;
    EXPECT_EQ(a.steps[n].distinct_count, b.steps[n].distinct_count) << "step " << n;
    EXPECT_EQ(a.steps[n].iters_mean, b.steps[n].iters_mean) << "step " << n;
  }
  EXPECT_EQ(a.rmse, b.rmse);
}

TEST(RunFilter, ZeroStepsGivesEmptyMetrics) {
  RunConfig cfg = linear_config();
  cfg.steps = 0;
  const auto metrics = ipf::run_filter(cfg);
  EXPECT_TRUE(metrics.steps.empty());
  EXPECT_EQ(metrics.rmse, 0.0);
}

TEST(RunFilter, MetricLengthsEqualSteps) {
  for (FilterKind f : {FilterKind::implicit, FilterKind::implicit_backward, FilterKind::sir}) {
    const auto metrics = ipf::run_filter(plankton_config(f));
    ASSERT_EQ(metrics.steps.size(), 60u) << ipf::to_string(f);
    for (std::size_t n = 0; n < metrics.steps.size(); ++n) EXPECT_EQ(metrics.steps[n].step, static_cast<int>(n) + 1);
  }
}

TEST(RunFilter, IidGaussianWeightsAreUniform) {
  RunConfig cfg;
  cfg.model.kind = ModelKind::iid_gaussian;
  cfg.model.dims = 100;
  cfg.particles = 1000;
  cfg.steps = 3;
  const auto metrics = ipf::run_filter(cfg);
  for (const auto& s : metrics.steps) EXPECT_NEAR(s.max_weight, 1.0 / 1000, 1e-15);
}

TEST(RunFilter, SingleParticleMomentsFollowKalman) {
  RunConfig cfg = linear_config();
  cfg.particles = 1;
  cfg.steps = 100;
  cfg.observations.interval = 2;
  cfg.track_moments = true;
  const auto model = ipf::build_model(cfg.model);
  const auto data = ipf::synth_twin_data(model, 3, cfg.observations.resolve(cfg.steps), cfg.steps);
  const auto metrics = ipf::run_filter(cfg, model, data);
  ASSERT_EQ(metrics.moments.size(), 100u);
  ipf::KalmanState ks{model.initial_state, Matrix::Zero(3, 3)};
  for (std::int64_t n = 1; n <= cfg.steps; ++n) {
    const auto& rec = data.observations[static_cast<std::size_t>(n - 1)];
    ks = ipf::kalman_step(model, ks, model.time_of(n - 1), rec.present ? &rec.value : nullptr);
    const auto& gm = metrics.moments[static_cast<std::size_t>(n - 1)];
    EXPECT_LT((gm.mean - ks.mean).lpNorm<Eigen::Infinity>(), 1e-10) << "step " << n;
    EXPECT_LT((gm.cov - ks.cov).lpNorm<Eigen::Infinity>(), 1e-10) << "step " << n;
  }
}

TEST(RunFilter, TrackMomentsNeedsLinearDrift) {
  RunConfig cfg = plankton_config(FilterKind::implicit);
  cfg.track_moments = true;
  EXPECT_THROW(ipf::run_filter(cfg), ipf::ConfigError);
}

TEST(RunFilter, LinearObservationSingleIteration) {
  RunConfig cfg = linear_config();
  const auto metrics = ipf::run_filter(cfg);
  for (const auto& s : metrics.steps) EXPECT_EQ(s.iters_mean, 1.0);
}

TEST(RunFilter, SameSeedSameMetrics) {
  for (FilterKind f : {FilterKind::implicit, FilterKind::implicit_backward, FilterKind::sir}) {
    const RunConfig cfg = plankton_config(f);
    expect_identical(ipf::run_filter(cfg), ipf::run_filter(cfg));
  }
}

TEST(RunFilter, WorkerCountDoesNotChangeResults) {
  for (FilterKind f : {FilterKind::implicit, FilterKind::implicit_backward, FilterKind::sir}) {
    RunConfig cfg = plankton_config(f);
    const auto model = ipf::build_model(cfg.model);
    const auto data = ipf::synth_twin_data(model, 9, cfg.observations.resolve(cfg.steps), cfg.steps);
    const auto serial = ipf::run_filter_serial(cfg, model, data);
    cfg.workers = 8;
    expect_identical(serial, ipf::run_filter(cfg, model, data));
    cfg.workers = 1;
    expect_identical(serial, ipf::run_filter(cfg, model, data));
  }
}

TEST(RunFilter, DifferentSeedsDiffer) {
  RunConfig a = plankton_config(FilterKind::implicit);
  RunConfig b = a;
  b.master_seed = a.master_seed + 1;
  b.truth_seed = a.master_seed;
  EXPECT_NE(ipf::run_filter(a).steps.back().mean, ipf::run_filter(b).steps.back().mean);
}

TEST(RunFilter, BackwardPassKeepsFiniteWeights) {
  RunConfig cfg = plankton_config(FilterKind::implicit_backward);
  cfg.observations.interval = 1;
  cfg.observations.first = 1;
  const auto metrics = ipf::run_filter(cfg);
  for (const auto& s : metrics.steps) {
    EXPECT_TRUE(std::isfinite(s.max_weight));
    EXPECT_GT(s.iters_mean, 0.0);
  }
  // The backward pass changes the trajectory relative to the plain filter.
  cfg.filter = FilterKind::implicit;
  EXPECT_NE(metrics.steps.back().mean, ipf::run_filter(cfg).steps.back().mean);
}

TEST(RunFilter, DistinctCountOnlyDropsWhenResampling) {
  RunConfig cfg = plankton_config(FilterKind::sir);
  cfg.resample.mode = ipf::ResampleMode::weight_ratio;
  cfg.resample.ratio_limit = 1e6;
  const auto metrics = ipf::run_filter(cfg);
  for (const auto& s : metrics.steps) {
    if (!s.resampled) EXPECT_EQ(s.distinct_count, cfg.particles);
    EXPECT_LE(s.distinct_count, cfg.particles);
  }
}

// Cubic observation with the prior mean below zero and b = 2: the plain
// forward iteration cycles for some reference draws.
ipf::StateSpaceModel stiff_cubic() {
  auto model = ipf::testing::scalar_cubic(0.0, 1.0, 0.5);
  model.initial_state = vec({-1.0});
  return model;
}

ipf::TwinData single_observation(double b) {
  ipf::TwinData data;
  data.truth = {vec({0.0}), vec({std::cbrt(b)})};
  data.observations = {ipf::ObservationRecord{1, vec({b}), true}};
  return data;
}

TEST(RunFilter, NonconvergenceCarriesStepAndParticle) {
  RunConfig cfg;
  cfg.particles = 30;
  cfg.steps = 1;
  cfg.retry_half_step = false;
  cfg.iteration.relaxation = false;
  cfg.iteration.warm_start = true;
  cfg.iteration.max_iters = 50;
  const auto model = stiff_cubic();
  const auto data = single_observation(2.0);

  // Independent search for the first particle whose own draw fails.
  int first_failure = -1;
  for (int i = 0; i < cfg.particles && first_failure < 0; ++i) {
    const Vector xi = ipf::rng_substream(cfg.master_seed, 1, i, ipf::StreamRole::reference).normals(1);
    try {
      ipf::forward_step(model, model.initial_state, 0.0, data.observations[0].value, xi, cfg.iteration);
    } catch (const ipf::Nonconvergence&) {
      first_failure = i;
    }
  }
  ASSERT_GE(first_failure, 0) << "no particle fails; the scenario does not exercise the error path";

  for (int workers : {1, 8}) {
    cfg.workers = workers;
    try {
      ipf::run_filter(cfg, model, data);
      FAIL() << "expected FilterError";
    } catch (const ipf::FilterError& e) {
      EXPECT_EQ(e.step(), 1);
      EXPECT_EQ(e.particle(), first_failure);
      EXPECT_THAT(e.what(), ::testing::HasSubstr("did not converge"));
    }
  }
}

ipf::TwinData two_steps(double b, bool observe_first) {
  ipf::TwinData data;
  data.truth = {vec({0.0}), vec({std::cbrt(b)}), vec({std::cbrt(b)})};
  data.observations = {ipf::ObservationRecord{1, vec({b}), observe_first}, ipf::ObservationRecord{2, vec({b}), true}};
  return data;
}

TEST(RunFilter, RelaxationRescuesForwardStalls) {
  RunConfig cfg;
  cfg.particles = 30;
  cfg.steps = 1;
  cfg.iteration.warm_start = true;
  cfg.iteration.max_iters = 50;
  const auto metrics = ipf::run_filter(cfg, stiff_cubic(), single_observation(2.0));
  ASSERT_EQ(metrics.steps.size(), 1u);
  EXPECT_TRUE(std::isfinite(metrics.steps[0].max_weight));
  EXPECT_LE(metrics.steps[0].iters_mean, cfg.iteration.max_iters);
}

TEST(RunFilter, HalfStepRetryIsAttemptedBeforeFailing) {
  RunConfig cfg;
  cfg.particles = 30;
  cfg.steps = 1;
  cfg.iteration.warm_start = true;
  cfg.iteration.max_iters = 50;
  cfg.iteration.relaxation = false;
  try {
    ipf::run_filter(cfg, stiff_cubic(), single_observation(2.0));
    FAIL() << "expected FilterError";
  } catch (const ipf::FilterError& e) {
    // The error that escapes comes from the retried pair over delta / 2.
    EXPECT_THAT(e.what(), ::testing::HasSubstr("sparse_step"));
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(RunFilter, HalfStepRetryRecoversForwardFailure) {
  RunConfig cfg;
  cfg.particles = 30;
  cfg.steps = 2;
  cfg.iteration.warm_start = true;
  cfg.iteration.max_iters = 50;
  auto model = ipf::testing::scalar_cubic(0.0, 1.0, 0.2);
  model.initial_state = vec({-2.0});
  const auto metrics = ipf::run_filter(cfg, model, two_steps(1.0, true));
  EXPECT_GT(metrics.retries, 0);
  for (const auto& s : metrics.steps) EXPECT_TRUE(std::isfinite(s.max_weight));
}

TEST(RunFilter, PairFallbackRetriesCountOnce) {
  RunConfig cfg;
  cfg.particles = 30;
  cfg.steps = 2;
  cfg.iteration.warm_start = true;
  cfg.iteration.max_iters = 50;
  const auto data = two_steps(2.0, false);
  const auto metrics = ipf::run_filter(cfg, stiff_cubic(), data);
  ASSERT_EQ(metrics.steps.size(), 2u);
  EXPECT_EQ(metrics.steps[0].retries, 0);
  EXPECT_GT(metrics.steps[1].retries, 0);
  EXPECT_EQ(metrics.retries, metrics.steps[1].retries);

  // Independent count: particles whose joint pair fails without the fallback.
  const auto model = stiff_cubic();
  int failing = 0;
  for (int i = 0; i < cfg.particles; ++i) {
    const Vector xi_n = ipf::rng_substream(cfg.master_seed, 1, i, ipf::StreamRole::reference).normals(1);
    const Vector xi_np1 = ipf::rng_substream(cfg.master_seed, 2, i, ipf::StreamRole::reference).normals(1);
    try {
      ipf::sparse_step(model, model.initial_state, 0.0, data.observations[1].value, xi_n, xi_np1, cfg.iteration);
    } catch (const ipf::Nonconvergence&) {
      ++failing;
    }
  }
  EXPECT_EQ(metrics.retries, failing);
}

TEST(RunConfig, Validate) {
  RunConfig cfg;
  cfg.particles = 0;
  EXPECT_THROW(cfg.validate(), ipf::ConfigError);
  cfg = RunConfig{};
  cfg.steps = -1;
  EXPECT_THROW(cfg.validate(), ipf::ConfigError);
}

TEST(ObsSchedule, Resolve) {
  ipf::ObsSchedule s;
  s.first = 7;
  s.interval = 7;
  s.count = 190;
  const auto t = s.resolve(1330);
  ASSERT_EQ(t.size(), 190u);
  EXPECT_EQ(t.front(), 7);
  EXPECT_EQ(t.back(), 1330);
  s.count.reset();
  EXPECT_EQ(s.resolve(20), (std::vector<std::int64_t>{7, 14}));
  s.times = {2, 5};
  EXPECT_EQ(s.resolve(20), (std::vector<std::int64_t>{2, 5}));
}

TEST(Names, RoundTrip) {
  for (FilterKind f : {FilterKind::implicit, FilterKind::implicit_backward, FilterKind::sir})
    EXPECT_EQ(ipf::filter_from_string(ipf::to_string(f)), f);
  for (ModelKind m : {ModelKind::linear, ModelKind::iid_gaussian, ModelKind::plankton})
    EXPECT_EQ(ipf::model_from_string(ipf::to_string(m)), m);
  EXPECT_THROW(ipf::filter_from_string("enkf"), ipf::ConfigError);
}

}  // namespace
