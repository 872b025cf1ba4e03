#include <gmock/gmock.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ipf/baselines.hpp"
#include "ipf/errors.hpp"
#include "ipf/implicit_sampling.hpp"
#include "ipf/models.hpp"
#include "test_support.hpp"

namespace {

using ipf::KalmanState;
using ipf::Matrix;
using ipf::Vector;
using ipf::testing::random_normal;
using ipf::testing::vec;

TEST(SirStep, ExactMatchHasZeroIncrement) {
  const auto model = ipf::testing::scalar_linear(0.0, 1.0, 1.0, 1.0);
  const Vector b = vec({1.3});
  const auto s = ipf::sir_step(model, vec({1.0}), 0.0, &b, vec({0.3}));
  EXPECT_NEAR(s.new_state[0], 1.3, 1e-15);
  EXPECT_NEAR(s.log_weight_increment, 0.0, 1e-28);
}

TEST(SirStep, UnitResidual) {
  const auto model = ipf::testing::scalar_linear(0.0, 1.0, 1.0, 1.0);
  const Vector b = vec({2.0});
  EXPECT_DOUBLE_EQ(ipf::sir_step(model, vec({1.0}), 0.0, &b, vec({0.0})).log_weight_increment, -0.5);
  EXPECT_EQ(ipf::sir_step(model, vec({1.0}), 0.0, nullptr, vec({0.0})).log_weight_increment, 0.0);
}

TEST(SirStep, ProjectsBeforeWeighting) {
  const ipf::PlanktonParams params;
  const auto model = ipf::plankton_model(params);
  Vector noise = Vector::Zero(5);
  noise[0] = -1e5;
  const Vector b = vec({std::log(params.floors().P)});
  const auto s = ipf::sir_step(model, model.initial_state, 0.0, &b, noise);
  EXPECT_EQ(s.new_state[0], params.floors().P);
  EXPECT_NEAR(s.log_weight_increment, 0.0, 1e-28);
}

TEST(SirStep, HighDimensionalWeightsDegenerate) {
  const ipf::Index d = 100;
  const int M = 1000;
  const auto model = ipf::iid_gaussian_model(d);
  std::mt19937_64 gen(2);
  const Vector truth = random_normal(gen, d);
  const Vector b = truth + random_normal(gen, d);
  std::vector<double> logw;
  for (int i = 0; i < M; ++i) logw.push_back(ipf::sir_step(model, Vector::Zero(d), 0.0, &b, random_normal(gen, d)).log_weight_increment);
  const auto [lo, hi] = std::minmax_element(logw.begin(), logw.end());
  EXPECT_GT(*hi - *lo, 20.0);
  EXPECT_GT(ipf::max_normalized_weight(logw), 0.1);
}

TEST(SirStep, SmallNoiseConcentratesOnNearestParticle) {
  const auto model = ipf::testing::scalar_linear(0.0, 1.0, 1.0, 1e-3);
  std::mt19937_64 gen(3);
  const Vector b = vec({0.37});
  std::vector<double> logw;
  std::vector<double> dist;
  for (int i = 0; i < 200; ++i) {
    const auto s = ipf::sir_step(model, Vector::Zero(1), 0.0, &b, random_normal(gen, 1));
    logw.push_back(s.log_weight_increment);
    dist.push_back(std::abs(s.new_state[0] - b[0]));
  }
  EXPECT_EQ(std::max_element(logw.begin(), logw.end()) - logw.begin(),
            std::min_element(dist.begin(), dist.end()) - dist.begin());
}

TEST(KalmanStep, ConjugateScalarUpdate) {
  // Zero drift, tiny diffusion: the prior stays N(0, 1).
  const auto model = ipf::testing::scalar_linear(0.0, 1e-200, 1.0, 1.0);
  const Vector b = vec({1.0});
  const auto post = ipf::kalman_step(model, KalmanState{vec({0.0}), Matrix::Ones(1, 1)}, 0.0, &b);
  EXPECT_NEAR(post.mean[0], 0.5, 1e-15);
  EXPECT_NEAR(post.cov(0, 0), 0.5, 1e-15);
}

TEST(KalmanStep, ZeroObservationMatrixLeavesPrediction) {
  const auto model = ipf::testing::scalar_linear(-0.5, 1.0, 0.0, 1.0, 0.2);
  const Vector b = vec({5.0});
  const KalmanState ks{vec({2.0}), Matrix::Constant(1, 1, 3.0)};
  const auto with = ipf::kalman_step(model, ks, 0.0, &b);
  const auto without = ipf::kalman_step(model, ks, 0.0, nullptr);
  EXPECT_EQ(with.mean, without.mean);
  EXPECT_EQ(with.cov, without.cov);
  EXPECT_NEAR(without.mean[0], 2.0 * 0.9, 1e-15);
  EXPECT_NEAR(without.cov(0, 0), 0.81 * 3.0 + 0.2, 1e-15);
}

TEST(KalmanStep, RejectsNonlinearModel) {
  const auto model = ipf::plankton_model(ipf::PlanktonParams{});
  EXPECT_THROW(ipf::kalman_step(model, KalmanState{model.initial_state, Matrix::Identity(5, 5)}, 0.0, nullptr),
               ipf::UnsupportedModel);
}

TEST(KalmanStep, CovarianceStaysSpd) {
  const auto model = ipf::random_stable_linear_model(4, 2, 17);
  auto truth = ipf::synth_twin_data(model, 5, ipf::regular_schedule(1, 1, 1000), 1000);
  KalmanState ks{model.initial_state, Matrix::Identity(4, 4)};
  for (int n = 0; n < 1000; ++n) {
    ks = ipf::kalman_step(model, ks, model.time_of(n), &truth.observations[static_cast<std::size_t>(n)].value);
    ASSERT_TRUE(ks.cov.isApprox(ks.cov.transpose(), 1e-14));
    ASSERT_EQ(Eigen::LLT<Matrix>(ks.cov).info(), Eigen::Success) << "step " << n;
  }
}

TEST(KalmanStep, MatchesImplicitMomentStep) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto model = ipf::random_stable_linear_model(3, 3, seed);
    const auto data = ipf::synth_twin_data(model, seed + 10, ipf::regular_schedule(1, 1, 50), 50);
    KalmanState ks{model.initial_state, 0.1 * Matrix::Identity(3, 3)};
    ipf::GaussianMoments gm{ks.mean, ks.cov};
    for (int n = 0; n < 50; ++n) {
      const Vector& b = data.observations[static_cast<std::size_t>(n)].value;
      ks = ipf::kalman_step(model, ks, model.time_of(n), &b);
      const auto r = ipf::moment_step(model, gm, model.time_of(n), b, ipf::IterationConfig{});
      gm = {r.gaussian.mean, r.gaussian.sigma_dense()};
      EXPECT_EQ(r.iters, 1);
      EXPECT_LT((gm.mean - ks.mean).lpNorm<Eigen::Infinity>(), 1e-10);
      EXPECT_LT((gm.cov - ks.cov).lpNorm<Eigen::Infinity>(), 1e-10);
    }
  }
}

TEST(MaxNormalizedWeight, Examples) {
  EXPECT_NEAR(ipf::max_normalized_weight(std::vector<double>(8, -4.0)), 1.0 / 8, 1e-15);
  EXPECT_NEAR(ipf::max_normalized_weight(std::vector<double>{0.0, -50.0, -55.0}), 1.0, 1e-20);
  EXPECT_NEAR(ipf::max_normalized_weight(std::vector<double>{0.0, std::log(3.0)}), 0.75, 1e-15);
}

TEST(MaxNormalizedWeight, BoundedByOneOverM) {
  std::mt19937_64 gen(4);
  for (int M : {1, 2, 10, 500}) {
    const auto w = random_normal(gen, M, 10.0);
    const double mw = ipf::max_normalized_weight(std::vector<double>(w.data(), w.data() + M));
    EXPECT_GE(mw, 1.0 / M - 1e-15);
    EXPECT_LE(mw, 1.0);
  }
}

}  // namespace
