#include <gmock/gmock.h>

#include <atomic>
#include <stdexcept>

#include "ipf/kernels.hpp"
#include "ipf/models.hpp"
#include "ipf/rng.hpp"
#include "test_support.hpp"

namespace {

using ipf::Execution;
using ipf::Vector;

struct Batch {
  std::vector<Vector> states;
  std::vector<Vector> xis;
  Vector b;
};

Batch plankton_batch(int count) {
  const ipf::PlanktonParams params;
  const auto model = ipf::plankton_model(params);
  Batch batch;
  for (int i = 0; i < count; ++i) {
    auto rng = ipf::rng_substream(3, 0, i, ipf::StreamRole::truth);
    Vector x = model.initial_state + model.diffusion(model.initial_state, 0.0).cwiseProduct(rng.normals(5)) * 10.0;
    model.apply_projection(x);
    batch.states.push_back(x);
    batch.xis.push_back(ipf::rng_substream(3, 1, i, ipf::StreamRole::reference).normals(5));
  }
  batch.b = ipf::Vector::Constant(1, std::log(0.1));
  return batch;
}

TEST(ForEachIndex, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(257);
  ipf::for_each_index(Execution::parallel, 257, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ForEachIndex, LowestFailingIndexWins) {
  for (Execution exec : {Execution::serial, Execution::parallel}) {
    for (int workers : {1, 3, 8}) {
      try {
        ipf::for_each_index(exec, 100, workers, [](int i) {
          if (i == 37 || i == 80 || i == 99) throw std::runtime_error(std::to_string(i));
        });
        FAIL() << "expected an exception";
      } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "37");
      }
    }
  }
}

TEST(ImplicitForwardKernel, ParallelMatchesSerial) {
  const auto model = ipf::plankton_model(ipf::PlanktonParams{});
  ipf::IterationConfig cfg;
  cfg.warm_start = true;
  const auto batch = plankton_batch(64);
  const auto serial = ipf::implicit_forward_kernel(Execution::serial, 1, model, batch.states, 0.0, &batch.b,
                                                   batch.xis, cfg);
  for (int workers : {2, 8, 0}) {
    const auto parallel = ipf::implicit_forward_kernel(Execution::parallel, workers, model, batch.states, 0.0,
                                                       &batch.b, batch.xis, cfg);
    ASSERT_EQ(parallel.size(), serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      EXPECT_EQ(parallel[i].new_state, serial[i].new_state);
      EXPECT_EQ(parallel[i].phi, serial[i].phi);
      EXPECT_EQ(parallel[i].log_jac, serial[i].log_jac);
      EXPECT_EQ(parallel[i].iters, serial[i].iters);
    }
  }
}

TEST(ImplicitForwardKernel, PermutingParticlesPermutesResults) {
  const auto model = ipf::plankton_model(ipf::PlanktonParams{});
  ipf::IterationConfig cfg;
  cfg.warm_start = true;
  const auto batch = plankton_batch(16);
  std::vector<std::size_t> perm(16);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (5 * i + 3) % 16;
  Batch shuffled = batch;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.states[i] = batch.states[perm[i]];
    shuffled.xis[i] = batch.xis[perm[i]];
  }
  const auto a = ipf::implicit_forward_kernel(Execution::parallel, 4, model, batch.states, 0.0, &batch.b, batch.xis,
                                              cfg);
  const auto b = ipf::implicit_forward_kernel(Execution::parallel, 4, model, shuffled.states, 0.0, &batch.b,
                                              shuffled.xis, cfg);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    EXPECT_EQ(b[i].new_state, a[perm[i]].new_state);
    EXPECT_EQ(b[i].log_weight_increment(), a[perm[i]].log_weight_increment());
  }
}

TEST(SirKernel, ParallelMatchesSerial) {
  const auto model = ipf::iid_gaussian_model(100);
  std::vector<Vector> states, noises;
  for (int i = 0; i < 200; ++i) {
    states.push_back(ipf::rng_substream(1, 0, i, ipf::StreamRole::truth).normals(100));
    noises.push_back(ipf::rng_substream(1, 1, i, ipf::StreamRole::sir).normals(100));
  }
  const Vector b = ipf::rng_substream(1, 1, 0, ipf::StreamRole::observation).normals(100);
  const auto serial = ipf::sir_kernel(Execution::serial, 1, model, states, 0.0, &b, noises);
  const auto parallel = ipf::sir_kernel(Execution::parallel, 8, model, states, 0.0, &b, noises);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(parallel[i].new_state, serial[i].new_state);
    EXPECT_EQ(parallel[i].log_weight_increment, serial[i].log_weight_increment);
  }
}

TEST(Kernels, SizeMismatchThrows) {
  const auto model = ipf::iid_gaussian_model(2);
  const std::vector<Vector> one{Vector::Zero(2)};
  const std::vector<Vector> two{Vector::Zero(2), Vector::Zero(2)};
  EXPECT_THROW(ipf::sir_kernel(Execution::serial, 1, model, one, 0.0, nullptr, two), std::invalid_argument);
  EXPECT_THROW(ipf::implicit_forward_kernel(Execution::serial, 1, model, one, 0.0, nullptr, two, {}),
               std::invalid_argument);
}

}  // namespace
