#include <gmock/gmock.h>

#include <cmath>
#include <set>

#include "ipf/rng.hpp"

namespace {

using ipf::StreamRole;

TEST(Substream, SameTupleSameStream) {
  auto a = ipf::rng_substream(5, 12, 3, StreamRole::reference);
  auto b = ipf::rng_substream(5, 12, 3, StreamRole::reference);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
  EXPECT_EQ(a.normals(10), b.normals(10));
}

TEST(Substream, TupleFieldsAllMatter) {
  std::set<std::uint64_t> firsts;
  firsts.insert(ipf::rng_substream(5, 12, 3, StreamRole::reference)());
  firsts.insert(ipf::rng_substream(6, 12, 3, StreamRole::reference)());
  firsts.insert(ipf::rng_substream(5, 13, 3, StreamRole::reference)());
  firsts.insert(ipf::rng_substream(5, 12, 4, StreamRole::reference)());
  firsts.insert(ipf::rng_substream(5, 12, 3, StreamRole::sir)());
  firsts.insert(ipf::rng_substream(5, 3, 12, StreamRole::reference)());
  EXPECT_EQ(firsts.size(), 6u);
}

TEST(Substream, UniformRangeAndMoments) {
  auto rng = ipf::rng_substream(1, 0, 0, StreamRole::resample);
  const int n = 100000;
  double sum = 0.0;
  for (double u : rng.uniforms(n)) {
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Substream, NormalMoments) {
  auto rng = ipf::rng_substream(2, 0, 0, StreamRole::truth);
  const int n = 100000;
  const auto v = rng.normals(n);
  EXPECT_NEAR(v.mean(), 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(v.squaredNorm() / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(DeriveSeed, DistinctPerRun) {
  std::set<std::uint64_t> seeds;
  for (int r = 0; r < 1000; ++r) seeds.insert(ipf::derive_seed(2009, r));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(ipf::derive_seed(2009, 7), ipf::derive_seed(2009, 7));
  EXPECT_NE(ipf::derive_seed(2009, 7), ipf::derive_seed(2010, 7));
}

}  // namespace
