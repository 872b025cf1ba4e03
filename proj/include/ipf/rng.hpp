#ifndef IPF_RNG_HPP
#define IPF_RNG_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ipf/model.hpp"

namespace ipf {

enum class StreamRole : std::uint32_t {
  truth = 1,
  observation = 2,
  reference = 3,       // xi for forward steps
  reference_pair = 4,  // second xi of a sparse step
  backward = 5,
  sir = 6,
  resample = 7,
  retry = 8,
  run = 9,  // per-run master seeds for repeated experiments
};

/**
 * Counter-based random stream keyed by (master seed, step, particle, role).
 *
 * The i-th 64-bit output is a SplitMix64 finalizer applied to key + i * gamma,
 * so a stream is a pure function of its tuple and position.
 */
class Substream {
 public:
  using result_type = std::uint64_t;

  Substream(std::uint64_t master_seed, std::int64_t step, std::int64_t particle, StreamRole role);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  Vector normals(Index n);
  std::vector<double> uniforms(std::size_t n);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_;
};

inline Substream rng_substream(std::uint64_t master_seed, std::int64_t step, std::int64_t particle,
                               StreamRole role) {
  return Substream(master_seed, step, particle, role);
}

/// Derived seed for run r of a repeated experiment.
std::uint64_t derive_seed(std::uint64_t master_seed, std::int64_t run);

}  // namespace ipf

#endif  // IPF_RNG_HPP
