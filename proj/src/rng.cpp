#include "ipf/rng.hpp"

namespace ipf {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Substream::Substream(std::uint64_t master_seed, std::int64_t step, std::int64_t particle, StreamRole role) {
  std::uint64_t k = mix64(master_seed + kGamma);
  k = mix64(k ^ (static_cast<std::uint64_t>(step) + 0x632be59bd9b4e019ULL));
  k = mix64(k ^ (static_cast<std::uint64_t>(particle) + 0x85157af5ULL * kGamma));
  k = mix64(k ^ (static_cast<std::uint64_t>(role) * 0xd1b54a32d192ed03ULL));
  key_ = k;
}

Substream::result_type Substream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double Substream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Substream::normal() { return normal_(*this); }

Vector Substream::normals(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

std::vector<double> Substream::uniforms(std::size_t n) {
  std::vector<double> u(n);
  for (auto& x : u) x = uniform();
  return u;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::int64_t run) {
  return Substream(master_seed, run, 0, StreamRole::run)();
}

}  // namespace ipf
