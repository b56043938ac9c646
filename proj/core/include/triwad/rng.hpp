#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace triwad {

// Derives named substream seeds from a root seed so every stochastic
// component of an experiment is pinned by (root, name). FNV-1a over the
// name, mixed with the root through splitmix64.
class SeedStream {
public:
  explicit SeedStream(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }
  std::uint64_t derive(std::string_view name) const;
  SeedStream sub(std::string_view name) const { return SeedStream(derive(name)); }

private:
  std::uint64_t root_;
};

// mt19937_64 with explicit Box-Muller gaussians. std::*_distribution is
// implementation-defined, so everything protocol-relevant goes through
// this class to keep runs reproducible across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian();
  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  // Unbiased integer in [0, n).
  std::size_t index(std::size_t n);

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace triwad
