#pragma once

#include <cstdint>
#include <random>

namespace pqvar {

/// Deterministic RNG. Double generation is pinned to the
/// (x >> 11) * 2^-53 mapping so results do not depend on the standard
/// library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  /// Independent substream derived from the seed and a stream index
  /// (splitmix64 mix). Forking does not advance this generator.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t z = seed_ + (stream + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace pqvar
