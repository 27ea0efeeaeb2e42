#pragma once

#include <cstdint>
#include <random>

namespace sparseq {

// Deterministic random source. All value conversions are hand-rolled on top
// of mt19937_64 raw output so that seeded streams are reproducible
// bit-for-bit across standard library implementations.
class Rng {
 public:
  static Rng seeded(std::uint64_t seed) { return Rng(seed, true); }

  static Rng system() {
    std::random_device rd;
    std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return Rng(seed, false);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1).
  double next_unit_open() {
    double u;
    do {
      u = next_unit();
    } while (u == 0.0);
    return u;
  }

  // Uniform on [0, bound), unbiased. bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  // Derive an independent substream keyed on the original seed, so the
  // fork for a given stream id does not depend on how many values have
  // been drawn from the parent.
  Rng fork(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0x9e3779b97f4a7c15ull)), seeded_);
  }

  std::uint64_t seed() const { return seed_; }
  bool is_seeded() const { return seeded_; }

 private:
  Rng(std::uint64_t seed, bool seeded) : engine_(seed), seed_(seed), seeded_(seeded) {}

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool seeded_;
};

}  // namespace sparseq
