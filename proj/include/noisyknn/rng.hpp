#pragma once

#include <cstdint>
#include <random>

namespace noisyknn {

// One SplitMix64 step. Used for seed mixing only, never as a stream.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream seed for (master, a, b). Experiments key streams on
// (master_seed, grid value, replicate index) so every replicate is
// reproducible in isolation and results do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s = h ^ (a * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL);
  h = splitmix64(s);
  s = h ^ (b * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(s);
}

// Seedable 64-bit generator (mt19937_64 core). Each helper consumes exactly
// one engine step, so the draw layout of any caller is fixed and the whole
// stream is bit-reproducible across platforms. The standard library's
// distribution objects are implementation-defined and must not be used on
// these streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform in [0, n). Modulo reduction; the 2^-64-scale bias is irrelevant
  // here and the layout (one step per call) is what matters.
  std::uint64_t uniform_index(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace noisyknn
