#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace kw2sent {

/// Deterministic random source. All derived draws (uniform, shuffle) are
/// hand-rolled on top of the raw 64-bit stream so results do not depend on
/// standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates, fixed order regardless of platform.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derive an independent substream, e.g. one per epoch.
  Rng fork(std::uint64_t stream) {
    std::uint64_t s = next() ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    return Rng(s);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace kw2sent
