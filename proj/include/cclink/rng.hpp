#pragma once

// Deterministic RNG. std::mt19937 would be fine for the bits, but the
// standard distributions are not guaranteed to produce identical streams
// across library versions, and byte-identical artifacts across runs and
// machines are a hard requirement here. splitmix64 is small, fast, and fully
// specified.

#include <cstdint>
#include <utility>
#include <vector>

namespace cclink {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 1) : state_(seed) {
    // Warm up so that small, similar seeds diverge immediately.
    next();
    next();
  }

  uint64_t next() { return splitmix64(state_); }

  // Uniform in [0, n). n = 0 returns 0.
  uint64_t next_below(uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling to avoid modulo bias.
    uint64_t limit = n * (UINT64_MAX / n);
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool next_bool(double p) { return next_double() < p; }

  // Draws an index with probability proportional to weights[i]. All weights
  // must be >= 0 and their sum > 0.
  size_t next_weighted(const double* weights, size_t count) {
    double total = 0;
    for (size_t i = 0; i < count; i++) total += weights[i];
    double x = next_double() * total;
    double acc = 0;
    for (size_t i = 0; i < count; i++) {
      acc += weights[i];
      if (x < acc) return i;
    }
    return count - 1;
  }

  // Derives an independent stream, e.g. one per record, so per-item
  // generation does not depend on processing order.
  Rng fork(uint64_t salt) const {
    uint64_t s = state_;
    uint64_t mixed = splitmix64(s) ^ (salt * 0x9e3779b97f4a7c15ull);
    return Rng(mixed);
  }

 private:
  uint64_t state_;
};

// Fisher-Yates shuffle driven by Rng, for deterministic epoch ordering.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; i--) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace cclink
