#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace ibgp {

// splitmix64 step. Used both as the generator and as the seed-derivation
// mixer so that derived streams are decorrelated from their parents.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic child-seed derivation: folds each tag into the state with a
// full mix per tag. Same base + same tags always gives the same child seed,
// and siblings with different tags are independent for practical purposes.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = base;
  (void)splitmix64_next(s);
  for (std::uint64_t tag : tags) {
    s ^= tag + 0x9E3779B97F4A7C15ULL + (s << 6) + (s >> 2);
    (void)splitmix64_next(s);
  }
  return s;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) {
  return derive_seed(base, {a});
}
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(base, {a, b});
}
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) {
  return derive_seed(base, {a, b, c});
}

// Small fast PRNG with an explicit, copyable state. The standard <random>
// distributions are deliberately avoided: their output is not pinned across
// standard library implementations, and byte-identical reruns are part of
// the output contract.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() { return splitmix64_next(state_); }

  // Unbiased integer in [0, bound) via multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    while (true) {
      std::uint64_t x = next();
      __uint128_t m = static_cast<__uint128_t>(x) * bound;
      std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo < bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        if (lo < threshold) continue;
      }
      return static_cast<std::uint64_t>(m >> 64);
    }
  }

  // Integer in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // First `count` elements of a Fisher-Yates shuffle over `universe` items:
  // a uniform random subset, returned in selection order.
  std::vector<int> sample_indices(int universe, int count) {
    std::vector<int> idx(universe);
    for (int i = 0; i < universe; ++i) idx[i] = i;
    if (count > universe) count = universe;
    for (int i = 0; i < count; ++i) {
      int j = i + static_cast<int>(below(static_cast<std::uint64_t>(universe - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace ibgp
