#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace helix {

// splitmix64 finalizer; used for seed derivation so that per-item streams
// are decorrelated from the master seed and from each other.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// FNV-1a; stable content hashing (train/validation split, artifact ids).
inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic RNG wrapper. All randomness in the pipeline flows through
// this class with explicit seeds; distributions are implemented here rather
// than via std:: distributions so that output is fixed for a given seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n), Lemire's method.
  uint32_t below(uint32_t n) {
    uint64_t x = eng_() & 0xffffffffULL;
    uint64_t m = x * n;
    auto lo = static_cast<uint32_t>(m);
    if (lo < n) {
      uint32_t t = (-n) % n;
      while (lo < t) {
        x = eng_() & 0xffffffffULL;
        m = x * n;
        lo = static_cast<uint32_t>(m);
      }
    }
    return static_cast<uint32_t>(m >> 32);
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<size_t>(last - first);
    for (size_t i = n; i > 1; --i) {
      size_t j = below(static_cast<uint32_t>(i));
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace helix
