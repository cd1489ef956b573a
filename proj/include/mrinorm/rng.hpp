#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mrinorm {

// Seed derivation used throughout: every stochastic step owns a stream derived
// from (base seed, stage name, item id) so parallel schedules cannot change results.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage, std::uint64_t index = 0) {
  return splitmix64(splitmix64(base ^ fnv1a64(stage)) ^ splitmix64(index));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage, std::string_view id) {
  return splitmix64(splitmix64(base ^ fnv1a64(stage)) ^ fnv1a64(id));
}

// mt19937_64 output is pinned by the standard; the std:: distributions are not.
// These helpers keep every drawn value identical across standard libraries.

inline std::uint64_t bounded_u64(std::mt19937_64& rng, std::uint64_t n) {
  // rejection sampling, no modulo bias
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

class NormalSampler {
public:
  double operator()(std::mt19937_64& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace mrinorm
