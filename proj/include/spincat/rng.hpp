// Seeded random numbers with documented, platform-independent transforms.
// Ensemble trials use substreams derived from (seed, index) so results do not
// depend on scheduling order.
#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace spincat {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Mersenne Twister (mt19937_64) with hand-rolled uniform and Box-Muller
/// normal transforms, so identical seeds give identical draws everywhere.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64+box-muller";

  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s))};
    gen_.seed(seq);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t mixed = splitmix64(s) ^ (0xA0761D6478BD642FULL * (index + 1));
    return Rng(mixed);
  }

  std::uint64_t next() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (cosine branch).
  double normal() {
    double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace spincat
