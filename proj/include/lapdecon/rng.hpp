#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace lapdecon {

/// Identifier written into output metadata. Any change to the generator,
/// the seed-splitting rule or the normal transform must change this string.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64-split+polar-normal/v1";

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed-splitting rule: child = splitmix64(parent ^ splitmix64(index)).
/// Replicate r of cell c under master seed s uses derive_seed(derive_seed(s, c), r).
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(parent ^ splitmix64(index));
}

/// Standard normal stream. mt19937_64 is fully specified by the standard;
/// the uniform and normal transforms are implemented here so the stream is
/// identical across standard libraries.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1) from the top 53 bits.
  double uniform() {
    double u = 0.0;
    do {
      u = double(engine_() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }

  /// Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lapdecon
