#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace hierpool {

/// Seeded splitmix64 generator with hand-rolled distributions.
/// std:: distributions are implementation-defined, which would break
/// bit-reproducibility of runs across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; caches the second draw.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  /// Derive a child seed from a list of stream identifiers.
  static std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
    Rng h(0x8C9A7B5D3E1F0A2BULL);
    std::uint64_t acc = h.next_u64();
    for (std::uint64_t p : parts) {
      h.state_ ^= p + 0x9E3779B97F4A7C15ULL + (acc << 6) + (acc >> 2);
      acc = h.next_u64();
    }
    return acc;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hierpool
