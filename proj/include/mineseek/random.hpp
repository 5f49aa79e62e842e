#pragma once

#include <cstdint>
#include <random>

namespace mineseek {

// std::uniform_real_distribution is implementation-defined, so generated
// instances would differ between standard libraries. Draws here only depend on
// the mt19937_64 bit stream, which the standard pins down exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mineseek
