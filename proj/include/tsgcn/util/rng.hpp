#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tsgcn {

/// mt19937_64 with a portable uniform draw. std::uniform_real_distribution is
/// implementation-defined, so it is avoided wherever results must reproduce.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Seeds from several integers (e.g. seed, epoch, mesh index).
  Rng(std::initializer_list<std::uint64_t> parts) {
    std::seed_seq seq(parts.begin(), parts.end());
    engine_.seed(seq);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tsgcn
