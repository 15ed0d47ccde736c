#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace infogain {

// SplitMix64. Chosen over <random> distributions because their output is
// implementation-defined; transcripts and metrics must be reproducible
// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n). n must be > 0.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  /// Index drawn proportionally to non-negative weights; returns weights.size()
  /// when every weight is zero.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return weights.size();
    double u = uniform() * total;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  Rng r(base ^ (salt * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
  r.next();
  return r.next();
}

}  // namespace infogain
