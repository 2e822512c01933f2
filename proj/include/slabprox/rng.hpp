#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace slabprox {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Decouples sub-streams: same master seed, different id -> unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id) {
  return mix64(mix64(master + kGoldenGamma * (id + 1)) + kGoldenGamma);
}

// Counter-based stream (SplitMix64): position is just the draw count, so one
// stream per update kernel keeps draws stable when other kernels change.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed), draws_(0) {}

  static RngStream substream(std::uint64_t master, std::uint64_t id) {
    return RngStream(derive_seed(master, id));
  }

  std::uint64_t next_u64() {
    ++draws_;
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  std::uint64_t cursor() const { return draws_; }

  // uniform on the open interval (0,1); safe under log()
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, two fresh uniforms per draw (no cached pair)
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692528676655900577 * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Marsaglia-Tsang; every shape used here is >= 1
  double gamma(double shape) {
    if (!(shape >= 1.0)) throw std::invalid_argument("gamma: shape must be >= 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      const double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

 private:
  std::uint64_t state_;
  std::uint64_t draws_;
};

}  // namespace slabprox
