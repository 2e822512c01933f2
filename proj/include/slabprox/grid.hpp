#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace slabprox {

// Uniform 1-D grid with composite-Simpson weights; n is the number of points
// and must be odd so the panel count is even.
struct Grid1 {
  double lo = 0.0;
  double hi = 1.0;
  int n = 65;

  double step() const { return (hi - lo) / (n - 1); }
  double point(int i) const { return lo + i * step(); }

  double weight(int i) const {
    const double h = step() / 3.0;
    if (i == 0 || i == n - 1) return h;
    return (i % 2 == 1) ? 4.0 * h : 2.0 * h;
  }
};

inline void validate_grid(const Grid1& g) {
  if (g.n < 3 || g.n % 2 == 0) throw std::invalid_argument("grid: point count must be odd and >= 3");
  if (!(g.hi > g.lo)) throw std::invalid_argument("grid: empty interval");
}

// Tensor product of up to a few Grid1 axes, iterated by flat index.
struct TensorGrid {
  std::vector<Grid1> axes;

  std::int64_t size() const {
    std::int64_t s = 1;
    for (const auto& a : axes) s *= a.n;
    return s;
  }

  // decompose flat index; axis 0 varies slowest
  void decode(std::int64_t idx, int* out) const {
    for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
      out[k] = static_cast<int>(idx % axes[k].n);
      idx /= axes[k].n;
    }
  }

  void point(std::int64_t idx, double* out) const {
    int sub[8];
    decode(idx, sub);
    for (std::size_t k = 0; k < axes.size(); ++k) out[k] = axes[k].point(sub[k]);
  }

  double weight(std::int64_t idx) const {
    int sub[8];
    decode(idx, sub);
    double w = 1.0;
    for (std::size_t k = 0; k < axes.size(); ++k) w *= axes[k].weight(sub[k]);
    return w;
  }

  // true when any coordinate sits on the outermost two layers of its axis
  bool on_boundary(std::int64_t idx) const {
    int sub[8];
    decode(idx, sub);
    for (std::size_t k = 0; k < axes.size(); ++k)
      if (sub[k] <= 1 || sub[k] >= axes[k].n - 2) return true;
    return false;
  }
};

}  // namespace slabprox
