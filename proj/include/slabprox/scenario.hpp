#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "slabprox/linmodel.hpp"
#include "slabprox/rng.hpp"

namespace slabprox {

struct ScenarioConfig {
  long n = 200;
  long d = 500;
  long s_star = 10;
  double rho = 0.9;   // row AR(1) correlation
  double v = 0.0;     // signal scale; 0 -> sqrt(log(d) / n)
  double sigma = 1.0; // noise standard deviation
};

struct Truth {
  Eigen::VectorXd theta_star;
  DeltaVec support;
};

struct Scenario {
  Dataset data;
  Truth truth;
};

inline double default_signal_scale(long n, long d) {
  return std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(n));
}

// Correlated design with AR(1) rows, signal on a random subset with random
// signs and amplitudes uniform on [v/2, 3v/2], Gaussian noise.
inline Scenario gen_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.n < 1 || cfg.d < 1) throw std::invalid_argument("gen_scenario: empty design");
  if (cfg.s_star < 0 || cfg.s_star > cfg.d)
    throw std::invalid_argument("gen_scenario: sparsity out of range");
  if (!(std::abs(cfg.rho) < 1.0)) throw std::invalid_argument("gen_scenario: |rho| must be < 1");
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("gen_scenario: sigma must be > 0");

  RngStream rs_x = RngStream::substream(seed, 10);
  RngStream rs_sig = RngStream::substream(seed, 11);
  RngStream rs_noise = RngStream::substream(seed, 12);

  Scenario sc;
  sc.data.X.resize(cfg.n, cfg.d);
  const double tail = std::sqrt(1.0 - cfg.rho * cfg.rho);
  for (long i = 0; i < cfg.n; ++i) {
    double prev = rs_x.normal();
    sc.data.X(i, 0) = prev;
    for (long j = 1; j < cfg.d; ++j) {
      prev = cfg.rho * prev + tail * rs_x.normal();
      sc.data.X(i, j) = prev;
    }
  }

  const double v = cfg.v > 0.0 ? cfg.v : default_signal_scale(cfg.n, cfg.d);
  std::vector<long> idx(cfg.d);
  for (long j = 0; j < cfg.d; ++j) idx[j] = j;
  for (long i = 0; i < cfg.s_star; ++i) {  // partial shuffle
    const long j = i + static_cast<long>(rs_sig.uniform01() * (cfg.d - i));
    std::swap(idx[i], idx[std::min(j, cfg.d - 1)]);
  }
  std::vector<long> support(idx.begin(), idx.begin() + cfg.s_star);
  std::sort(support.begin(), support.end());

  sc.truth.theta_star = Eigen::VectorXd::Zero(cfg.d);
  sc.truth.support = DeltaVec::Zero(cfg.d);
  for (long j : support) {
    const double sign = rs_sig.uniform01() < 0.5 ? -1.0 : 1.0;
    sc.truth.theta_star[j] = sign * rs_sig.uniform(0.5 * v, 1.5 * v);
    sc.truth.support[j] = 1;
  }

  sc.data.z = sc.data.X * sc.truth.theta_star;
  for (long i = 0; i < cfg.n; ++i) sc.data.z[i] += cfg.sigma * rs_noise.normal();
  sc.data.sigma2 = cfg.sigma * cfg.sigma;
  return sc;
}

}  // namespace slabprox
