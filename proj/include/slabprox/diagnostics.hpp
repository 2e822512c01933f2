#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "slabprox/prox.hpp"
#include "slabprox/sampler.hpp"

namespace slabprox {

inline double relative_error(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("relative_error: size mismatch");
  const double denom = truth.norm();
  if (denom == 0.0) throw std::invalid_argument("relative_error: zero truth vector");
  return (est - truth).norm() / denom;
}

struct SupportScore {
  double sensitivity = 0.0;
  double precision = 1.0;
  double f1 = 0.0;
};

inline SupportScore sen_prec_f(const DeltaVec& est, const DeltaVec& truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("sen_prec_f: size mismatch");
  long tp = 0, est_n = 0, true_n = 0;
  for (Eigen::Index j = 0; j < est.size(); ++j) {
    const bool e = est[j] != 0, t = truth[j] != 0;
    tp += (e && t);
    est_n += e;
    true_n += t;
  }
  if (true_n == 0) throw std::invalid_argument("sen_prec_f: empty true support");
  SupportScore s;
  s.sensitivity = static_cast<double>(tp) / true_n;
  s.precision = est_n > 0 ? static_cast<double>(tp) / est_n : 1.0;
  s.f1 = (s.sensitivity + s.precision) > 0.0
             ? 2.0 * s.sensitivity * s.precision / (s.sensitivity + s.precision)
             : 0.0;
  return s;
}

inline DeltaVec support_from_threshold(const Eigen::VectorXd& theta, double tol) {
  DeltaVec d(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) d[j] = std::abs(theta[j]) > tol ? 1 : 0;
  return d;
}

// support of the shrunk posterior mean: coordinates the prox keeps nonzero
inline DeltaVec prox_support(const Eigen::VectorXd& theta_mean, const PriorSpec& prior,
                             double gamma) {
  DeltaVec d(theta_mean.size());
  for (Eigen::Index j = 0; j < theta_mean.size(); ++j)
    d[j] = shrink_scalar(prior, gamma, theta_mean[j]) != 0.0 ? 1 : 0;
  return d;
}

// autocorrelation with the biased (1/n) normalization, lags 0..max_lag
inline std::vector<double> autocorr(const std::vector<double>& x, int max_lag) {
  const long n = static_cast<long>(x.size());
  if (max_lag < 0 || n <= max_lag + 1)
    throw std::invalid_argument("autocorr: series too short for requested lag");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= n;
  if (c0 == 0.0) throw std::invalid_argument("autocorr: constant series");
  std::vector<double> rho(max_lag + 1);
  for (int k = 0; k <= max_lag; ++k) {
    double c = 0.0;
    for (long t = 0; t + k < n; ++t) c += (x[t] - mean) * (x[t + k] - mean);
    rho[k] = (c / n) / c0;
  }
  return rho;
}

struct AcceptanceRates {
  double mala = -1.0, independence = -1.0, rwm = -1.0;  // -1 if never attempted
};

inline AcceptanceRates acceptance_rates(const std::vector<TraceRecord>& trace) {
  long am = 0, nm = 0, ai = 0, ni = 0, ar = 0, nr = 0;
  for (const auto& r : trace) {
    if (r.acc_mala >= 0) { ++nm; am += r.acc_mala; }
    if (r.acc_ind >= 0) { ++ni; ai += r.acc_ind; }
    if (r.acc_rwm >= 0) { ++nr; ar += r.acc_rwm; }
  }
  AcceptanceRates out;
  if (nm > 0) out.mala = static_cast<double>(am) / nm;
  if (ni > 0) out.independence = static_cast<double>(ai) / ni;
  if (nr > 0) out.rwm = static_cast<double>(ar) / nr;
  return out;
}

inline Eigen::VectorXd inclusion_probs(const std::vector<TraceRecord>& trace, long burn_in) {
  long kept = 0;
  Eigen::VectorXd p;
  for (const auto& r : trace) {
    if (r.iter <= burn_in) continue;
    if (p.size() == 0) p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r.delta.size()));
    if (static_cast<std::size_t>(p.size()) != r.delta.size())
      throw std::invalid_argument("inclusion_probs: inconsistent record widths");
    for (Eigen::Index j = 0; j < p.size(); ++j)
      p[j] += r.delta[static_cast<std::size_t>(j)] == '1';
    ++kept;
  }
  if (kept == 0) throw std::invalid_argument("inclusion_probs: no post-burn-in records");
  return p / static_cast<double>(kept);
}

}  // namespace slabprox
