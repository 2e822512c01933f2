#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "slabprox/prox.hpp"
#include "slabprox/rng.hpp"
#include "slabprox/special.hpp"

namespace slabprox {

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd z;
  double sigma2 = 1.0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
};

inline void validate_dataset(const Dataset& data) {
  if (data.X.rows() < 1 || data.X.cols() < 1) throw std::invalid_argument("dataset: empty design matrix");
  if (data.z.size() != data.X.rows()) throw std::invalid_argument("dataset: response length does not match rows");
  if (!(data.sigma2 > 0.0) || !std::isfinite(data.sigma2)) throw std::invalid_argument("dataset: sigma2 must be > 0");
  if (!data.X.allFinite() || !data.z.allFinite()) throw std::invalid_argument("dataset: non-finite entries");
}

// Mixing hyperparameters. q and the lambdas move during sampling; alpha and
// u stay fixed, [a_min, M] bounds the uniform hyperprior on both lambdas.
// u just above 1 keeps the inclusion prior consistent while leaving a
// zero-initialized chain a workable activation rate at large d; pushing u
// up sharpens sparsity but stretches the cold-start wait like d^u.
struct HyperState {
  double q = 0.5;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double alpha = 1.0;
  double u = 1.1;
  double a_min = 1e-5;
  double M = 1.0;
};

inline void validate_hyper(const HyperState& phi) {
  if (!(phi.q > 0.0 && phi.q < 1.0)) throw std::invalid_argument("hyper: q outside (0,1)");
  if (!(phi.alpha >= 0.0 && phi.alpha <= 1.0)) throw std::invalid_argument("hyper: alpha outside [0,1]");
  if (!(phi.u > 1.0)) throw std::invalid_argument("hyper: u must be > 1");
  if (!(phi.a_min > 0.0)) throw std::invalid_argument("hyper: a_min must be > 0");
  if (!(phi.M >= phi.a_min)) throw std::invalid_argument("hyper: M below a_min");
  if (!(phi.lambda1 >= phi.a_min && phi.lambda1 <= phi.M)) throw std::invalid_argument("hyper: lambda1 outside [a_min, M]");
  if (!(phi.lambda2 >= phi.a_min && phi.lambda2 <= phi.M)) throw std::invalid_argument("hyper: lambda2 outside [a_min, M]");
}

inline PriorSpec slab_prior(const HyperState& phi, double sigma2) {
  return PriorSpec::elastic_net(phi.alpha, phi.lambda1, phi.lambda2, sigma2);
}

inline double log_slab_normalizer(const HyperState& phi, double sigma2) {
  return log_slab_normalizer(phi.alpha, phi.lambda1, phi.lambda2, sigma2);
}

inline double neg_log_lik(const Dataset& data, const Eigen::VectorXd& theta) {
  return (data.z - data.X * theta).squaredNorm() / (2.0 * data.sigma2);
}

inline Eigen::VectorXd grad_neg_log_lik(const Dataset& data, const Eigen::VectorXd& theta) {
  return data.X.transpose() * (data.X * theta - data.z) / data.sigma2;
}

struct PowerIterationError : std::runtime_error {
  double last_estimate;
  explicit PowerIterationError(double est)
      : std::runtime_error("lambda_max: power iteration did not converge (last estimate " +
                           std::to_string(est) + ")"),
        last_estimate(est) {}
};

// Largest eigenvalue of X'X by power iteration from a fixed seeded start.
inline double lambda_max(const Eigen::MatrixXd& X, double rel_tol = 1e-10,
                         int max_iter = 10000) {
  const Eigen::Index d = X.cols();
  RngStream rng(0x5eedu);
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) v[j] = rng.normal();
  v.normalize();

  double lam = 0.0;
  int hits = 0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = X.transpose() * (X * v);
    const double lam_new = v.dot(w);  // Rayleigh quotient, ||v|| = 1
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (it > 0 && std::abs(lam_new - lam) <= rel_tol * std::max(1.0, std::abs(lam_new))) {
      if (++hits >= 2) return lam_new;
    } else {
      hits = 0;
    }
    lam = lam_new;
  }
  throw PowerIterationError(lam);
}

inline double lambda_max(const Dataset& data, double rel_tol = 1e-10, int max_iter = 10000) {
  return lambda_max(data.X, rel_tol, max_iter);
}

// Step rule gamma = gamma0 sigma^2 / lambda_max(X'X) with gamma0 in (0, 1/4],
// nudged down so 4 gamma lambda_max / sigma^2 <= 1 holds in floating point.
inline double gamma_from_rule(double lmax, double sigma2, double gamma0) {
  if (!(gamma0 > 0.0 && gamma0 <= 0.25)) throw std::invalid_argument("gamma_from_rule: gamma0 outside (0, 1/4]");
  if (!(lmax > 0.0)) throw std::invalid_argument("gamma_from_rule: lambda_max must be > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("gamma_from_rule: sigma2 must be > 0");
  double gamma = gamma0 * sigma2 / lmax;
  while (4.0 * gamma * lmax / sigma2 > 1.0) gamma = std::nextafter(gamma, 0.0);
  return gamma;
}

inline double gamma_from_rule(const Dataset& data, double gamma0) {
  return gamma_from_rule(lambda_max(data), data.sigma2, gamma0);
}

inline double log_prior_delta(const DeltaVec& delta, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("log_prior_delta: q outside (0,1)");
  const double s = static_cast<double>((delta != 0).count());
  const double d = static_cast<double>(delta.size());
  return s * std::log(q) + (d - s) * std::log1p(-q);
}

// Upper bound of the uniform hyperprior on the lambdas. Both constraints keep
// the slab flatter than the N(0, gamma) spike of the smoothed model at the
// recommended step gamma = sigma^2 / (4 lmax): the l1 part caps the slab
// density at the origin (alpha lambda1 / (2 sigma^2) <= 1 / sqrt(2 pi gamma))
// and the ridge part caps its curvature ((1 - alpha) lambda2 <= lmax). A slab
// sharper than the spike inverts the two roles and rewards activating
// coordinates that sit at zero, an artifact the unsmoothed posterior lacks.
inline double default_lambda_bound(double lmax, double alpha, double sigma2) {
  constexpr double two_pi = 6.28318530717958647692;
  const double spike_density_cap = 4.0 * std::sqrt(sigma2 * lmax / two_pi);
  const double eps = 1e-8;
  return std::min(spike_density_cap / std::max(alpha, eps),
                  lmax / std::max(1.0 - alpha, eps));
}

// theory-guided default for lambda1: 4 sigma sqrt(n kappa(1) log d) with
// kappa(1) = max_k ||X_k||^2 / n; useful as a chain initializer
inline double lambda1_default(const Dataset& data) {
  const double n = static_cast<double>(data.n());
  const double kappa = data.X.colwise().squaredNorm().maxCoeff() / n;
  const double logd = std::log(static_cast<double>(data.d()));
  return 4.0 * std::sqrt(data.sigma2) * std::sqrt(n * kappa * std::max(logd, 0.0));
}

}  // namespace slabprox
