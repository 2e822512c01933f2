#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "slabprox/linmodel.hpp"
#include "slabprox/prox.hpp"

namespace slabprox {

struct LassoFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  long support_size = 0;
  double objective = 0.0;
  long iters = 0;
  double kkt_residual = 0.0;
};

namespace detail {

inline double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& beta, double lambda) {
  return 0.5 * (z - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

// max over j of the stationarity violation at beta, with c = X'(z - X beta)
inline double lasso_kkt(const Eigen::VectorXd& c, const Eigen::VectorXd& beta, double lambda) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] == 0.0 ? std::max(0.0, std::abs(c[j]) - lambda)
                                    : std::abs(c[j] - lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace detail

// l1 least squares, accelerated proximal gradient with momentum restart on
// objective increase; stops when the stationarity residual drops below tol.
inline LassoFit lasso_fista(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, double lambda,
                            double tol = 1e-8, long max_iter = 200000,
                            const Eigen::VectorXd* warm = nullptr) {
  if (X.rows() != z.size()) throw std::invalid_argument("lasso_fista: row mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lasso_fista: negative lambda");
  const Eigen::Index d = X.cols();
  const Eigen::MatrixXd G = X.transpose() * X;
  const Eigen::VectorXd Xtz = X.transpose() * z;

  LassoFit fit;
  fit.lambda = lambda;
  if (lambda >= Xtz.cwiseAbs().maxCoeff()) {
    fit.beta = Eigen::VectorXd::Zero(d);
    fit.objective = 0.5 * z.squaredNorm();
    fit.kkt_residual = 0.0;
    return fit;
  }

  const double L = lambda_max(X);
  if (!(L > 0.0)) throw std::invalid_argument("lasso_fista: zero design");
  const double step = 1.0 / L;

  Eigen::VectorXd beta = warm && warm->size() == d ? *warm : Eigen::VectorXd::Zero(d);
  Eigen::VectorXd y = beta;
  double t = 1.0;
  double obj = detail::lasso_objective(X, z, beta, lambda);

  auto forward_backward = [&](const Eigen::VectorXd& point) {
    const Eigen::VectorXd g = G * point - Xtz;
    Eigen::VectorXd out = point - step * g;
    for (Eigen::Index j = 0; j < d; ++j) out[j] = detail::soft_threshold(out[j], step * lambda);
    return out;
  };

  for (long it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd beta_new = forward_backward(y);
    double obj_new = detail::lasso_objective(X, z, beta_new, lambda);
    if (obj_new > obj) {  // momentum restart, then a plain descent step
      y = beta;
      t = 1.0;
      beta_new = forward_backward(y);
      obj_new = detail::lasso_objective(X, z, beta_new, lambda);
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = beta_new + ((t - 1.0) / t_new) * (beta_new - beta);
    beta = beta_new;
    t = t_new;
    obj = obj_new;

    const Eigen::VectorXd c = Xtz - G * beta;
    const double kkt = detail::lasso_kkt(c, beta, lambda);
    if (kkt <= tol) {
      fit.beta = beta;
      fit.support_size = (beta.array() != 0.0).count();
      fit.objective = obj;
      fit.iters = it;
      fit.kkt_residual = kkt;
      return fit;
    }
  }
  throw std::runtime_error("lasso_fista: no convergence within iteration budget");
}

struct CvResult {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_error;
};

// k-fold cross validation over a log-spaced path, contiguous row blocks as
// folds, warm starts down the path; ties resolve to the larger lambda.
inline CvResult cv_select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                                 int n_lambda = 50, int k_folds = 10, double inner_tol = 1e-4) {
  const Eigen::Index n = X.rows();
  if (n < k_folds) throw std::invalid_argument("cv_select_lambda: fewer rows than folds");
  const double lam_top = (X.transpose() * z).cwiseAbs().maxCoeff();
  if (!(lam_top > 0.0)) throw std::invalid_argument("cv_select_lambda: X'z is zero");

  CvResult res;
  res.grid.resize(n_lambda);
  for (int i = 0; i < n_lambda; ++i) {
    const double f = n_lambda == 1 ? 1.0 : static_cast<double>(i) / (n_lambda - 1);
    res.grid[i] = lam_top * std::pow(10.0, -2.0 * (1.0 - f));  // 0.01 .. 1 times lam_top
  }
  res.cv_error.assign(n_lambda, 0.0);

  for (int fold = 0; fold < k_folds; ++fold) {
    const Eigen::Index lo = fold * n / k_folds;
    const Eigen::Index hi = (fold + 1) * n / k_folds;
    const Eigen::Index n_test = hi - lo;
    const Eigen::Index n_train = n - n_test;
    Eigen::MatrixXd Xtr(n_train, X.cols()), Xte(n_test, X.cols());
    Eigen::VectorXd ztr(n_train), zte(n_test);
    Xtr.topRows(lo) = X.topRows(lo);
    Xtr.bottomRows(n - hi) = X.bottomRows(n - hi);
    ztr.head(lo) = z.head(lo);
    ztr.tail(n - hi) = z.tail(n - hi);
    Xte = X.middleRows(lo, n_test);
    zte = z.segment(lo, n_test);

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
    for (int i = n_lambda - 1; i >= 0; --i) {  // strong shrinkage first
      const LassoFit fit = lasso_fista(Xtr, ztr, res.grid[i], inner_tol, 200000, &warm);
      warm = fit.beta;
      res.cv_error[i] += (zte - Xte * fit.beta).squaredNorm();
    }
  }

  int best = n_lambda - 1;
  for (int i = n_lambda - 1; i >= 0; --i)
    if (res.cv_error[i] < res.cv_error[best]) best = i;
  res.lambda = res.grid[best];
  return res;
}

inline double sigma2_hat(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& beta) {
  const long s = (beta.array() != 0.0).count();
  const long n = static_cast<long>(X.rows());
  if (s >= n) throw std::invalid_argument("sigma2_hat: support as large as the sample");
  return (z - X * beta).squaredNorm() / static_cast<double>(n - s);
}

struct EbResult {
  LassoFit fit;
  double lambda_cv = 0.0;
  double sigma2 = 0.0;
};

// pilot estimate of the noise level: cross-validated l1 fit, tight refit on
// the full data, residual variance with a support-size degrees correction
inline EbResult eb_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                       double refit_tol = 5e-7) {
  EbResult out;
  const CvResult cv = cv_select_lambda(X, z);
  out.lambda_cv = cv.lambda;
  out.fit = lasso_fista(X, z, cv.lambda, refit_tol);
  out.sigma2 = sigma2_hat(X, z, out.fit.beta);
  return out;
}

}  // namespace slabprox
