#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "slabprox/lasso.hpp"
#include "slabprox/rng.hpp"
#include "slabprox/scenario.hpp"

namespace {

Eigen::MatrixXd random_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  slabprox::RngStream rng = slabprox::RngStream::substream(seed, 21);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.normal();
  return X;
}

}  // namespace

TEST_CASE("heavy shrinkage collapses the fit", "[lasso]") {
  const Eigen::MatrixXd X = random_design(12, 6, 3);
  slabprox::RngStream rng = slabprox::RngStream::substream(3, 22);
  Eigen::VectorXd z(12);
  for (int i = 0; i < 12; ++i) z[i] = rng.normal();

  const double lam_top = (X.transpose() * z).cwiseAbs().maxCoeff();
  const slabprox::LassoFit fit = slabprox::lasso_fista(X, z, lam_top);
  REQUIRE(fit.beta.isZero(0.0));
  REQUIRE(fit.support_size == 0);
  REQUIRE(fit.kkt_residual == 0.0);
  REQUIRE(fit.objective == Catch::Approx(0.5 * z.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("orthogonal design reduces to soft thresholding", "[lasso]") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(8, 8);
  slabprox::RngStream rng = slabprox::RngStream::substream(5, 23);
  Eigen::VectorXd z(8);
  for (int i = 0; i < 8; ++i) z[i] = 2.0 * rng.normal();

  const double lambda = 0.7;
  const slabprox::LassoFit fit = slabprox::lasso_fista(X, z, lambda, 1e-10);
  for (int j = 0; j < 8; ++j) {
    const double expect = std::copysign(std::max(std::abs(z[j]) - lambda, 0.0), z[j]);
    REQUIRE(fit.beta[j] == Catch::Approx(expect).margin(1e-8));
  }
}

TEST_CASE("stationarity certificate at convergence", "[lasso]") {
  const Eigen::MatrixXd X = random_design(20, 10, 11);
  slabprox::RngStream rng = slabprox::RngStream::substream(11, 24);
  Eigen::VectorXd beta_star = Eigen::VectorXd::Zero(10);
  beta_star[2] = 1.5;
  beta_star[7] = -2.0;
  Eigen::VectorXd z = X * beta_star;
  for (int i = 0; i < 20; ++i) z[i] += 0.3 * rng.normal();

  const double lam_top = (X.transpose() * z).cwiseAbs().maxCoeff();
  const slabprox::LassoFit fit = slabprox::lasso_fista(X, z, 0.1 * lam_top, 1e-8);
  REQUIRE(fit.kkt_residual <= 1e-6);
  REQUIRE(fit.iters > 0);
  // independent recheck of the certificate from the returned point
  const Eigen::VectorXd c = X.transpose() * (z - X * fit.beta);
  double worst = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double v = fit.beta[j] == 0.0
                         ? std::max(0.0, std::abs(c[j]) - fit.lambda)
                         : std::abs(c[j] - fit.lambda * (fit.beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  REQUIRE(worst <= 1e-6);
  REQUIRE(fit.objective ==
          Catch::Approx(0.5 * (z - X * fit.beta).squaredNorm() + fit.lambda * fit.beta.lpNorm<1>())
              .epsilon(1e-12));

  REQUIRE_THROWS_AS(slabprox::lasso_fista(X, z, -1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(slabprox::lasso_fista(X, Eigen::VectorXd::Zero(3), 1.0),
                    std::invalid_argument);
}

TEST_CASE("cross-validation grid shape", "[lasso]") {
  const Eigen::MatrixXd X = random_design(20, 5, 17);
  slabprox::RngStream rng = slabprox::RngStream::substream(17, 25);
  Eigen::VectorXd z(20);
  for (int i = 0; i < 20; ++i) z[i] = rng.normal();
  const double lam_top = (X.transpose() * z).cwiseAbs().maxCoeff();

  const slabprox::CvResult one = slabprox::cv_select_lambda(X, z, 1, 4);
  REQUIRE(one.grid.size() == 1);
  REQUIRE(one.lambda == Catch::Approx(lam_top).epsilon(1e-14));

  const slabprox::CvResult path = slabprox::cv_select_lambda(X, z, 50, 4);
  REQUIRE(path.grid.size() == 50);
  REQUIRE(path.grid.front() == Catch::Approx(0.01 * lam_top).epsilon(1e-12));
  REQUIRE(path.grid.back() == Catch::Approx(lam_top).epsilon(1e-12));
  const double ratio = path.grid[1] / path.grid[0];
  for (std::size_t i = 2; i < path.grid.size(); ++i)
    REQUIRE(path.grid[i] / path.grid[i - 1] == Catch::Approx(ratio).epsilon(1e-10));
  REQUIRE(path.cv_error.size() == 50);

  REQUIRE_THROWS_AS(slabprox::cv_select_lambda(X.topRows(3), z.head(3), 10, 5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(slabprox::cv_select_lambda(X, Eigen::VectorXd::Zero(20), 10, 4),
                    std::invalid_argument);
}

TEST_CASE("residual variance estimate", "[lasso]") {
  const Eigen::MatrixXd X = random_design(10, 4, 29);
  slabprox::RngStream rng = slabprox::RngStream::substream(29, 26);
  Eigen::VectorXd z(10);
  for (int i = 0; i < 10; ++i) z[i] = rng.normal();

  REQUIRE(slabprox::sigma2_hat(X, z, Eigen::VectorXd::Zero(4)) ==
          Catch::Approx(z.squaredNorm() / 10.0).epsilon(1e-14));

  // exact fit leaves no residual
  Eigen::VectorXd beta(4);
  beta << 1.0, -2.0, 0.5, 0.0;
  REQUIRE(slabprox::sigma2_hat(X, X * beta, beta) == Catch::Approx(0.0).margin(1e-20));

  Eigen::VectorXd full = Eigen::VectorXd::Ones(4);
  REQUIRE_THROWS_AS(slabprox::sigma2_hat(X.topRows(4), z.head(4), full), std::invalid_argument);
}

TEST_CASE("noise-level pilot on synthetic data", "[lasso]") {
  slabprox::ScenarioConfig cfg;
  cfg.n = 40;
  cfg.d = 12;
  cfg.s_star = 2;
  cfg.rho = 0.3;
  cfg.v = 3.0;
  cfg.sigma = 1.0;
  const slabprox::Scenario sc = slabprox::gen_scenario(cfg, 12u);

  const slabprox::EbResult out = slabprox::eb_fit(sc.data.X, sc.data.z);
  REQUIRE(out.fit.kkt_residual <= 1e-6);
  REQUIRE(out.lambda_cv > 0.0);
  REQUIRE(out.sigma2 > 0.3);
  REQUIRE(out.sigma2 < 3.0);
}
