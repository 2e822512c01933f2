#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "slabprox/envelope.hpp"
#include "slabprox/rng.hpp"
#include "slabprox/validation.hpp"

namespace slabprox {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

class CheckTimer {
 public:
  CheckTimer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

// 1-D logistic-plus-absolute test function used by the ordering check
inline SmoothLoss logistic_loss_1d() {
  SmoothLoss l;
  auto softplus = [](double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); };
  l.value = [softplus](const Eigen::VectorXd& x) { return -0.8 * x[0] + softplus(0.8 * x[0]); };
  l.gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(1);
    const double s = 1.0 / (1.0 + std::exp(-0.8 * x[0]));
    g[0] = -0.8 + 0.8 * s;
    return g;
  };
  l.hessian_apply = [](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    Eigen::VectorXd h(1);
    const double s = 1.0 / (1.0 + std::exp(-0.8 * x[0]));
    h[0] = 0.64 * s * (1.0 - s) * v[0];
    return h;
  };
  return l;
}

struct RandomInstance {
  Dataset data;
  HyperState phi;
  DeltaVec delta;
};

// small random regression instance with a seeded stream; d cycles 1,2,3
inline RandomInstance random_instance(std::uint64_t master, int i, bool small_delta) {
  RngStream rng = RngStream::substream(master, 1000 + i);
  RandomInstance inst;
  const int d = 1 + (i % 3);
  const int n = d + 2 + (i % 3);
  inst.data.X.resize(n, d);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) inst.data.X(r, c) = rng.normal();
  Eigen::VectorXd theta_star = Eigen::VectorXd::Zero(d);
  for (int c = 0; c < d; ++c)
    if (rng.uniform01() < 0.6) theta_star[c] = rng.uniform(-2.0, 2.0);
  inst.data.z = inst.data.X * theta_star;
  for (int r = 0; r < n; ++r) inst.data.z[r] += 0.5 * rng.normal();
  const double sigmas[3] = {0.5, 1.0, 2.0};
  inst.data.sigma2 = sigmas[i % 3];

  inst.phi.q = 0.3 + 0.4 * rng.uniform01();
  const double alphas[3] = {1.0, 0.7, 0.4};
  inst.phi.alpha = alphas[(i / 3) % 3];
  inst.phi.lambda1 = rng.uniform(0.5, 2.5);
  inst.phi.lambda2 = rng.uniform(0.5, 2.0);
  inst.phi.a_min = 1e-5;
  inst.phi.M = 1e3;
  inst.phi.u = 2.0;

  inst.delta = DeltaVec::Zero(d);
  int active = 0;
  for (int c = 0; c < d; ++c)
    if (rng.uniform01() < 0.6) {
      inst.delta[c] = 1;
      ++active;
    }
  if (active == 0) inst.delta[std::min(d - 1, static_cast<int>(rng.uniform01() * d))] = 1;
  if (small_delta && inst.delta.sum() > 2) inst.delta[0] = 0;
  return inst;
}

}  // namespace detail

// Flat loss, single inactive coordinate: the smoothed law is exactly
// N(0, gamma), the envelope is exactly x^2/(2 gamma), and the distance to the
// point mass it approximates is the full total variation 2.
inline CheckResult check_flat_loss_smoothing() {
  detail::CheckTimer timer;
  CheckResult res;
  res.id = 1;
  res.name = "flat-loss smoothing matches the closed form";

  const double pi_half = 1.57079632679489661923132169164;
  const std::vector<double> gammas = {0.01, 0.1, 0.5, pi_half};
  const long nsamples = 200000;
  const auto rows = example1_suite(gammas, nsamples, 0xE1u);

  double worst_quad = 0.0, worst_fb = 0.0, worst_tv = 0.0, worst_z = 0.0;
  bool pass = true;
  for (const auto& r : rows) {
    worst_quad = std::max(worst_quad, std::abs(r.quadrature - r.analytic));
    worst_fb = std::max(worst_fb, r.fb_max_err);
    worst_tv = std::max(worst_tv, std::abs(r.tv - 2.0));
    const double z = std::abs(r.sampled - r.analytic) / std::max(r.sample_se, 1e-300);
    worst_z = std::max(worst_z, z);
    pass = pass && std::abs(r.quadrature - r.analytic) <= 1e-8 && r.fb_max_err <= 1e-12 &&
           std::abs(r.tv - 2.0) <= 1e-12 && z <= 4.0;
  }
  res.pass = pass;
  res.detail = "max |quad - analytic| " + detail::fmt(worst_quad) + ", max envelope err " +
               detail::fmt(worst_fb) + ", max sample z " + detail::fmt(worst_z) +
               ", max |tv - 2| " + detail::fmt(worst_tv);
  res.seconds = timer.seconds();
  return res;
}

// Pointwise ordering of the two envelopes below the raw objective, plus the
// quadratic sandwich with the slack term, on a 1-D logistic instance and a
// batch of seeded regression instances.
inline CheckResult check_envelope_ordering() {
  detail::CheckTimer timer;
  CheckResult res;
  res.id = 2;
  res.name = "envelope ordering and quadratic sandwich";

  const double slack = 1e-9;
  bool pass = true;
  double worst_order = -1e300;  // max violation amount
  double gap_at_small_gamma = 0.0;

  {
    const SmoothLoss loss = detail::logistic_loss_1d();
    const PriorSpec prior = PriorSpec::laplace(0.5);
    DeltaVec on(1);
    on[0] = 1;
    auto h = [&](const Eigen::VectorXd& u) { return loss.value(u) + 0.5 * std::abs(u[0]); };
    for (double gamma : {5.0, 1.0, 0.1}) {
      const EnvelopeContext ctx(gamma, 1.0, prior, 0.0);
      for (int i = 0; i <= 400; ++i) {
        Eigen::VectorXd x(1);
        x[0] = -10.0 + 20.0 * i / 400.0;
        const double fb = fb_envelope(ctx, loss, x, on);
        const double moreau = moreau_env_oracle(gamma, h, x, on);
        const double raw = h(x);
        worst_order = std::max({worst_order, fb - moreau, moreau - raw});
        pass = pass && fb <= moreau + slack && moreau <= raw + slack;
        if (gamma == 0.1) gap_at_small_gamma = std::max(gap_at_small_gamma, raw - fb);
      }
    }
    pass = pass && gap_at_small_gamma < 0.15;
  }

  for (int i = 0; i < 20; ++i) {
    const auto inst = detail::random_instance(0xC2u, i, false);
    const PriorSpec prior = slab_prior(inst.phi, inst.data.sigma2);
    const double logZ = log_slab_normalizer(inst.phi, inst.data.sigma2);
    const LinearLoss loss(inst.data);
    const int d = static_cast<int>(inst.data.d());
    RngStream rng = RngStream::substream(0xC2u, 5000 + i);

    auto h = [&](const Eigen::VectorXd& u) {
      double pen = 0.0;
      for (int j = 0; j < d; ++j)
        if (inst.delta[j] != 0) pen += neg_log_prior(prior, u[j]) + logZ;
      return loss.value(u) + pen;
    };

    for (double gamma : {5.0, 1.0, 0.1}) {
      const EnvelopeContext ctx(gamma, 1.0, prior, logZ);
      for (int p = 0; p < 8; ++p) {
        Eigen::VectorXd theta(d);
        for (int j = 0; j < d; ++j) theta[j] = rng.uniform(-4.0, 4.0);
        const bool in_subspace = p >= 5;
        if (in_subspace)
          for (int j = 0; j < d; ++j)
            if (inst.delta[j] == 0) theta[j] = 0.0;

        const double fb = fb_envelope(ctx, loss, theta, inst.delta);
        if (inst.delta.sum() <= 2) {
          const double moreau = moreau_env_oracle(gamma, h, theta, inst.delta);
          worst_order = std::max(worst_order, fb - moreau);
          pass = pass && fb <= moreau + slack;
          if (in_subspace) {
            const double raw = h(theta);
            worst_order = std::max(worst_order, moreau - raw);
            pass = pass && moreau <= raw + slack;
          }
        }

        Eigen::VectorXd theta_delta = theta;
        for (int j = 0; j < d; ++j)
          if (inst.delta[j] == 0) theta_delta[j] = 0.0;
        const double upper =
            h(theta_delta) + (theta - theta_delta).squaredNorm() / (2.0 * gamma);
        const double slack_term = r_gamma(inst.data, prior, gamma, inst.delta, theta);
        worst_order = std::max({worst_order, fb - upper, upper - slack_term - fb});
        pass = pass && fb <= upper + slack && upper - slack_term <= fb + slack &&
               slack_term >= -slack;
      }
    }
  }

  res.pass = pass;
  res.detail = "worst ordering violation " + detail::fmt(worst_order) +
               ", logistic gap at gamma 0.1: " + detail::fmt(gap_at_small_gamma);
  res.seconds = timer.seconds();
  return res;
}

// Closed-form shrinkage operators against the scan-and-refine oracle across
// all prior families and a thousand random (prior, gamma, x) triples.
inline CheckResult check_shrinkage_oracle() {
  detail::CheckTimer timer;
  CheckResult res;
  res.id = 3;
  res.name = "shrinkage operators match the scan oracle";

  RngStream rng = RngStream::substream(0xC3u, 1);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    PriorSpec prior = PriorSpec::laplace(1.0);
    switch (i % 4) {
      case 0:
        prior = PriorSpec::elastic_net(rng.uniform01(), rng.uniform(0.1, 5.0),
                                       rng.uniform(0.1, 5.0), rng.uniform(0.3, 3.0));
        break;
      case 1:
        prior = PriorSpec::laplace(rng.uniform(0.05, 5.0));
        break;
      case 2:
        prior = PriorSpec::gen_double_pareto(rng.uniform(0.5, 4.0), rng.uniform(0.2, 3.0));
        break;
      case 3:
        prior = PriorSpec::mcp(rng.uniform(1.2, 6.0), rng.uniform(0.2, 3.0));
        break;
    }
    const double gamma = std::exp(rng.uniform(std::log(0.01), std::log(4.0)));
    const double x = rng.uniform(-12.0, 12.0);

    const double s = shrink_scalar(prior, gamma, x);
    const ProxOracleResult o = prox_oracle_scalar(prior, gamma, x);
    const double point_err = std::abs(s - o.point);
    const double obj_s = neg_log_prior(prior, s) + (s - x) * (s - x) / (2.0 * gamma);
    const double obj_err = std::abs(obj_s - o.objective);
    const bool ok = point_err <= 1e-8 * (1.0 + std::abs(x)) ||
                    obj_err <= 1e-10 * (1.0 + std::abs(o.objective));
    if (!ok) ++bad;
    worst = std::max(worst, std::min(point_err, obj_err));
  }
  res.pass = bad == 0;
  res.detail = std::to_string(bad) + " mismatches in 1000 draws, worst residual " +
               detail::fmt(worst);
  res.seconds = timer.seconds();
  return res;
}

// Quadrature estimates of the smoothing error on seeded desk-scale instances:
// the exponential-moment gap is nonnegative, sits below its closed-form
// bound, and the measured metric gap sits below the distance bound.
inline CheckResult check_smoothing_bounds() {
  detail::CheckTimer timer;
  CheckResult res;
  res.id = 4;
  res.name = "smoothing-error bounds hold at desk scale";

  bool pass = true;
  double worst_neg = 0.0, worst_ratio = 0.0, worst_beta_ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto inst = detail::random_instance(0xC4u, i, false);
    const double lmax = lambda_max(inst.data);
    const double gamma = gamma_from_rule(lmax, inst.data.sigma2, 0.25);
    const int d = static_cast<int>(inst.data.d());

    const VarrhoEstimate rho = varrho_gamma_estimate(inst.data, inst.phi, gamma);
    const double bound = cor1_bound(inst.data, inst.phi, gamma, lmax);
    const TheoremBoundInputs inputs = make_bound_inputs(inst.data, inst.phi, lmax);
    const double bound_general = thm2_bound(inputs, gamma, d);

    const QuadraturePosterior exact =
        quad_posterior(inst.data, inst.phi, 0.0, PosteriorKind::exact);
    const QuadraturePosterior approx =
        quad_posterior(inst.data, inst.phi, gamma, PosteriorKind::my_approx);
    const double beta_hat = beta_metric_empirical(exact, approx);
    const double rho_up = std::max(rho.value, 0.0) + 3.0 * rho.stderr_est;
    const double beta_bound = beta_metric_bound(gamma, d, rho_up);

    worst_neg = std::min(worst_neg, rho.value);
    worst_ratio = std::max(worst_ratio, rho.value / bound);
    worst_beta_ratio = std::max(worst_beta_ratio, beta_hat / beta_bound);
    pass = pass && rho.value >= -1e-6 && rho.value <= bound + 3.0 * rho.stderr_est + 1e-9 &&
           bound <= bound_general + 1e-9 && beta_hat <= beta_bound + 1e-9;
  }
  res.pass = pass;
  res.detail = "min varrho " + detail::fmt(worst_neg) + ", max varrho/bound " +
               detail::fmt(worst_ratio) + ", max beta/bound " + detail::fmt(worst_beta_ratio);
  res.seconds = timer.seconds();
  return res;
}

}  // namespace slabprox
