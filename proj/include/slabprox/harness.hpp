#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slabprox/diagnostics.hpp"
#include "slabprox/lasso.hpp"
#include "slabprox/sampler.hpp"
#include "slabprox/scenario.hpp"

namespace slabprox {

// Hyperparameter state wired to a dataset: flat lambda box from the spectral
// norm, prior-mean inclusion weight, pilot lambda1.
inline HyperState default_hyper(const Dataset& data, double alpha, double u, double lmax = 0.0) {
  if (lmax <= 0.0) lmax = lambda_max(data);
  HyperState phi;
  phi.alpha = alpha;
  phi.u = u;
  phi.a_min = 1e-5;
  phi.M = default_lambda_bound(lmax, alpha, data.sigma2);
  const double d = static_cast<double>(data.d());
  phi.q = 1.0 / (1.0 + std::pow(d, u));
  // the pilot starts the walk interior to the box, not pinned at its edge
  phi.lambda1 = std::min(std::max(lambda1_default(data), phi.a_min), 0.5 * phi.M);
  phi.lambda2 = std::min(std::max(1.0, phi.a_min), phi.M);
  validate_hyper(phi);
  return phi;
}

struct RepMetrics {
  int rep = 0;
  std::uint64_t scenario_seed = 0, chain_seed = 0;
  double rel_err_mean = std::numeric_limits<double>::quiet_NaN();
  double rel_err_prox = std::numeric_limits<double>::quiet_NaN();
  double f_delta = 0.0, f_prox = 0.0;
  double sigma2_used = 0.0;
  double eb_sigma2 = std::numeric_limits<double>::quiet_NaN();
  double eb_lambda = std::numeric_limits<double>::quiet_NaN();
  double eb_kkt = std::numeric_limits<double>::quiet_NaN();
  std::vector<long> curve_iters;        // per-sweep metric curves at trace points
  std::vector<double> curve_rel_err;    // E at the recorded state
  std::vector<double> curve_f;          // F of the prox-thresholded recorded state
  ChainSummary summary;
};

// E and F at one chain state; F uses the prox image, which is exactly sparse.
inline std::pair<double, double> state_metrics(const LinearLoss& loss, double gamma,
                                               const PriorSpec& prior, const DeltaVec& delta,
                                               const Eigen::VectorXd& theta,
                                               const Eigen::VectorXd& theta_star,
                                               const DeltaVec& support_star) {
  const double e = relative_error(theta, theta_star);
  const Eigen::VectorXd m = theta - gamma * loss.gradient(theta);
  DeltaVec sup(delta.size());
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    sup[j] = (delta[j] != 0 && shrink_scalar(prior, gamma, m[j]) != 0.0) ? 1 : 0;
  return {e, sen_prec_f(sup, support_star).f1};
}

struct ExperimentConfig {
  ScenarioConfig scenario;
  SamplerConfig sampler;  // per-replicate seeds are derived from master_seed
  double alpha = 1.0;
  double u = 1.1;
  bool eb = false;        // plug in the lasso pilot variance instead of scenario sigma^2
  bool curves = false;    // track the running-mean error at thinned sweeps
  int reps = 1;
  std::uint64_t master_seed = 1;
};

inline RepMetrics run_replicate(const ExperimentConfig& cfg, int rep) {
  RepMetrics m;
  m.rep = rep;
  m.scenario_seed = derive_seed(cfg.master_seed, 2 * rep);
  m.chain_seed = derive_seed(cfg.master_seed, 2 * rep + 1);

  Scenario sc = gen_scenario(cfg.scenario, m.scenario_seed);
  if (cfg.eb) {
    const EbResult eb = eb_fit(sc.data.X, sc.data.z);
    m.eb_sigma2 = eb.sigma2;
    m.eb_lambda = eb.fit.lambda;
    m.eb_kkt = eb.fit.kkt_residual;
    sc.data.sigma2 = eb.sigma2;
  }
  m.sigma2_used = sc.data.sigma2;

  const double lmax = lambda_max(sc.data);
  const HyperState phi = default_hyper(sc.data, cfg.alpha, cfg.u, lmax);
  SamplerConfig scfg = cfg.sampler;
  scfg.seed = m.chain_seed;

  const Eigen::VectorXd& truth = sc.truth.theta_star;
  const double gamma =
      scfg.gamma > 0.0 ? scfg.gamma : gamma_from_rule(lmax, sc.data.sigma2, scfg.gamma0);
  std::function<void(const TraceRecord&)> cb;
  LinearLoss curve_loss(sc.data);
  if (cfg.curves) {
    cb = [&](const TraceRecord& r) {
      HyperState hp = phi;
      hp.lambda1 = std::min(std::max(r.lambda1, phi.a_min), phi.M);
      hp.lambda2 = std::min(std::max(r.lambda2, phi.a_min), phi.M);
      const PriorSpec pr = slab_prior(hp, sc.data.sigma2);
      DeltaVec dl(sc.data.d());
      for (Eigen::Index j = 0; j < dl.size(); ++j)
        dl[j] = r.delta[static_cast<std::size_t>(j)] == '1' ? 1 : 0;
      const auto [e, f] =
          state_metrics(curve_loss, gamma, pr, dl, r.theta, truth, sc.truth.support);
      m.curve_iters.push_back(r.iter);
      m.curve_rel_err.push_back(e);
      m.curve_f.push_back(f);
    };
  }
  m.summary = run_chain(sc.data, phi, scfg, cb);

  m.rel_err_mean = relative_error(m.summary.theta_mean, truth);
  HyperState phi_post = phi;
  if (!scfg.fixed_phi) {
    phi_post.lambda1 = std::min(std::max(m.summary.lambda1_mean, phi.a_min), phi.M);
    phi_post.lambda2 = std::min(std::max(m.summary.lambda2_mean, phi.a_min), phi.M);
  }
  // Sparse point estimate: prox of the posterior mean on the median model.
  // Without the inclusion gate the gamma-sized prox threshold sits at the
  // same scale as the Monte Carlo noise of the spike coordinates.
  const PriorSpec prior = slab_prior(phi_post, sc.data.sigma2);
  DeltaVec med(sc.data.d());
  for (Eigen::Index j = 0; j < med.size(); ++j) med[j] = m.summary.inclusion[j] >= 0.5 ? 1 : 0;
  Eigen::VectorXd shrunk(sc.data.d());
  for (Eigen::Index j = 0; j < shrunk.size(); ++j)
    shrunk[j] =
        med[j] ? shrink_scalar(prior, m.summary.gamma, m.summary.theta_mean[j]) : 0.0;
  m.rel_err_prox = relative_error(shrunk, truth);
  m.f_delta = sen_prec_f(med, sc.truth.support).f1;
  m.f_prox = sen_prec_f(support_from_threshold(shrunk, 0.0), sc.truth.support).f1;
  return m;
}

inline std::vector<RepMetrics> run_experiment(const ExperimentConfig& cfg) {
  std::vector<RepMetrics> out;
  out.reserve(cfg.reps);
  for (int r = 0; r < cfg.reps; ++r) out.push_back(run_replicate(cfg, r));
  return out;
}

struct MeanSe {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& x) {
  MeanSe r;
  const std::size_t n = x.size();
  if (n == 0) return r;
  double s = 0.0;
  for (double v : x) s += v;
  r.mean = s / n;
  if (n > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - r.mean) * (v - r.mean);
    r.se = std::sqrt(ss / (n - 1) / n);
  }
  return r;
}

struct ExperimentAggregate {
  MeanSe rel_err_mean, rel_err_prox, f_delta, f_prox, wall_seconds;
  std::vector<long> curve_iters;  // common recording grid (empty without curves)
  std::vector<MeanSe> curve_rel_err, curve_f;
};

inline ExperimentAggregate aggregate_metrics(const std::vector<RepMetrics>& reps) {
  ExperimentAggregate a;
  auto collect = [&](auto get) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& m : reps) v.push_back(get(m));
    return mean_se(v);
  };
  a.rel_err_mean = collect([](const RepMetrics& m) { return m.rel_err_mean; });
  a.rel_err_prox = collect([](const RepMetrics& m) { return m.rel_err_prox; });
  a.f_delta = collect([](const RepMetrics& m) { return m.f_delta; });
  a.f_prox = collect([](const RepMetrics& m) { return m.f_prox; });
  a.wall_seconds = collect([](const RepMetrics& m) { return m.summary.wall_seconds; });

  if (reps.empty() || reps.front().curve_iters.empty()) return a;
  const std::size_t len = reps.front().curve_iters.size();
  for (const auto& m : reps)
    if (m.curve_iters.size() != len)
      throw std::invalid_argument("aggregate_metrics: replicate curves have different lengths");
  a.curve_iters = reps.front().curve_iters;
  a.curve_rel_err.resize(len);
  a.curve_f.resize(len);
  std::vector<double> col(reps.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t r = 0; r < reps.size(); ++r) col[r] = reps[r].curve_rel_err[i];
    a.curve_rel_err[i] = mean_se(col);
    for (std::size_t r = 0; r < reps.size(); ++r) col[r] = reps[r].curve_f[i];
    a.curve_f[i] = mean_se(col);
  }
  return a;
}

}  // namespace slabprox
