#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "slabprox/envelope.hpp"
#include "slabprox/linmodel.hpp"
#include "slabprox/rng.hpp"

namespace slabprox {

struct SamplerConfig {
  double gamma0 = 0.25;     // step-rule fraction when gamma is derived
  double gamma = 0.0;       // 0 -> gamma0 * sigma2 / lambda_max(X'X)
  double mala_step = 0.0;   // 0 -> gamma
  double mala_target = 0.57;
  double rwm_target = 0.30;
  double rwm_scale = 0.0;   // 0 -> on the order of the initial lambdas
  double drift_cap = 0.0;   // 0 -> 10 sqrt(d) lambda1 / sigma2, frozen at init
  long sweeps = 1000;
  long burn_in = 0;
  long thin = 1;
  bool fixed_phi = false;   // freeze q, lambda1, lambda2
  bool adapt_mala = true;   // step adaptation runs during burn-in only
  std::uint64_t seed = 1;
};

struct StepInfo {
  bool attempted = false;
  bool accepted = false;
  double alpha = 0.0;  // min(1, exp(log_alpha))
  double log_alpha = -std::numeric_limits<double>::infinity();
};

struct TraceRecord {
  long iter = 0;
  std::string delta;  // bitstring, coordinate j at position j
  Eigen::VectorXd theta;
  double q = 0.0, lambda1 = 0.0, lambda2 = 0.0;
  double log_target = 0.0;
  int acc_mala = -1, acc_ind = -1, acc_rwm = -1;  // -1 not attempted
};

struct ChainSummary {
  long sweeps = 0, burn_in = 0;
  int d = 0;
  double gamma = 0.0;
  double mala_step_final = 0.0, rwm_scale_final = 0.0;
  double mala_rate = 0.0, ind_rate = 0.0, rwm_rate = 0.0;  // post-burn
  double avg_active = 0.0;
  double q_mean = 0.0, lambda1_mean = 0.0, lambda2_mean = 0.0;
  Eigen::VectorXd theta_mean, theta_sq_mean, inclusion;
  std::vector<double> mask_freq;  // delta histogram, filled when d <= 10
  DeltaVec final_delta;
  Eigen::VectorXd final_theta;
  HyperState final_phi;
  double wall_seconds = 0.0;
  std::uint64_t draws_delta = 0, draws_mala = 0, draws_ind = 0, draws_q = 0, draws_lambda = 0;
};

inline std::string delta_bitstring(const DeltaVec& delta) {
  std::string s(static_cast<std::size_t>(delta.size()), '0');
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    if (delta[j] != 0) s[static_cast<std::size_t>(j)] = '1';
  return s;
}

inline std::uint32_t delta_mask(const DeltaVec& delta) {
  std::uint32_t m = 0;
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    if (delta[j] != 0) m |= (1u << j);
  return m;
}

// log of the chain's invariant density at the current state, up to a constant:
//   log pi_delta + s/2 log(2 pi gamma) - h_gamma(theta|delta) + beta(1, d^u) term
inline double chain_log_target(const LinearLoss& loss, const EnvelopeContext& ctx,
                               const HyperState& phi, const DeltaVec& delta,
                               const Eigen::VectorXd& theta) {
  const double s = static_cast<double>(delta.sum());
  const double d = static_cast<double>(delta.size());
  const double log2pi = 1.83787706640934548356065947281;
  double lt = s * std::log(phi.q) + (d - s) * std::log1p(-phi.q);
  lt += 0.5 * s * (log2pi + std::log(ctx.gamma));
  lt -= fb_envelope(ctx, loss, theta, delta);
  lt += (std::pow(d, phi.u) - 1.0) * std::log1p(-phi.q);
  return lt;
}

// Conditional flip odds for each delta_j given theta; the envelope target
// factorizes over coordinates once the gradient-step point is fixed, so the
// block update draws every coordinate independently from its conditional.
inline Eigen::VectorXd delta_flip_logits(const LinearLoss& loss, const EnvelopeContext& ctx,
                                         const HyperState& phi, const Eigen::VectorXd& theta) {
  const double gamma = ctx.gamma;
  const double log2pi = 1.83787706640934548356065947281;
  const Eigen::VectorXd g = loss.gradient(theta);
  const double base = std::log(phi.q) - std::log1p(-phi.q) + 0.5 * (log2pi + std::log(gamma));
  Eigen::VectorXd logits(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double mj = theta[j] - gamma * g[j];
    const double dj = shrink_scalar(ctx.prior, gamma, mj);
    logits[j] = base - (g[j] * dj + neg_log_prior(ctx.prior, dj) + ctx.log_normalizer +
                        (dj * dj - 2.0 * theta[j] * dj) / (2.0 * gamma));
  }
  return logits;
}

inline int update_delta(const LinearLoss& loss, const EnvelopeContext& ctx,
                        const HyperState& phi, const Eigen::VectorXd& theta, DeltaVec& delta,
                        RngStream& rng) {
  const Eigen::VectorXd logits = delta_flip_logits(loss, ctx, phi, theta);
  int flips = 0;
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    const double p = 1.0 / (1.0 + std::exp(-logits[j]));
    const int nv = rng.uniform01() < p ? 1 : 0;
    flips += (nv != delta[j]);
    delta[j] = nv;
  }
  return flips;
}

// drift restricted to the active block, then norm-capped
inline Eigen::VectorXd mala_drift_active(const EnvelopeContext& ctx, const LinearLoss& loss,
                                         const Eigen::VectorXd& theta, const DeltaVec& delta) {
  Eigen::VectorXd g = g_drift(ctx, loss, theta, delta);
  for (Eigen::Index j = 0; j < g.size(); ++j)
    if (delta[j] == 0) g[j] = 0.0;
  return cap_drift(g, ctx.drift_cap);
}

inline double mala_log_q(const EnvelopeContext& ctx, const LinearLoss& loss,
                         const DeltaVec& delta, const Eigen::VectorXd& from,
                         const Eigen::VectorXd& to, double step) {
  const Eigen::VectorXd drift = mala_drift_active(ctx, loss, from, delta);
  const double log2pi = 1.83787706640934548356065947281;
  double s = 0.0;
  int k = 0;
  for (Eigen::Index j = 0; j < from.size(); ++j) {
    if (delta[j] == 0) continue;
    const double diff = to[j] - (from[j] - 0.5 * step * drift[j]);
    s += diff * diff;
    ++k;
  }
  return -0.5 * k * (log2pi + std::log(step)) - s / (2.0 * step);
}

inline double mala_log_alpha(const EnvelopeContext& ctx, const LinearLoss& loss,
                             const DeltaVec& delta, const Eigen::VectorXd& from,
                             const Eigen::VectorXd& to, double step) {
  return fb_envelope(ctx, loss, from, delta) - fb_envelope(ctx, loss, to, delta) +
         mala_log_q(ctx, loss, delta, to, from, step) -
         mala_log_q(ctx, loss, delta, from, to, step);
}

inline StepInfo mala_active(const EnvelopeContext& ctx, const LinearLoss& loss,
                            const DeltaVec& delta, Eigen::VectorXd& theta, double step,
                            RngStream& rng) {
  StepInfo info;
  std::vector<int> act;
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    if (delta[j] != 0) act.push_back(static_cast<int>(j));
  if (act.empty()) return info;
  info.attempted = true;
  const Eigen::VectorXd drift = mala_drift_active(ctx, loss, theta, delta);
  Eigen::VectorXd prop = theta;
  const double sq = std::sqrt(step);
  for (int j : act) prop[j] = theta[j] - 0.5 * step * drift[j] + sq * rng.normal();
  info.log_alpha = mala_log_alpha(ctx, loss, delta, theta, prop, step);
  info.alpha = std::exp(std::min(info.log_alpha, 0.0));
  if (std::log(rng.uniform01()) < info.log_alpha) {
    theta = prop;
    info.accepted = true;
  }
  return info;
}

// Gaussian the inactive block is refreshed from. With precision
// I - (gamma/sigma^2) X_I' X_I it matches the surrogate with the plain prox,
// which is explicit in the inactive coordinates.
struct InactiveProposal {
  std::vector<int> inact;
  Eigen::VectorXd mean;
  Eigen::MatrixXd prec;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double gamma = 0.0;
  double log_norm_const = 0.0;

  double log_density(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd diff = u - mean;
    return log_norm_const - diff.dot(prec * diff) / (2.0 * gamma);
  }
};

inline InactiveProposal make_inactive_proposal(const LinearLoss& loss, const EnvelopeContext& ctx,
                                               const DeltaVec& delta,
                                               const Eigen::VectorXd& theta) {
  InactiveProposal P;
  P.gamma = ctx.gamma;
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    if (delta[j] == 0) P.inact.push_back(static_cast<int>(j));
  const int k = static_cast<int>(P.inact.size());
  if (k == 0) return P;

  const Eigen::MatrixXd& G = loss.gram();
  const double c = ctx.gamma / loss.sigma2();
  P.prec.resize(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) P.prec(a, b) = -c * G(P.inact[a], P.inact[b]);
  P.prec.diagonal().array() += 1.0;

  Eigen::VectorXd v = prox_restricted(ctx.prior, ctx.gamma, theta, delta);
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    v[j] = delta[j] != 0 ? v[j] - theta[j] : 0.0;
  Eigen::VectorXd rhs(k);
  for (int a = 0; a < k; ++a) rhs[a] = G.row(P.inact[a]).dot(v);

  P.llt.compute(P.prec);
  if (P.llt.info() != Eigen::Success)
    throw std::runtime_error("inactive proposal: precision not positive definite; gamma violates the step rule");
  P.mean = -c * P.llt.solve(rhs);

  const double log2pi = 1.83787706640934548356065947281;
  double logdet = 0.0;
  for (int i = 0; i < k; ++i) logdet += std::log(P.llt.matrixLLT()(i, i));
  P.log_norm_const = -0.5 * k * (log2pi + std::log(ctx.gamma)) + logdet;
  return P;
}

inline double independence_log_alpha(const EnvelopeContext& ctx, const LinearLoss& loss,
                                     const InactiveProposal& P, const DeltaVec& delta,
                                     const Eigen::VectorXd& from, const Eigen::VectorXd& to) {
  const int k = static_cast<int>(P.inact.size());
  Eigen::VectorXd u_from(k), u_to(k);
  for (int a = 0; a < k; ++a) {
    u_from[a] = from[P.inact[a]];
    u_to[a] = to[P.inact[a]];
  }
  return fb_envelope(ctx, loss, from, delta) - fb_envelope(ctx, loss, to, delta) +
         P.log_density(u_from) - P.log_density(u_to);
}

inline StepInfo independence_inactive(const EnvelopeContext& ctx, const LinearLoss& loss,
                                      const DeltaVec& delta, Eigen::VectorXd& theta,
                                      RngStream& rng) {
  StepInfo info;
  const InactiveProposal P = make_inactive_proposal(loss, ctx, delta, theta);
  const int k = static_cast<int>(P.inact.size());
  if (k == 0) return info;
  info.attempted = true;
  Eigen::VectorXd xi(k);
  for (int i = 0; i < k; ++i) xi[i] = rng.normal();
  const Eigen::VectorXd u = P.mean + std::sqrt(ctx.gamma) * P.llt.matrixU().solve(xi);
  Eigen::VectorXd prop = theta;
  for (int a = 0; a < k; ++a) prop[P.inact[a]] = u[a];
  info.log_alpha = independence_log_alpha(ctx, loss, P, delta, theta, prop);
  info.alpha = std::exp(std::min(info.log_alpha, 0.0));
  if (std::log(rng.uniform01()) < info.log_alpha) {
    theta = prop;
    info.accepted = true;
  }
  return info;
}

inline void update_q(const DeltaVec& delta, HyperState& phi, RngStream& rng) {
  const double s = static_cast<double>(delta.sum());
  const double d = static_cast<double>(delta.size());
  const double du = std::pow(d, phi.u);
  phi.q = rng.beta(1.0 + s, du + d - s);
  phi.q = std::min(std::max(phi.q, 1e-300), 1.0 - 1e-16);
}

// Joint Gaussian walk on (lambda1, lambda2) against the envelope target with
// a flat prior on [a_min, M]^2; proposals outside the box are rejected with
// the draws still consumed, keeping the stream layout fixed.
inline StepInfo rwm_lambdas(const LinearLoss& loss, const DeltaVec& delta,
                            const Eigen::VectorXd& theta, HyperState& phi,
                            EnvelopeContext& ctx, double scale, RngStream& rng) {
  StepInfo info;
  info.attempted = true;
  const double l1p = phi.lambda1 + scale * rng.normal();
  const double l2p = phi.lambda2 + scale * rng.normal();
  if (l1p < phi.a_min || l1p > phi.M || l2p < phi.a_min || l2p > phi.M) {
    info.alpha = 0.0;
    return info;
  }
  HyperState cand = phi;
  cand.lambda1 = l1p;
  cand.lambda2 = l2p;
  EnvelopeContext cctx = ctx;
  cctx.prior = slab_prior(cand, loss.sigma2());
  cctx.log_normalizer = log_slab_normalizer(cand, loss.sigma2());
  info.log_alpha = fb_envelope(ctx, loss, theta, delta) - fb_envelope(cctx, loss, theta, delta);
  info.alpha = std::exp(std::min(info.log_alpha, 0.0));
  if (std::log(rng.uniform01()) < info.log_alpha) {
    phi = cand;
    ctx = cctx;
    info.accepted = true;
  }
  return info;
}

struct ChainInit {
  DeltaVec delta;
  Eigen::VectorXd theta;
};

inline ChainSummary run_chain(const Dataset& data, const HyperState& phi_init,
                              const SamplerConfig& cfg,
                              const std::function<void(const TraceRecord&)>& on_record = nullptr,
                              const ChainInit* init = nullptr) {
  validate_dataset(data);
  HyperState phi = phi_init;
  validate_hyper(phi);
  if (cfg.sweeps < 0 || cfg.burn_in < 0 || (cfg.sweeps > 0 && cfg.burn_in >= cfg.sweeps) ||
      cfg.thin < 1)
    throw std::invalid_argument("run_chain: bad sweep/burn-in/thin configuration");

  const auto t0 = std::chrono::steady_clock::now();
  const int d = static_cast<int>(data.d());
  const double lmax = lambda_max(data);
  const double gamma =
      cfg.gamma > 0.0 ? cfg.gamma : gamma_from_rule(lmax, data.sigma2, cfg.gamma0);
  const double cap =
      cfg.drift_cap > 0.0 ? cfg.drift_cap : default_drift_cap(d, phi.lambda1, data.sigma2);

  LinearLoss loss(data);
  EnvelopeContext ctx(gamma, cap, slab_prior(phi, data.sigma2),
                      log_slab_normalizer(phi, data.sigma2));
  ctx.lambda_max = lmax;

  DeltaVec delta = init ? init->delta : DeltaVec::Zero(d).eval();
  Eigen::VectorXd theta = init ? init->theta : Eigen::VectorXd::Zero(d).eval();
  if (delta.size() != d || theta.size() != d)
    throw std::invalid_argument("run_chain: init size mismatch");

  RngStream rs_delta = RngStream::substream(cfg.seed, 1);
  RngStream rs_mala = RngStream::substream(cfg.seed, 2);
  RngStream rs_ind = RngStream::substream(cfg.seed, 3);
  RngStream rs_q = RngStream::substream(cfg.seed, 4);
  RngStream rs_lambda = RngStream::substream(cfg.seed, 5);

  double mala_step = cfg.mala_step > 0.0 ? cfg.mala_step : gamma;
  // M can be astronomically large (alpha = 1); a scale tied to the box would
  // burn the whole adaptation budget, so start near the pilot lambdas instead.
  double rwm_scale = cfg.rwm_scale > 0.0
                         ? cfg.rwm_scale
                         : std::min((phi.M - phi.a_min) / 20.0,
                                    std::max(1.0, 0.25 * (phi.lambda1 + phi.lambda2)));

  ChainSummary sum;
  sum.sweeps = cfg.sweeps;
  sum.burn_in = cfg.burn_in;
  sum.d = d;
  sum.gamma = gamma;
  sum.theta_mean = Eigen::VectorXd::Zero(d);
  sum.theta_sq_mean = Eigen::VectorXd::Zero(d);
  sum.inclusion = Eigen::VectorXd::Zero(d);
  std::vector<long> mask_hist;
  if (d <= 10) mask_hist.assign(std::size_t(1) << d, 0);

  long kept = 0;
  long mala_att = 0, mala_acc = 0, ind_att = 0, ind_acc = 0, rwm_att = 0, rwm_acc = 0;

  for (long t = 1; t <= cfg.sweeps; ++t) {
    update_delta(loss, ctx, phi, theta, delta, rs_delta);
    const StepInfo mi = mala_active(ctx, loss, delta, theta, mala_step, rs_mala);
    const StepInfo ii = independence_inactive(ctx, loss, delta, theta, rs_ind);
    StepInfo ri;
    if (!cfg.fixed_phi) {
      update_q(delta, phi, rs_q);
      ri = rwm_lambdas(loss, delta, theta, phi, ctx, rwm_scale, rs_lambda);
    }

    const double eta = std::pow(static_cast<double>(t), -0.6);
    if (cfg.adapt_mala && t <= cfg.burn_in && mi.attempted) {
      mala_step = std::exp(std::log(mala_step) + eta * (mi.alpha - cfg.mala_target));
      mala_step = std::min(std::max(mala_step, 1e-12), 1e12);
    }
    if (!cfg.fixed_phi && ri.attempted) {
      rwm_scale = std::exp(std::log(rwm_scale) + eta * (ri.alpha - cfg.rwm_target));
      rwm_scale = std::min(std::max(rwm_scale, 1e-12), 1e12);
    }

    if (t > cfg.burn_in) {
      ++kept;
      sum.theta_mean += theta;
      sum.theta_sq_mean += theta.cwiseProduct(theta);
      for (int j = 0; j < d; ++j) sum.inclusion[j] += delta[j];
      sum.avg_active += delta.sum();
      sum.q_mean += phi.q;
      sum.lambda1_mean += phi.lambda1;
      sum.lambda2_mean += phi.lambda2;
      if (!mask_hist.empty()) ++mask_hist[delta_mask(delta)];
      mala_att += mi.attempted;
      mala_acc += mi.accepted;
      ind_att += ii.attempted;
      ind_acc += ii.accepted;
      rwm_att += ri.attempted;
      rwm_acc += ri.accepted;
    }

    if (on_record && t % cfg.thin == 0) {
      TraceRecord r;
      r.iter = t;
      r.delta = delta_bitstring(delta);
      r.theta = theta;
      r.q = phi.q;
      r.lambda1 = phi.lambda1;
      r.lambda2 = phi.lambda2;
      r.log_target = chain_log_target(loss, ctx, phi, delta, theta);
      r.acc_mala = mi.attempted ? (mi.accepted ? 1 : 0) : -1;
      r.acc_ind = ii.attempted ? (ii.accepted ? 1 : 0) : -1;
      r.acc_rwm = ri.attempted ? (ri.accepted ? 1 : 0) : -1;
      on_record(r);
    }
  }

  if (kept > 0) {
    sum.theta_mean /= kept;
    sum.theta_sq_mean /= kept;
    sum.inclusion /= kept;
    sum.avg_active /= kept;
    sum.q_mean /= kept;
    sum.lambda1_mean /= kept;
    sum.lambda2_mean /= kept;
  } else {
    // zero sweeps: the summary echoes the initial state
    sum.theta_mean = theta;
    sum.theta_sq_mean = theta.cwiseProduct(theta);
    sum.inclusion = delta.cast<double>().matrix();
    sum.avg_active = delta.sum();
    sum.q_mean = phi.q;
    sum.lambda1_mean = phi.lambda1;
    sum.lambda2_mean = phi.lambda2;
  }
  if (!mask_hist.empty()) {
    sum.mask_freq.resize(mask_hist.size());
    for (std::size_t i = 0; i < mask_hist.size(); ++i)
      sum.mask_freq[i] = kept > 0 ? static_cast<double>(mask_hist[i]) / kept : 0.0;
  }
  sum.mala_rate = mala_att > 0 ? static_cast<double>(mala_acc) / mala_att : 0.0;
  sum.ind_rate = ind_att > 0 ? static_cast<double>(ind_acc) / ind_att : 0.0;
  sum.rwm_rate = rwm_att > 0 ? static_cast<double>(rwm_acc) / rwm_att : 0.0;
  sum.mala_step_final = mala_step;
  sum.rwm_scale_final = rwm_scale;
  sum.final_delta = delta;
  sum.final_theta = theta;
  sum.final_phi = phi;
  sum.draws_delta = rs_delta.cursor();
  sum.draws_mala = rs_mala.cursor();
  sum.draws_ind = rs_ind.cursor();
  sum.draws_q = rs_q.cursor();
  sum.draws_lambda = rs_lambda.cursor();
  sum.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sum;
}

}  // namespace slabprox
