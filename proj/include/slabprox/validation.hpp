#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "slabprox/envelope.hpp"
#include "slabprox/grid.hpp"
#include "slabprox/linmodel.hpp"
#include "slabprox/rng.hpp"

namespace slabprox {

enum class PosteriorKind { exact, my_approx, tilde };

// One delta-configuration slice of a quadrature posterior. `dims` lists the
// coordinates the grid spans (active ones for the exact posterior, all of
// them for the smoothed ones); empty dims is a point mass at the origin.
struct DeltaPanel {
  DeltaVec delta;
  double weight = 0.0;
  double log_mass = -std::numeric_limits<double>::infinity();
  std::vector<int> dims;
  TensorGrid grid;
  std::vector<double> density;
};

struct QuadraturePosterior {
  PosteriorKind kind = PosteriorKind::exact;
  int d = 0;
  double gamma = 0.0;
  double log_normalizer = 0.0;
  double weight_tol = 0.0;  // achieved shift of the delta weights at the last refinement
  std::vector<DeltaPanel> panels;

  std::vector<double> delta_marginal() const {
    std::vector<double> w(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i) w[i] = panels[i].weight;
    return w;
  }

  // integrates f(delta, theta) with theta embedded in R^d (zeros off-grid)
  double integrate(const std::function<double(const DeltaVec&, const Eigen::VectorXd&)>& f) const {
    double total = 0.0;
    Eigen::VectorXd theta(d);
    double pt[8];
    for (const auto& p : panels) {
      if (p.dims.empty()) {
        theta.setZero();
        total += p.weight * f(p.delta, theta);
        continue;
      }
      double acc = 0.0;
      const std::int64_t m = p.grid.size();
      for (std::int64_t i = 0; i < m; ++i) {
        p.grid.point(i, pt);
        theta.setZero();
        for (std::size_t k = 0; k < p.dims.size(); ++k) theta[p.dims[k]] = pt[k];
        acc += p.grid.weight(i) * p.density[i] * f(p.delta, theta);
      }
      total += p.weight * acc;
    }
    return total;
  }

  double mean_theta(int j) const {
    return integrate([j](const DeltaVec&, const Eigen::VectorXd& t) { return t[j]; });
  }
  double mean_theta_sq(int j) const {
    return integrate([j](const DeltaVec&, const Eigen::VectorXd& t) { return t[j] * t[j]; });
  }
};

struct QuadOptions {
  int force_n = 0;                  // 0 -> self-refining resolution
  int max_n = 0;                    // refinement cap; 0 -> by dimension
  double inactive_box_scale = 1.0;  // widens the grids on inactive coordinates
  std::optional<DeltaVec> fixed_delta;
};

namespace detail {

inline double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline DeltaVec delta_from_mask(std::uint32_t mask, int d) {
  DeltaVec delta(d);
  for (int j = 0; j < d; ++j) delta[j] = (mask >> j) & 1u;
  return delta;
}

struct PanelBox {
  std::vector<double> lo, hi;  // per coordinate in `dims` order
};

// Ridge pilot on the active block: center and spread used to place the grid.
inline PanelBox active_box(const Dataset& data, const HyperState& phi,
                           const std::vector<int>& act) {
  const int s = static_cast<int>(act.size());
  PanelBox box;
  if (s == 0) return box;
  Eigen::MatrixXd A(s, s);
  Eigen::VectorXd b(s);
  const double ridge = (1.0 - phi.alpha) * phi.lambda2 / data.sigma2;
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j)
      A(i, j) = data.X.col(act[i]).dot(data.X.col(act[j])) / data.sigma2;
    b[i] = data.X.col(act[i]).dot(data.z) / data.sigma2;
  }
  A.diagonal().array() += ridge + 1e-10 * (1.0 + A.trace());
  const Eigen::MatrixXd Ainv = A.inverse();
  const Eigen::VectorXd center = Ainv * b;
  const double l1 = phi.alpha * phi.lambda1 / data.sigma2;
  for (int i = 0; i < s; ++i) {
    const double sd = std::sqrt(std::max(Ainv(i, i), 1e-12));
    const double shift = l1 * Ainv.row(i).cwiseAbs().sum();
    const double w = 8.0 * sd + shift + 1e-6;
    box.lo.push_back(center[i] - w);
    box.hi.push_back(center[i] + w);
  }
  return box;
}

}  // namespace detail

// Dense quadrature rendering of the exact spike-and-slab posterior and its
// two smoothed companions, for d <= 3. Grids are placed by a ridge pilot fit,
// refined until the delta weights settle, and widened on mass leakage.
inline QuadraturePosterior quad_posterior(const Dataset& data, const HyperState& phi,
                                          double gamma, PosteriorKind kind,
                                          const QuadOptions& opts = {}) {
  validate_dataset(data);
  const int d = static_cast<int>(data.d());
  if (d > 3) throw std::invalid_argument("quad_posterior: d > 3 unsupported");
  if (kind != PosteriorKind::exact && !(gamma > 0.0))
    throw std::invalid_argument("quad_posterior: gamma required for the smoothed posteriors");

  const PriorSpec prior = slab_prior(phi, data.sigma2);
  const double logZ = log_slab_normalizer(phi, data.sigma2);
  const LinearLoss loss(data);
  const double lmax = lambda_max(data);
  EnvelopeContext ctx;
  if (kind == PosteriorKind::my_approx) {
    ctx = EnvelopeContext(gamma, 1.0, prior, logZ);
  }

  std::vector<std::uint32_t> masks;
  if (opts.fixed_delta) {
    std::uint32_t m = 0;
    for (int j = 0; j < d; ++j)
      if ((*opts.fixed_delta)[j] != 0) m |= (1u << j);
    masks.push_back(m);
  } else {
    for (std::uint32_t m = 0; m < (1u << d); ++m) masks.push_back(m);
  }

  const double log2pi = 1.83787706640934548356065947281;
  double inactive_halfwidth = 0.0;
  if (kind != PosteriorKind::exact) {
    const double damp = std::max(0.2, 1.0 - gamma * lmax / data.sigma2);
    inactive_halfwidth = 10.0 * std::sqrt(gamma / damp) * opts.inactive_box_scale;
  }

  // per-mask boxes, widened jointly on leakage
  std::vector<detail::PanelBox> boxes(masks.size());
  std::vector<std::vector<int>> dims_of(masks.size());
  for (std::size_t mi = 0; mi < masks.size(); ++mi) {
    std::vector<int> act;
    for (int j = 0; j < d; ++j)
      if ((masks[mi] >> j) & 1u) act.push_back(j);
    const detail::PanelBox abox = detail::active_box(data, phi, act);
    detail::PanelBox box;
    std::vector<int> dims;
    if (kind == PosteriorKind::exact) {
      dims = act;
      box = abox;
    } else {
      for (int j = 0; j < d; ++j) dims.push_back(j);
      box.lo.assign(d, 0.0);
      box.hi.assign(d, 0.0);
      int ai = 0;
      for (int j = 0; j < d; ++j) {
        if ((masks[mi] >> j) & 1u) {
          box.lo[j] = abox.lo[ai] - inactive_halfwidth;
          box.hi[j] = abox.hi[ai] + inactive_halfwidth;
          ++ai;
        } else {
          box.lo[j] = -inactive_halfwidth;
          box.hi[j] = inactive_halfwidth;
        }
      }
    }
    boxes[mi] = std::move(box);
    dims_of[mi] = std::move(dims);
  }

  auto build_at = [&](int n, std::vector<DeltaPanel>& panels, double* max_leak) {
    panels.clear();
    panels.resize(masks.size());
    *max_leak = 0.0;
    Eigen::VectorXd theta(d), theta_act(d);
    double pt[8];
    for (std::size_t mi = 0; mi < masks.size(); ++mi) {
      DeltaPanel& panel = panels[mi];
      panel.delta = detail::delta_from_mask(masks[mi], d);
      panel.dims = dims_of[mi];
      const double s = panel.delta.sum();
      const double log_pd = opts.fixed_delta
                                ? 0.0
                                : s * std::log(phi.q) + (d - s) * std::log1p(-phi.q);
      if (panel.dims.empty()) {
        theta.setZero();
        panel.log_mass = log_pd - loss.value(theta);
        continue;
      }
      panel.grid.axes.clear();
      for (std::size_t k = 0; k < panel.dims.size(); ++k)
        panel.grid.axes.push_back(Grid1{boxes[mi].lo[k], boxes[mi].hi[k], n});
      const std::int64_t m = panel.grid.size();
      std::vector<double> logf(m);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int64_t i = 0; i < m; ++i) {
        panel.grid.point(i, pt);
        theta.setZero();
        for (std::size_t k = 0; k < panel.dims.size(); ++k) theta[panel.dims[k]] = pt[k];
        double v;
        switch (kind) {
          case PosteriorKind::exact: {
            double pen = s * logZ;
            for (std::size_t k = 0; k < panel.dims.size(); ++k)
              pen += neg_log_prior(prior, pt[k]);
            v = -(loss.value(theta) + pen);
            break;
          }
          case PosteriorKind::my_approx:
            v = -fb_envelope(ctx, loss, theta, panel.delta);
            break;
          case PosteriorKind::tilde: {
            theta_act.setZero();
            double quad = 0.0, pen = s * logZ;
            for (int j = 0; j < d; ++j) {
              if (panel.delta[j] != 0) {
                theta_act[j] = theta[j];
                pen += neg_log_prior(prior, theta[j]);
              } else {
                quad += theta[j] * theta[j];
              }
            }
            v = -(quad / (2.0 * gamma) + loss.value(theta_act) + pen);
            break;
          }
        }
        logf[i] = v;
        mx = std::max(mx, v);
      }
      double total = 0.0, boundary = 0.0;
      for (std::int64_t i = 0; i < m; ++i) {
        const double c = panel.grid.weight(i) * std::exp(logf[i] - mx);
        total += c;
        if (panel.grid.on_boundary(i)) boundary += c;
      }
      *max_leak = std::max(*max_leak, boundary / total);
      panel.log_mass = log_pd + mx + std::log(total);
      if (kind == PosteriorKind::my_approx) panel.log_mass += 0.5 * s * log2pi + 0.5 * s * std::log(gamma);
      if (kind == PosteriorKind::tilde) panel.log_mass -= 0.5 * (d - s) * (log2pi + std::log(gamma));
      const double log_total = mx + std::log(total);
      for (std::int64_t i = 0; i < m; ++i) logf[i] = std::exp(logf[i] - log_total);
      panel.density = std::move(logf);
    }
  };

  auto weights_from_masses = [](std::vector<DeltaPanel>& panels) {
    std::vector<double> lm(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i) lm[i] = panels[i].log_mass;
    const double lse = detail::logsumexp(lm);
    for (auto& p : panels) p.weight = std::exp(p.log_mass - lse);
    return lse;
  };

  QuadraturePosterior out;
  out.kind = kind;
  out.d = d;
  out.gamma = (kind == PosteriorKind::exact) ? 0.0 : gamma;

  // Refinement doubles the resolution until the delta weights settle; grid
  // kinks from the shrinkage map leave a small noise floor, so past the cap a
  // looser shift is accepted and recorded in weight_tol. Leakage widens the
  // boxes instead. The 3-D cap is a time and memory bound: full-dimension
  // kinds keep 2^d panels of cap^3 doubles alive and evaluate each point.
  const int default_caps[4] = {0, 4097, 1025, 257};
  const int cap = opts.force_n > 0 ? opts.force_n
                                   : (opts.max_n > 0 ? opts.max_n : default_caps[d]);
  for (int widen = 0;; ++widen) {
    double leak = 0.0;
    bool converged = false;
    double last_tv = std::numeric_limits<double>::infinity();
    std::vector<double> prev_w;
    for (int n = opts.force_n > 0 ? opts.force_n : 65;;) {
      build_at(n, out.panels, &leak);
      if (leak > 1e-4) break;  // widen instead of refining
      out.log_normalizer = weights_from_masses(out.panels);
      if (opts.force_n > 0) { converged = true; last_tv = 0.0; break; }
      if (!prev_w.empty()) {
        last_tv = 0.0;
        for (std::size_t i = 0; i < out.panels.size(); ++i)
          last_tv += std::abs(out.panels[i].weight - prev_w[i]);
        if (last_tv < 1e-6) { converged = true; break; }
      }
      if (n >= cap) break;
      prev_w = out.delta_marginal();
      n = std::min(2 * n - 1, cap);  // last step lands on the cap, kept odd
    }
    if (leak <= 1e-4) {
      if (!converged && last_tv >= 1e-3)
        throw std::runtime_error("quad_posterior: delta weights failed to settle");
      out.weight_tol = converged ? std::min(last_tv, 1e-6) : last_tv;
      break;
    }
    if (widen >= 8)
      throw std::runtime_error("quad_posterior: grid mass leakage above 1e-4; bounds too narrow");
    for (auto& box : boxes) {
      for (std::size_t k = 0; k < box.lo.size(); ++k) {
        const double c = 0.5 * (box.lo[k] + box.hi[k]);
        const double w = 0.5 * (box.hi[k] - box.lo[k]) * 1.6;
        box.lo[k] = c - w;
        box.hi[k] = c + w;
      }
    }
  }
  return out;
}

// Slack term of the envelope sandwich:
//   <grad l(theta) - grad l(theta_delta), theta - theta_delta>
//     + gamma/2 || delta.(grad l(theta) + g(theta_delta|delta)) ||^2
// with g the elastic-net subgradient (sign(0) = 0 convention).
inline double r_gamma(const Dataset& data, const PriorSpec& prior, double gamma,
                      const DeltaVec& delta, const Eigen::VectorXd& theta) {
  if (prior.kind != PriorKind::elastic_net && prior.kind != PriorKind::laplace)
    throw std::invalid_argument("r_gamma: subgradient form requires elastic net or laplace");
  const double a = prior.kind == PriorKind::elastic_net ? prior.alpha * prior.lambda1 / prior.sigma2
                                                        : prior.lambda;
  const double b = prior.kind == PriorKind::elastic_net
                       ? (1.0 - prior.alpha) * prior.lambda2 / prior.sigma2
                       : 0.0;
  Eigen::VectorXd theta_delta = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (delta[j] == 0) theta_delta[j] = 0.0;
  const Eigen::VectorXd g1 = grad_neg_log_lik(data, theta);
  const Eigen::VectorXd g2 = grad_neg_log_lik(data, theta_delta);
  double quad = (g1 - g2).dot(theta - theta_delta);
  double nrm = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (delta[j] == 0) continue;
    const double td = theta_delta[j];
    const double sub = a * (td > 0.0 ? 1.0 : (td < 0.0 ? -1.0 : 0.0)) + b * td;
    const double t = g1[j] + sub;
    nrm += t * t;
  }
  return quad + 0.5 * gamma * nrm;
}

struct VarrhoEstimate {
  double value = 0.0;
  double stderr_est = 0.0;
};

// log integral of exp(r_gamma) under the intermediate posterior, by grid
// quadrature at two resolutions; the resolution delta doubles as the error
// estimate. Inactive boxes are widened because exp(r) fattens those tails.
inline VarrhoEstimate varrho_gamma_estimate(const Dataset& data, const HyperState& phi,
                                            double gamma) {
  const double lmax = lambda_max(data);
  const double gl = gamma * lmax / data.sigma2;
  const double damp = std::max(0.15, 1.0 - 2.0 * gl * (1.0 + 1.5 * gl));
  QuadOptions opts;
  opts.inactive_box_scale = 1.0 / std::sqrt(damp);
  const PriorSpec prior = slab_prior(phi, data.sigma2);

  auto estimate = [&](int n) {
    opts.force_n = n;
    const QuadraturePosterior tilde = quad_posterior(data, phi, gamma, PosteriorKind::tilde, opts);
    double total = 0.0;
    Eigen::VectorXd theta(tilde.d);
    double pt[8];
    for (const auto& p : tilde.panels) {
      double acc = 0.0;
      const std::int64_t m = p.grid.size();
      for (std::int64_t i = 0; i < m; ++i) {
        p.grid.point(i, pt);
        for (std::size_t k = 0; k < p.dims.size(); ++k) theta[p.dims[k]] = pt[k];
        acc += p.grid.weight(i) * p.density[i] *
               std::exp(r_gamma(data, prior, gamma, p.delta, theta));
      }
      total += p.weight * acc;
    }
    return std::log(total);
  };

  const double v1 = estimate(65);
  const double v2 = estimate(129);
  return {v2, std::abs(v2 - v1)};
}

struct TheoremBoundInputs {
  double L1 = 0.0;    // gradient Lipschitz constant of the loss
  double L2 = 0.0;    // curvature constant in the remainder bound
  double max_c = 0.0; // max over delta of (alpha lambda1 / sigma^2)^2 ||delta||_0
  double R = 0.0;     // bound on max_delta inf h(.|delta)
};

inline TheoremBoundInputs make_bound_inputs(const Dataset& data, const HyperState& phi,
                                            double lmax = 0.0) {
  if (lmax <= 0.0) lmax = lambda_max(data);
  TheoremBoundInputs in;
  in.L1 = lmax / data.sigma2;
  in.L2 = lmax / data.sigma2;
  const double a = phi.alpha * phi.lambda1 / data.sigma2;
  const double d = static_cast<double>(data.d());
  in.max_c = a * a * d;
  const double logZ = log_slab_normalizer(phi, data.sigma2);
  in.R = data.z.squaredNorm() / (2.0 * data.sigma2) + std::max(0.0, d * logZ);
  return in;
}

inline double thm2_bound(const TheoremBoundInputs& in, double gamma, int d) {
  if (4.0 * gamma * std::max(in.L1, in.L2) > 1.0 + 1e-12)
    throw std::invalid_argument("thm2_bound: step condition 4 gamma max(L1,L2) <= 1 violated");
  return 3.0 * gamma * (0.5 * in.max_c + d * (in.L1 + 2.0 * in.L2) + in.L2 * in.R);
}

inline double cor1_bound(const Dataset& data, const HyperState& phi, double gamma,
                         double lmax = 0.0) {
  if (lmax <= 0.0) lmax = lambda_max(data);
  if (4.0 * gamma * lmax / data.sigma2 > 1.0 + 1e-12)
    throw std::invalid_argument("cor1_bound: step rule 4 gamma lambda_max / sigma^2 <= 1 violated");
  const double a = phi.alpha * phi.lambda1 / data.sigma2;
  const double d = static_cast<double>(data.d());
  return 1.5 * gamma * a * a * d +
         3.0 * (gamma / data.sigma2) * lmax * (3.0 * d + data.z.squaredNorm() / (2.0 * data.sigma2));
}

inline double beta_metric_bound(double gamma, int d, double varrho_hat) {
  if (varrho_hat < 0.0) throw std::invalid_argument("beta_metric_bound: negative varrho");
  return std::sqrt(gamma * d) + 2.0 * (1.0 - std::exp(-varrho_hat));
}

namespace detail {

// per-coordinate marginal of one panel, Simpson weights folded in
struct Marginal1 {
  bool atom = false;  // point mass at zero
  Grid1 axis;
  std::vector<double> mass;  // sums to ~1
};

inline std::vector<Marginal1> panel_marginals(const DeltaPanel& p, int d) {
  std::vector<Marginal1> out(d);
  for (int j = 0; j < d; ++j) out[j].atom = true;
  if (p.dims.empty()) return out;
  for (std::size_t k = 0; k < p.dims.size(); ++k) {
    out[p.dims[k]].atom = false;
    out[p.dims[k]].axis = p.grid.axes[k];
    out[p.dims[k]].mass.assign(p.grid.axes[k].n, 0.0);
  }
  const std::int64_t m = p.grid.size();
  int sub[8];
  for (std::int64_t i = 0; i < m; ++i) {
    p.grid.decode(i, sub);
    const double c = p.grid.weight(i) * p.density[i];
    for (std::size_t k = 0; k < p.dims.size(); ++k) out[p.dims[k]].mass[sub[k]] += c;
  }
  return out;
}

}  // namespace detail

// Lower estimate of the bounded-Lipschitz distance between two quadrature
// posteriors: best separation over a family of functions with BL norm <= 1
// (coordinate clamps at several widths and shifts, tents, delta indicators).
inline double beta_metric_empirical(const QuadraturePosterior& a, const QuadraturePosterior& b) {
  if (a.d != b.d) throw std::invalid_argument("beta_metric_empirical: dimension mismatch");
  const int d = a.d;

  std::vector<std::vector<detail::Marginal1>> ma, mb;
  for (const auto& p : a.panels) ma.push_back(detail::panel_marginals(p, d));
  for (const auto& p : b.panels) mb.push_back(detail::panel_marginals(p, d));

  auto integrate_coord = [&](const QuadraturePosterior& q,
                             const std::vector<std::vector<detail::Marginal1>>& marg, int j,
                             const std::function<double(double)>& f) {
    double total = 0.0;
    for (std::size_t pi = 0; pi < q.panels.size(); ++pi) {
      const auto& m1 = marg[pi][j];
      double acc = 0.0;
      if (m1.atom) {
        acc = f(0.0);
      } else {
        for (int i = 0; i < m1.axis.n; ++i) acc += m1.mass[i] * f(m1.axis.point(i));
      }
      total += q.panels[pi].weight * acc;
    }
    return total;
  };

  double best = 0.0;

  // delta indicators: |f| = 1/2, Lipschitz 1/2 on the product metric
  for (int j = 0; j < d; ++j) {
    double wa = 0.0, wb = 0.0;
    for (const auto& p : a.panels)
      if (p.delta[j] != 0) wa += p.weight;
    for (const auto& p : b.panels)
      if (p.delta[j] != 0) wb += p.weight;
    best = std::max(best, 0.5 * std::abs(wa - wb));
  }

  // coordinate clamps and tents: c = s/(1+s) keeps sup + Lipschitz <= 1
  const double g = std::max(a.gamma, b.gamma);
  for (int j = 0; j < d; ++j) {
    const double mean_a = a.mean_theta(j);
    const double sd = std::sqrt(std::max(a.mean_theta_sq(j) - mean_a * mean_a, 0.0));
    std::vector<double> widths = {1.0, 0.25};
    if (sd > 1e-8) widths.push_back(sd);
    if (g > 0.0) widths.push_back(2.0 * std::sqrt(g));
    for (double s : widths) {
      const double c = s / (1.0 + s);
      for (double tmul : {0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0}) {
        const double t = mean_a + tmul * s;
        auto clamp_f = [&](double x) { return c * std::clamp((x - t) / s, -1.0, 1.0); };
        best = std::max(best, std::abs(integrate_coord(a, ma, j, clamp_f) -
                                       integrate_coord(b, mb, j, clamp_f)));
      }
      auto tent_f = [&](double x) { return c * std::max(0.0, 1.0 - std::abs(x) / s); };
      best = std::max(best, std::abs(integrate_coord(a, ma, j, tent_f) -
                                     integrate_coord(b, mb, j, tent_f)));
    }
  }
  return best;
}

// Total variation with the sup_{|f|<=1} normalization (range [0,2]); panels
// with mismatched support structure are mutually singular.
inline double tv_distance(const QuadraturePosterior& a, const QuadraturePosterior& b) {
  if (a.d != b.d) throw std::invalid_argument("tv_distance: dimension mismatch");
  auto mask_of = [](const DeltaPanel& p) {
    std::uint32_t m = 0;
    for (Eigen::Index j = 0; j < p.delta.size(); ++j)
      if (p.delta[j] != 0) m |= (1u << j);
    return m;
  };
  std::vector<const DeltaPanel*> pa(1u << a.d, nullptr), pb(1u << a.d, nullptr);
  for (const auto& p : a.panels) pa[mask_of(p)] = &p;
  for (const auto& p : b.panels) pb[mask_of(p)] = &p;

  double tv = 0.0;
  for (std::uint32_t m = 0; m < pa.size(); ++m) {
    const DeltaPanel* x = pa[m];
    const DeltaPanel* y = pb[m];
    const double wx = x ? x->weight : 0.0;
    const double wy = y ? y->weight : 0.0;
    if (!x || !y) { tv += wx + wy; continue; }
    if (x->dims.empty() && y->dims.empty()) { tv += std::abs(wx - wy); continue; }
    if (x->dims != y->dims) { tv += wx + wy; continue; }
    bool same_grid = true;
    for (std::size_t k = 0; k < x->grid.axes.size(); ++k) {
      const auto& ga = x->grid.axes[k];
      const auto& gb = y->grid.axes[k];
      if (ga.n != gb.n || std::abs(ga.lo - gb.lo) > 1e-12 * (1.0 + std::abs(ga.lo)) ||
          std::abs(ga.hi - gb.hi) > 1e-12 * (1.0 + std::abs(ga.hi)))
        same_grid = false;
    }
    if (!same_grid) throw std::invalid_argument("tv_distance: mismatched grids for shared support");
    double acc = 0.0;
    const std::int64_t n = x->grid.size();
    for (std::int64_t i = 0; i < n; ++i)
      acc += x->grid.weight(i) * std::abs(wx * x->density[i] - wy * y->density[i]);
    tv += acc;
  }
  return tv;
}

inline double tv_discrete(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_discrete: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s;
}

inline double wasserstein1_to_point(const std::vector<double>& samples, double point) {
  if (samples.empty()) throw std::invalid_argument("wasserstein1_to_point: empty sample");
  double s = 0.0;
  for (double x : samples) s += std::abs(x - point);
  return s / static_cast<double>(samples.size());
}

struct Example1Row {
  double gamma = 0.0;
  double analytic = 0.0;     // sqrt(2 gamma / pi)
  double quadrature = 0.0;   // E|x| under N(0, gamma) on a grid
  double sampled = 0.0;
  double sample_se = 0.0;
  double fb_max_err = 0.0;   // max |envelope - x^2/(2 gamma)| on a grid
  double tv = 0.0;           // total variation to the point mass (always 2)
};

// Degenerate-prior check: with a flat loss and delta = 0 the smoothed
// posterior is N(0, gamma) while the exact one is the point mass at zero.
inline std::vector<Example1Row> example1_suite(const std::vector<double>& gammas,
                                               long nsamples, std::uint64_t seed) {
  std::vector<Example1Row> rows;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    const double gamma = gammas[gi];
    Example1Row row;
    row.gamma = gamma;
    row.analytic = std::sqrt(2.0 * gamma / 3.14159265358979323846264338);

    // E|x|: integrand 2 x pdf(x) on [0, 10 sd], smooth there
    const double sd = std::sqrt(gamma);
    const Grid1 half{0.0, 10.0 * sd, 513};
    double q = 0.0;
    for (int i = 0; i < half.n; ++i) {
      const double x = half.point(i);
      q += half.weight(i) * 2.0 * x *
           std::exp(-x * x / (2.0 * gamma)) / std::sqrt(2.0 * 3.14159265358979323846264338 * gamma);
    }
    row.quadrature = q;

    RngStream rng = RngStream::substream(seed, 100 + gi);
    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < nsamples; ++i) {
      const double x = std::abs(sd * rng.normal());
      sum += x;
      sumsq += x * x;
    }
    row.sampled = sum / nsamples;
    const double var = std::max(sumsq / nsamples - row.sampled * row.sampled, 0.0);
    row.sample_se = std::sqrt(var / nsamples);

    const EnvelopeContext ctx(gamma, 1.0, PriorSpec::laplace(1.0), 0.0);
    const SmoothLoss flat = zero_loss(1);
    DeltaVec none(1);
    none[0] = 0;
    double max_err = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double x = -5.0 + 10.0 * i / 200.0;
      Eigen::VectorXd t(1);
      t[0] = x;
      max_err = std::max(max_err, std::abs(fb_envelope(ctx, flat, t, none) - x * x / (2.0 * gamma)));
    }
    row.fb_max_err = max_err;

    // point mass vs N(0, gamma): mutually singular
    QuadraturePosterior atom, gauss;
    atom.d = gauss.d = 1;
    gauss.gamma = gamma;
    DeltaPanel pa;
    pa.delta = none;
    pa.weight = 1.0;
    atom.panels.push_back(pa);
    DeltaPanel pg;
    pg.delta = none;
    pg.weight = 1.0;
    pg.dims = {0};
    pg.grid.axes = {Grid1{-10.0 * sd, 10.0 * sd, 257}};
    pg.density.resize(pg.grid.size());
    for (std::int64_t i = 0; i < pg.grid.size(); ++i) {
      double x;
      pg.grid.point(i, &x);
      pg.density[i] = std::exp(-x * x / (2.0 * gamma)) /
                      std::sqrt(2.0 * 3.14159265358979323846264338 * gamma);
    }
    gauss.panels.push_back(pg);
    row.tv = tv_distance(atom, gauss);

    rows.push_back(row);
  }
  return rows;
}

}  // namespace slabprox
