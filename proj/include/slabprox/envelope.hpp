#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "slabprox/linmodel.hpp"
#include "slabprox/prox.hpp"

namespace slabprox {

// Type-erased smooth loss; any object with the same three members works in
// the templated envelope routines below.
struct SmoothLoss {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> hessian_apply;
};

inline SmoothLoss zero_loss(Eigen::Index d) {
  SmoothLoss l;
  l.value = [](const Eigen::VectorXd&) { return 0.0; };
  l.gradient = [d](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(d).eval(); };
  l.hessian_apply = [d](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(d).eval();
  };
  return l;
}

inline SmoothLoss linear_model_loss(Dataset data) {
  auto holder = std::make_shared<Dataset>(std::move(data));
  SmoothLoss l;
  l.value = [holder](const Eigen::VectorXd& t) { return neg_log_lik(*holder, t); };
  l.gradient = [holder](const Eigen::VectorXd& t) { return grad_neg_log_lik(*holder, t).eval(); };
  l.hessian_apply = [holder](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
    return (holder->X.transpose() * (holder->X * v) / holder->sigma2).eval();
  };
  return l;
}

// Gram-form linear loss; same values as linear_model_loss but O(d^2) per
// evaluation after the one-off X'X, which is what the sampler loops want.
class LinearLoss {
 public:
  explicit LinearLoss(const Dataset& data)
      : sigma2_(data.sigma2),
        G_(data.X.transpose() * data.X),
        Xtz_(data.X.transpose() * data.z),
        zz_(data.z.squaredNorm()) {}

  double value(const Eigen::VectorXd& t) const {
    return (t.dot(G_ * t) - 2.0 * t.dot(Xtz_) + zz_) / (2.0 * sigma2_);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& t) const {
    return (G_ * t - Xtz_) / sigma2_;
  }
  Eigen::VectorXd hessian_apply(const Eigen::VectorXd&, const Eigen::VectorXd& v) const {
    return G_ * v / sigma2_;
  }

  const Eigen::MatrixXd& gram() const { return G_; }
  const Eigen::VectorXd& xtz() const { return Xtz_; }
  double sigma2() const { return sigma2_; }

 private:
  double sigma2_;
  Eigen::MatrixXd G_;
  Eigen::VectorXd Xtz_;
  double zz_;
};

namespace detail {
template <typename Loss>
double loss_value(const Loss& l, const Eigen::VectorXd& t) { return l.value(t); }
template <typename Loss>
Eigen::VectorXd loss_grad(const Loss& l, const Eigen::VectorXd& t) { return l.gradient(t); }
template <typename Loss>
Eigen::VectorXd loss_happly(const Loss& l, const Eigen::VectorXd& t, const Eigen::VectorXd& v) {
  return l.hessian_apply(t, v);
}
}  // namespace detail

// Smoothing context: step gamma, drift cap c, slab prior, and the
// per-active-coordinate normalizer constant folded into the penalty so the
// same P(.|delta) appears in the envelope, the targets and the quadrature.
struct EnvelopeContext {
  double gamma = 0.1;
  double drift_cap = 10.0;
  PriorSpec prior;
  double log_normalizer = 0.0;
  double lambda_max = std::numeric_limits<double>::quiet_NaN();

  EnvelopeContext() = default;
  EnvelopeContext(double g, double cap, PriorSpec p, double log_norm = 0.0)
      : gamma(g), drift_cap(cap), prior(std::move(p)), log_normalizer(log_norm) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("envelope: gamma must be > 0");
    if (!(drift_cap > 0.0)) throw std::invalid_argument("envelope: drift cap must be > 0");
  }
};

inline double default_drift_cap(Eigen::Index d, double lambda1, double sigma2) {
  return 10.0 * std::sqrt(static_cast<double>(d)) * lambda1 / sigma2;
}

// Context wired to a dataset: gamma from the step rule, elastic-net slab from
// phi, slab normalizer included, spectral norm cached.
inline EnvelopeContext make_context(const Dataset& data, const HyperState& phi,
                                    double gamma0, double lmax = 0.0) {
  if (lmax <= 0.0) lmax = lambda_max(data);
  EnvelopeContext ctx(gamma_from_rule(lmax, data.sigma2, gamma0),
                      default_drift_cap(data.d(), phi.lambda1, data.sigma2),
                      slab_prior(phi, data.sigma2),
                      log_slab_normalizer(phi, data.sigma2));
  ctx.lambda_max = lmax;
  return ctx;
}

// P(v | delta): kernel over active coordinates plus the per-coordinate
// normalizer; v is expected to live in the delta-subspace already.
inline double penalty_value(const EnvelopeContext& ctx, const Eigen::VectorXd& v,
                            const DeltaVec& delta) {
  double s = 0.0;
  double count = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (delta[j] != 0) {
      s += neg_log_prior(ctx.prior, v[j]);
      count += 1.0;
    }
  }
  return s + count * ctx.log_normalizer;
}

template <typename Loss>
Eigen::VectorXd j_map(const EnvelopeContext& ctx, const Loss& loss,
                      const Eigen::VectorXd& theta, const DeltaVec& delta) {
  const Eigen::VectorXd m = theta - ctx.gamma * detail::loss_grad(loss, theta);
  return prox_restricted(ctx.prior, ctx.gamma, m, delta);
}

// Forward-backward envelope, linearized form:
//   l(theta) + <grad l, J - theta> + P(J|delta) + ||J - theta||^2 / (2 gamma)
template <typename Loss>
double fb_envelope(const EnvelopeContext& ctx, const Loss& loss,
                   const Eigen::VectorXd& theta, const DeltaVec& delta) {
  if (!theta.allFinite()) throw std::invalid_argument("fb_envelope: non-finite point");
  const Eigen::VectorXd g = detail::loss_grad(loss, theta);
  const Eigen::VectorXd m = theta - ctx.gamma * g;
  const Eigen::VectorXd J = prox_restricted(ctx.prior, ctx.gamma, m, delta);
  const Eigen::VectorXd diff = J - theta;
  return detail::loss_value(loss, theta) + g.dot(diff) + penalty_value(ctx, J, delta) +
         diff.squaredNorm() / (2.0 * ctx.gamma);
}

// Same quantity through the gradient-step Moreau form:
//   l(theta) - gamma/2 ||grad l||^2 + P_gamma(theta - gamma grad l | delta)
template <typename Loss>
double fb_envelope_gradstep(const EnvelopeContext& ctx, const Loss& loss,
                            const Eigen::VectorXd& theta, const DeltaVec& delta) {
  const Eigen::VectorXd g = detail::loss_grad(loss, theta);
  const Eigen::VectorXd m = theta - ctx.gamma * g;
  const Eigen::VectorXd J = prox_restricted(ctx.prior, ctx.gamma, m, delta);
  const Eigen::VectorXd diff = J - m;
  return detail::loss_value(loss, theta) - 0.5 * ctx.gamma * g.squaredNorm() +
         penalty_value(ctx, J, delta) + diff.squaredNorm() / (2.0 * ctx.gamma);
}

// Surrogate with the plain prox in place of the gradient-step prox; as a
// function of the inactive block it is an explicit Gaussian, which is what
// the independence proposal samples from.
template <typename Loss>
double prox_envelope(const EnvelopeContext& ctx, const Loss& loss,
                     const Eigen::VectorXd& theta, const DeltaVec& delta) {
  const Eigen::VectorXd P = prox_restricted(ctx.prior, ctx.gamma, theta, delta);
  const Eigen::VectorXd diff = P - theta;
  return detail::loss_value(loss, theta) + detail::loss_grad(loss, theta).dot(diff) +
         penalty_value(ctx, P, delta) + diff.squaredNorm() / (2.0 * ctx.gamma);
}

template <typename Loss>
Eigen::VectorXd g_drift(const EnvelopeContext& ctx, const Loss& loss,
                        const Eigen::VectorXd& theta, const DeltaVec& delta) {
  return (theta - j_map(ctx, loss, theta, delta)) / ctx.gamma;
}

inline Eigen::VectorXd cap_drift(const Eigen::VectorXd& g, double cap) {
  const double n = g.norm();
  return (cap / std::max(cap, n)) * g;
}

template <typename Loss>
Eigen::VectorXd g_drift_capped(const EnvelopeContext& ctx, const Loss& loss,
                               const Eigen::VectorXd& theta, const DeltaVec& delta) {
  return cap_drift(g_drift(ctx, loss, theta, delta), ctx.drift_cap);
}

// Exact gradient (I - gamma hess l(theta))' (theta - J) / gamma; hessians of
// the losses here are symmetric, so hessian_apply stands in for the transpose.
template <typename Loss>
Eigen::VectorXd grad_fb_exact(const EnvelopeContext& ctx, const Loss& loss,
                              const Eigen::VectorXd& theta, const DeltaVec& delta) {
  const Eigen::VectorXd G = g_drift(ctx, loss, theta, delta);
  return G - ctx.gamma * detail::loss_happly(loss, theta, G);
}

namespace detail {

template <typename F>
double line_min(F&& f, double center, double width_hint, double* arg_out) {
  double w = std::max(width_hint, 1e-3);
  for (int round = 0; round < 10; ++round) {
    const int n = 2048;
    const double lo = center - w, hi = center + w;
    const double h = (hi - lo) / n;
    int best = -1;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      const double v = f(lo + i * h);
      if (std::isnan(v)) throw std::runtime_error("moreau_env_oracle: NaN objective");
      if (v < best_val) { best_val = v; best = i; }
    }
    if (best <= 1 || best >= n - 1) {
      w *= 2.0;
      continue;
    }
    const double a = lo + (best - 1) * h, b = lo + (best + 1) * h;
    const double u = golden_section(f, a, b, 1e-13 * (1.0 + std::abs(center)));
    if (arg_out) *arg_out = u;
    return f(u);
  }
  throw std::runtime_error("moreau_env_oracle: bracket expansion failed");
}

}  // namespace detail

// Reference Moreau envelope min_u h(u) + ||u - x||^2/(2 gamma) over the
// delta-subspace, by scan + golden section (1 free coordinate) or alternating
// line minimization with multi-start (2 free coordinates). Slow and simple;
// exists to cross-check fb_envelope, never used in sampling.
inline double moreau_env_oracle(double gamma,
                                const std::function<double(const Eigen::VectorXd&)>& h,
                                const Eigen::VectorXd& x, const DeltaVec& delta) {
  if (!(gamma > 0.0)) throw std::invalid_argument("moreau_env_oracle: gamma must be > 0");
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < delta.size(); ++j)
    if (delta[j] != 0) active.push_back(j);
  if (active.size() > 2) throw std::invalid_argument("moreau_env_oracle: more than 2 free coordinates");

  Eigen::VectorXd u = Eigen::VectorXd::Zero(x.size());
  auto obj = [&](const Eigen::VectorXd& uu) {
    return h(uu) + (uu - x).squaredNorm() / (2.0 * gamma);
  };

  if (active.empty()) return obj(u);

  if (active.size() == 1) {
    const Eigen::Index j = active[0];
    auto f1 = [&](double t) {
      Eigen::VectorXd uu = u;
      uu[j] = t;
      return obj(uu);
    };
    return detail::line_min(f1, x[j], 2.0 * (1.0 + std::abs(x[j])) + 4.0 * std::sqrt(gamma), nullptr);
  }

  // two free coordinates: zooming grid refinement; each round scans a 65x65
  // box around the incumbent and shrinks it, expanding instead whenever the
  // minimum lands on the boundary
  const Eigen::Index j0 = active[0], j1 = active[1];
  double c0 = x[j0], c1 = x[j1];
  double w0 = 2.0 * (1.0 + std::abs(x[j0])) + 4.0 * std::sqrt(gamma);
  double w1 = 2.0 * (1.0 + std::abs(x[j1])) + 4.0 * std::sqrt(gamma);
  const int n = 64;
  double best = std::numeric_limits<double>::infinity();
  int expansions = 0;
  for (int round = 0; round < 16;) {
    int b0 = -1, b1 = -1;
    double round_best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd uu = Eigen::VectorXd::Zero(x.size());
    for (int i0 = 0; i0 <= n; ++i0) {
      uu[j0] = c0 - w0 + 2.0 * w0 * i0 / n;
      for (int i1 = 0; i1 <= n; ++i1) {
        uu[j1] = c1 - w1 + 2.0 * w1 * i1 / n;
        const double v = obj(uu);
        if (std::isnan(v)) throw std::runtime_error("moreau_env_oracle: NaN objective");
        if (v < round_best) { round_best = v; b0 = i0; b1 = i1; }
      }
    }
    if (b0 <= 1 || b0 >= n - 1 || b1 <= 1 || b1 >= n - 1) {
      if (++expansions > 12) throw std::runtime_error("moreau_env_oracle: bracket expansion failed");
      w0 *= 2.0;
      w1 *= 2.0;
      continue;
    }
    best = std::min(best, round_best);
    c0 = c0 - w0 + 2.0 * w0 * b0 / n;
    c1 = c1 - w1 + 2.0 * w1 * b1 / n;
    w0 *= 5.0 / n;
    w1 *= 5.0 / n;
    ++round;
    if (w0 <= 1e-9 * (1.0 + std::abs(c0)) && w1 <= 1e-9 * (1.0 + std::abs(c1))) break;
  }
  return best;
}

}  // namespace slabprox
