#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace slabprox {

using DeltaVec = Eigen::ArrayXi;

enum class PriorKind { elastic_net, laplace, gen_double_pareto, mcp };

// Scalar prior family for the slab. Parameters are stored flat; which ones
// are live depends on `kind`. The negative log density is kept unnormalized
// (kernel value 0 at the origin); per-coordinate normalizers are added by the
// envelope / posterior code where they matter.
struct PriorSpec {
  PriorKind kind = PriorKind::laplace;

  // elastic net: alpha * l1 * |x| / s2 + (1-alpha) * l2 * x^2 / (2 s2)
  double alpha = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double sigma2 = 1.0;

  // laplace rate, gdp/mcp: lambda with extra shape parameter
  double lambda = 1.0;
  double shape = 1.0;

  static PriorSpec elastic_net(double alpha, double l1, double l2, double s2) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("elastic_net: alpha outside [0,1]");
    if (!(l1 > 0.0) || !std::isfinite(l1)) throw std::invalid_argument("elastic_net: lambda1 must be > 0");
    if (!(l2 > 0.0) || !std::isfinite(l2)) throw std::invalid_argument("elastic_net: lambda2 must be > 0");
    if (!(s2 > 0.0) || !std::isfinite(s2)) throw std::invalid_argument("elastic_net: sigma2 must be > 0");
    PriorSpec p;
    p.kind = PriorKind::elastic_net;
    p.alpha = alpha;
    p.lambda1 = l1;
    p.lambda2 = l2;
    p.sigma2 = s2;
    return p;
  }

  static PriorSpec laplace(double lam) {
    if (!(lam > 0.0) || !std::isfinite(lam)) throw std::invalid_argument("laplace: lambda must be > 0");
    PriorSpec p;
    p.kind = PriorKind::laplace;
    p.lambda = lam;
    return p;
  }

  static PriorSpec gen_double_pareto(double shape, double lam) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw std::invalid_argument("gdp: shape must be > 0");
    if (!(lam > 0.0) || !std::isfinite(lam)) throw std::invalid_argument("gdp: lambda must be > 0");
    PriorSpec p;
    p.kind = PriorKind::gen_double_pareto;
    p.shape = shape;
    p.lambda = lam;
    return p;
  }

  static PriorSpec mcp(double shape, double lam) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw std::invalid_argument("mcp: shape must be > 0");
    if (!(lam > 0.0) || !std::isfinite(lam)) throw std::invalid_argument("mcp: lambda must be > 0");
    PriorSpec p;
    p.kind = PriorKind::mcp;
    p.shape = shape;
    p.lambda = lam;
    return p;
  }

  // elastic net and laplace kernels are convex; gdp is concave away from the
  // origin (heavy tails) and mcp flattens out, so neither is convex
  bool convex() const {
    return kind == PriorKind::elastic_net || kind == PriorKind::laplace;
  }

  // right derivative of the kernel at 0
  double slope_at_zero() const {
    switch (kind) {
      case PriorKind::elastic_net: return alpha * lambda1 / sigma2;
      case PriorKind::laplace: return lambda;
      case PriorKind::gen_double_pareto: return (shape + 1.0) / (shape * lambda);
      case PriorKind::mcp: return lambda;
    }
    return 0.0;
  }
};

inline double neg_log_prior(const PriorSpec& p, double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("neg_log_prior: non-finite input");
  const double a = std::abs(x);
  switch (p.kind) {
    case PriorKind::elastic_net:
      return p.alpha * p.lambda1 * a / p.sigma2 +
             (1.0 - p.alpha) * p.lambda2 * x * x / (2.0 * p.sigma2);
    case PriorKind::laplace:
      return p.lambda * a;
    case PriorKind::gen_double_pareto:
      return (p.shape + 1.0) * std::log1p(a / (p.shape * p.lambda));
    case PriorKind::mcp: {
      const double knee = p.shape * p.lambda;
      if (a <= knee) return p.lambda * a - x * x / (2.0 * p.shape);
      return 0.5 * p.shape * p.lambda * p.lambda;
    }
  }
  return 0.0;
}

namespace detail {

inline double soft_threshold(double x, double t) {
  const double a = std::abs(x) - t;
  return a > 0.0 ? std::copysign(a, x) : 0.0;
}

// Stationarity of f(u) = (a+1) log(1 + u/(a l)) + (u-t)^2/(2 g) on u >= 0
// reads g(u) = u - t + k/(al + u) = 0 with k = g(a+1); g is convex with
// g(t) > 0, so the descent root (largest) sits in (max(0, argmin g), t).
inline double gdp_prox_abs(double shape, double lam, double gamma, double t) {
  const double al = shape * lam;
  const double k = gamma * (shape + 1.0);
  auto g = [&](double u) { return u - t + k / (al + u); };
  auto gp = [&](double u) { return 1.0 - k / ((al + u) * (al + u)); };
  auto f = [&](double u) {
    return (shape + 1.0) * std::log1p(u / al) + (u - t) * (u - t) / (2.0 * gamma);
  };

  double lo;
  bool compare_origin;
  if (g(0.0) < 0.0) {
    lo = 0.0;
    compare_origin = false;  // f dips below f(0) for sure
  } else {
    const double ustar = std::sqrt(k) - al;  // argmin of g
    if (ustar <= 0.0 || ustar >= t || g(ustar) >= 0.0) return 0.0;
    lo = ustar;
    compare_origin = true;
  }

  // safeguarded Newton from the right end of [lo, t]
  double hi = t;
  double u = t;
  for (int it = 0; it < 100; ++it) {
    const double gu = g(u);
    if (gu > 0.0) hi = u; else lo = u;
    const double d = gp(u);
    double step = d > 0.0 ? u - gu / d : std::numeric_limits<double>::quiet_NaN();
    if (!(step > lo && step < hi)) step = 0.5 * (lo + hi);
    if (std::abs(step - u) <= 1e-15 * (1.0 + u)) { u = step; break; }
    u = step;
  }
  if (compare_origin && f(u) >= f(0.0)) return 0.0;
  return u;
}

// Firm thresholding; for gamma >= shape the inner piece turns concave and the
// rule degenerates to hard thresholding at lam * sqrt(gamma * shape).
inline double mcp_prox_abs(double shape, double lam, double gamma, double t) {
  const double knee = shape * lam;
  if (gamma < shape) {
    if (t <= gamma * lam) return 0.0;
    if (t <= knee) return shape * (t - gamma * lam) / (shape - gamma);
    return t;
  }
  const double cut = lam * std::sqrt(gamma * shape);
  return t > cut ? t : 0.0;
}

}  // namespace detail

inline double shrink_scalar(const PriorSpec& p, double gamma, double x) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("shrink_scalar: gamma must be > 0");
  if (!std::isfinite(x)) throw std::invalid_argument("shrink_scalar: non-finite input");
  switch (p.kind) {
    case PriorKind::elastic_net: {
      const double t = p.alpha * gamma * p.lambda1 / p.sigma2;
      const double denom = 1.0 + gamma * p.lambda2 * (1.0 - p.alpha) / p.sigma2;
      return detail::soft_threshold(x, t) / denom;
    }
    case PriorKind::laplace:
      return detail::soft_threshold(x, gamma * p.lambda);
    case PriorKind::gen_double_pareto: {
      if (x == 0.0) return 0.0;
      const double u = detail::gdp_prox_abs(p.shape, p.lambda, gamma, std::abs(x));
      return std::copysign(u, x);
    }
    case PriorKind::mcp: {
      if (x == 0.0) return 0.0;
      const double u = detail::mcp_prox_abs(p.shape, p.lambda, gamma, std::abs(x));
      return std::copysign(u, x);
    }
  }
  return 0.0;
}

// componentwise shrink on active coordinates, exact zeros elsewhere
inline Eigen::VectorXd prox_restricted(const PriorSpec& p, double gamma,
                                       const Eigen::VectorXd& theta,
                                       const DeltaVec& delta) {
  if (delta.size() != theta.size()) throw std::invalid_argument("prox_restricted: size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (delta[j] != 0) out[j] = shrink_scalar(p, gamma, theta[j]);
  return out;
}

struct ProxOracleResult {
  double point = 0.0;
  double objective = 0.0;
};

namespace detail {

template <typename F>
double golden_section(F&& f, double a, double b, double width) {
  const double invphi = 0.6180339887498948482;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > width) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Bracketed scan plus golden-section refinement of the prox objective.
// Deliberately ignorant of the closed-form rules so it can certify them;
// the scan step handles the two-basin shapes of the non-convex priors.
inline ProxOracleResult prox_oracle_scalar(const PriorSpec& p, double gamma, double x) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("prox_oracle_scalar: gamma must be > 0");
  if (!std::isfinite(x)) throw std::invalid_argument("prox_oracle_scalar: non-finite input");
  auto obj = [&](double u) {
    const double r = u - x;
    return neg_log_prior(p, u) + r * r / (2.0 * gamma);
  };
  const double bound = std::abs(x) + 10.0 * gamma * p.slope_at_zero();
  if (bound == 0.0) return {0.0, obj(0.0)};

  const double lo = x - bound, hi = x + bound;
  const int n = 4096;
  const double h = (hi - lo) / n;
  int best = -1;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double v = obj(lo + i * h);
    if (v < best_val) { best_val = v; best = i; }
  }
  if (best <= 0 || best >= n)
    throw std::runtime_error("prox_oracle_scalar: scan minimum at bracket edge (x=" +
                             std::to_string(x) + ", gamma=" + std::to_string(gamma) + ")");

  // refine around the best scan cells; non-convex objectives can hold two
  // near-tied basins, so polish a few local minima and keep the best
  double arg = lo + best * h;
  double val = best_val;
  for (int i = 1; i < n; ++i) {
    const double fm = obj(lo + (i - 1) * h), fc = obj(lo + i * h), fp = obj(lo + (i + 1) * h);
    if (fc <= fm && fc <= fp && fc <= best_val + 10.0) {
      const double a = lo + (i - 1) * h, b = lo + (i + 1) * h;
      const double u = detail::golden_section(obj, a, b, 1e-12);
      const double fu = obj(u);
      if (fu < val) { val = fu; arg = u; }
    }
  }
  // ties at a kink resolve to the kink point itself
  if (obj(0.0) <= val + 1e-15 * (1.0 + std::abs(val)) && std::abs(arg) <= 1e-9 * (1.0 + std::abs(x))) {
    arg = 0.0;
    val = obj(0.0);
  }
  return {arg, val};
}

}  // namespace slabprox
