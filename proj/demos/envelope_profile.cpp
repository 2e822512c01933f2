// Tabulates a nonsmooth objective against its smoothed envelope for a few
// step sizes on a 1-D logistic-loss-plus-l1 example. The envelope always sits
// below the objective and tightens as the step shrinks.

#include <cmath>
#include <cstdio>

#include "slabprox/envelope.hpp"

using namespace slabprox;

int main() {
  SmoothLoss loss;
  auto softplus = [](double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  };
  loss.value = [softplus](const Eigen::VectorXd& x) { return -0.8 * x[0] + softplus(0.8 * x[0]); };
  loss.gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(1);
    g[0] = -0.8 + 0.8 / (1.0 + std::exp(-0.8 * x[0]));
    return g;
  };
  loss.hessian_apply = [](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    Eigen::VectorXd h(1);
    const double s = 1.0 / (1.0 + std::exp(-0.8 * x[0]));
    h[0] = 0.64 * s * (1.0 - s) * v[0];
    return h;
  };

  const PriorSpec prior = PriorSpec::laplace(0.5);
  DeltaVec on(1);
  on[0] = 1;
  const double gammas[] = {2.0, 0.5, 0.1};

  std::printf("%8s %12s %12s %12s %12s\n", "x", "objective", "env g=2", "env g=0.5", "env g=0.1");
  for (int i = 0; i <= 16; ++i) {
    Eigen::VectorXd x(1);
    x[0] = -4.0 + 0.5 * i;
    const double h = loss.value(x) + 0.5 * std::abs(x[0]);
    std::printf("%8.2f %12.6f", x[0], h);
    for (double g : gammas) {
      const EnvelopeContext ctx(g, 1.0, prior, 0.0);
      std::printf(" %12.6f", fb_envelope(ctx, loss, x, on));
    }
    std::printf("\n");
  }

  std::printf("\nshrinkage map at gamma = 0.5 (soft threshold at 0.25):\n");
  for (double t : {-2.0, -0.5, -0.2, 0.0, 0.2, 0.5, 2.0})
    std::printf("  s(%5.2f) = %8.4f\n", t, shrink_scalar(prior, 0.5, t));
  return 0;
}
