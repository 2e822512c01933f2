#include <catch2/catch_amalgamated.hpp>

#include "slabprox/checks.hpp"
#include "slabprox/diagnostics.hpp"
#include "slabprox/envelope.hpp"
#include "slabprox/grid.hpp"
#include "slabprox/harness.hpp"
#include "slabprox/io.hpp"
#include "slabprox/lasso.hpp"
#include "slabprox/linmodel.hpp"
#include "slabprox/prox.hpp"
#include "slabprox/rng.hpp"
#include "slabprox/sampler.hpp"
#include "slabprox/scenario.hpp"
#include "slabprox/special.hpp"
#include "slabprox/validation.hpp"

TEST_CASE("public headers are self-contained and wire together", "[headers]") {
  using namespace slabprox;
  const PriorSpec p = PriorSpec::laplace(1.0);
  CHECK(shrink_scalar(p, 1.0, 3.0) == Catch::Approx(2.0));

  Dataset data;
  data.X = Eigen::MatrixXd::Identity(3, 3);
  data.z = Eigen::VectorXd::Ones(3);
  data.sigma2 = 1.0;
  CHECK(lambda_max(data) == Catch::Approx(1.0));

  DeltaVec delta = DeltaVec::Ones(3);
  const EnvelopeContext ctx(0.25, 1.0, p, 0.0);
  const LinearLoss loss(data);
  CHECK(std::isfinite(fb_envelope(ctx, loss, Eigen::VectorXd::Zero(3), delta)));
}
