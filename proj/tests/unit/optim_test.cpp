#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "propdetect/neural/optim.hpp"
#include "propdetect/util/errors.hpp"
#include "propdetect/util/matrix.hpp"

using namespace propdetect;
using namespace propdetect::neural;

namespace {

// One scalar parameter driven by a fixed gradient tape.
struct ScalarRig {
  Matrix p{1, 1};
  Matrix g{1, 1};
  RAdam opt;
  ScalarRig(double p0, RAdamConfig cfg)
      : opt({{"p", p.data(), g.data(), 1}}, cfg) {
    p.data()[0] = p0;
  }
  double step_with(double grad) {
    g.data()[0] = grad;
    opt.step();
    return p.data()[0];
  }
};

const std::vector<double> kTape = {0.3, -0.2, 0.15, 0.4,
                                   -0.35, 0.25, -0.1, 0.05};

}  // namespace

TEST_CASE("rectification switches on at step 5 for beta2 = 0.999") {
  for (uint64_t t = 1; t <= 4; ++t) CHECK_FALSE(RAdam::rectified_at(0.999, t));
  for (uint64_t t = 5; t <= 64; ++t) CHECK(RAdam::rectified_at(0.999, t));
}

TEST_CASE("scalar trace matches the published update rule") {
  // frozen from an independent implementation of the cited optimizer
  const std::vector<double> expected = {
      0.47,
      0.4663157894736842,
      0.4584560108758982,
      0.44125042785757895,
      0.4409888792216213,
      0.4401961469366828,
      0.43956018056655705,
      0.438763693685031,
  };
  RAdamConfig cfg;
  cfg.lr = 0.1;
  ScalarRig rig(0.5, cfg);
  for (size_t t = 0; t < kTape.size(); ++t) {
    double p = rig.step_with(kTape[t]);
    CHECK(p == doctest::Approx(expected[t]).epsilon(1e-12));
  }
}

TEST_CASE("linear warm-up scales the first steps") {
  const std::vector<double> expected = {
      0.4925,
      0.4906578947368421,
      0.4847630607885026,
      0.46755747777018336,
      0.4672959291342257,
      0.4665031968492872,
      0.46586723047916145,
      0.4650707435976354,
  };
  RAdamConfig cfg;
  cfg.lr = 0.1;
  cfg.warmup_steps = 4;
  ScalarRig rig(0.5, cfg);
  CHECK(rig.opt.next_lr() == doctest::Approx(0.025).epsilon(1e-12));
  for (size_t t = 0; t < kTape.size(); ++t) {
    double p = rig.step_with(kTape[t]);
    CHECK(p == doctest::Approx(expected[t]).epsilon(1e-12));
  }
  CHECK(rig.opt.next_lr() == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("zero gradient leaves parameters untouched") {
  RAdamConfig cfg;
  ScalarRig rig(1.25, cfg);
  for (int t = 0; t < 10; ++t) CHECK(rig.step_with(0.0) == 1.25);
}

TEST_CASE("non-finite gradients are reported with the parameter name") {
  Matrix p(2, 2, 1.0), g(2, 2, 0.0);
  RAdam opt({{"layer0.attn.wq", p.data(), g.data(), 4}}, RAdamConfig{});
  g.data()[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    opt.step();
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer0.attn.wq") != std::string::npos);
  }
  g.data()[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(opt.step(), NumericError);
}

TEST_CASE("quadratic objective decreases monotonically after warm-up") {
  // f(p) = sum (p_i - c_i)^2, minimized from a distance
  Matrix p(1, 4), g(1, 4);
  const double target[4] = {1.0, -2.0, 0.5, 3.0};
  RAdamConfig cfg;
  cfg.lr = 1e-3;
  cfg.warmup_steps = 10;
  RAdam opt({{"p", p.data(), g.data(), 4}}, cfg);

  auto value = [&]() {
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
      s += (p.data()[i] - target[i]) * (p.data()[i] - target[i]);
    return s;
  };
  double prev = value();
  for (int t = 1; t <= 100; ++t) {
    for (int i = 0; i < 4; ++i) g.data()[i] = 2.0 * (p.data()[i] - target[i]);
    opt.step();
    double now = value();
    if (t > 10) CHECK(now < prev);
    prev = now;
  }
  CHECK(opt.steps_taken() == 100);
}

TEST_CASE("optimizer construction rejects degenerate settings") {
  Matrix p(1, 1), g(1, 1);
  RAdamConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(RAdam({{"p", p.data(), g.data(), 1}}, bad), ContractError);
  bad.lr = 1e-3;
  bad.beta2 = 1.0;
  CHECK_THROWS_AS(RAdam({{"p", p.data(), g.data(), 1}}, bad), ContractError);
}

TEST_CASE("zero_grad clears accumulators") {
  Matrix p(1, 3), g(1, 3, 7.0);
  RAdam opt({{"p", p.data(), g.data(), 3}}, RAdamConfig{});
  opt.zero_grad();
  for (int i = 0; i < 3; ++i) CHECK(g.data()[i] == 0.0);
}
