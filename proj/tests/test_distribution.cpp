// Diagonal Gaussian action head: squash/softplus mapping, closed-form
// density/entropy, sampling, and the hand-derived backward formulas checked
// against finite differences of the closed forms.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "lanegnn/distribution.hpp"
#include "lanegnn/util.hpp"

using namespace lanegnn;

namespace {

Bounds test_bounds() {
  Bounds b;
  b.lo = {-0.2, -5.0};
  b.hi = {0.2, 4.0};
  return b;
}

}  // namespace

TEST_CASE("softplus and its inverse") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(40.0) == 40.0);          // saturated branch
  CHECK(softplus(-40.0) > 0.0);           // tends to zero but stays positive
  CHECK(softplus(-40.0) < 1e-15);
  for (double x : {-5.0, -1.0, -0.1, 0.0, 0.3, 2.0, 10.0, 35.0}) {
    CHECK(softplus_inv(softplus(x)) == doctest::Approx(x).epsilon(1e-9));
  }
  CHECK_THROWS_AS(softplus_inv(0.0), std::logic_error);
  CHECK_THROWS_AS(softplus_inv(-1.0), std::logic_error);
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(40.0) == doctest::Approx(1.0));
  CHECK(logistic(-40.0) == doctest::Approx(0.0));
  // logistic is softplus' derivative.
  const double h = 1e-6;
  for (double x : {-2.0, 0.0, 1.3}) {
    const double fd = (softplus(x + h) - softplus(x - h)) / (2.0 * h);
    CHECK(logistic(x) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("normal_head: zero raw outputs give the midpoint mean and the frozen stddev") {
  const Bounds b = test_bounds();
  const DiagonalNormal dist = normal_head({0.0, 0.0}, {0.0, 0.0}, b);
  CHECK(dist.mean[0] == doctest::Approx(0.0));
  CHECK(dist.mean[1] == doctest::Approx(-0.5));
  // softplus(0) + 1e-5, frozen to its exact double value.
  CHECK(dist.stddev[0] == doctest::Approx(0.6931571805599453).epsilon(1e-15));
  CHECK(dist.stddev[1] == doctest::Approx(0.6931571805599453).epsilon(1e-15));
}

TEST_CASE("normal_head: the mean stays strictly inside the bounds") {
  const Bounds b = test_bounds();
  for (double raw : {-50.0, -3.0, 0.0, 3.0, 50.0}) {
    const DiagonalNormal dist = normal_head({raw, raw}, {0.0, 0.0}, b);
    for (int d = 0; d < 2; ++d) {
      CHECK(dist.mean[d] > b.lo[d]);
      CHECK(dist.mean[d] < b.hi[d]);
    }
  }
  // And the squash is monotone: larger raw pushes toward the upper bound.
  const DiagonalNormal lo = normal_head({-2.0, -2.0}, {0.0, 0.0}, b);
  const DiagonalNormal hi = normal_head({2.0, 2.0}, {0.0, 0.0}, b);
  CHECK(lo.mean[0] < hi.mean[0]);
  CHECK(lo.mean[1] < hi.mean[1]);
}

TEST_CASE("normal_head: validation") {
  Bounds bad;
  bad.lo = {0.0, 0.0};
  bad.hi = {1.0};
  CHECK_THROWS_AS(normal_head({0.0, 0.0}, {0.0, 0.0}, bad), ConfigError);
  Bounds inverted;
  inverted.lo = {1.0};
  inverted.hi = {0.0};
  CHECK_THROWS_AS(normal_head({0.0}, {0.0}, inverted), ConfigError);
  CHECK_THROWS_AS(normal_head({0.0}, {0.0, 0.0}, test_bounds()), std::logic_error);
  Bounds empty;
  CHECK_THROWS_AS(normal_head({}, {}, empty), ConfigError);
}

TEST_CASE("log_prob matches the closed-form Gaussian density") {
  DiagonalNormal dist;
  dist.mean = {0.0, 1.0};
  dist.stddev = {1.0, 0.5};
  // At the mean with unit stddev each dimension contributes -0.5*ln(2*pi).
  DiagonalNormal unit;
  unit.mean = {0.0};
  unit.stddev = {1.0};
  CHECK(unit.log_prob({0.0}) == doctest::Approx(-0.9189385332046727).epsilon(1e-15));

  const std::vector<double> a = {0.3, 0.2};
  double expect = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double z = (a[d] - dist.mean[d]) / dist.stddev[d];
    expect += -0.5 * std::log(2.0 * kPi) - std::log(dist.stddev[d]) - 0.5 * z * z;
  }
  CHECK(dist.log_prob(a) == doctest::Approx(expect).epsilon(1e-14));
  CHECK_THROWS_AS(dist.log_prob({0.0}), std::logic_error);

  DiagonalNormal zero_sigma;
  zero_sigma.mean = {0.0};
  zero_sigma.stddev = {0.0};
  CHECK_THROWS_AS(zero_sigma.log_prob({0.0}), std::logic_error);
}

TEST_CASE("entropy matches the closed form") {
  DiagonalNormal dist;
  dist.mean = {0.0};
  dist.stddev = {1.0};
  CHECK(dist.entropy() == doctest::Approx(0.5 + 0.9189385332046727).epsilon(1e-14));
  dist.stddev = {2.0};
  CHECK(dist.entropy() ==
        doctest::Approx(0.5 + 0.9189385332046727 + std::log(2.0)).epsilon(1e-14));
  dist.mean = {0.0, 0.0};
  dist.stddev = {1.0, 1.0};
  CHECK(dist.entropy() == doctest::Approx(2.0 * (0.5 + 0.9189385332046727)));
}

TEST_CASE("sample: zero stddev returns the mean, everything clamps to bounds") {
  Rng rng(31);
  DiagonalNormal dist;
  dist.mean = {0.1, -1.0};
  dist.stddev = {0.0, 0.0};
  dist.bounds = test_bounds();
  const std::vector<double> s = dist.sample(rng);
  CHECK(s[0] == 0.1);
  CHECK(s[1] == -1.0);

  dist.stddev = {5.0, 50.0};
  bool hit_low = false, hit_high = false;
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> a = dist.sample(rng);
    for (int d = 0; d < 2; ++d) {
      CHECK(a[d] >= dist.bounds.lo[d]);
      CHECK(a[d] <= dist.bounds.hi[d]);
    }
    if (a[0] == dist.bounds.lo[0]) hit_low = true;
    if (a[0] == dist.bounds.hi[0]) hit_high = true;
  }
  // With stddev 5 on a +/-0.2 range nearly every draw clamps.
  CHECK(hit_low);
  CHECK(hit_high);
}

TEST_CASE("sample: seeded determinism") {
  DiagonalNormal dist;
  dist.mean = {0.0, 0.0};
  dist.stddev = {1.0, 1.0};
  dist.bounds = test_bounds();
  Rng r1(7), r2(7);
  for (int i = 0; i < 20; ++i) {
    const auto a = dist.sample(r1);
    const auto b = dist.sample(r2);
    CHECK(a == b);
  }
}

TEST_CASE("log_prob_grad matches finite differences of log_prob") {
  DiagonalNormal dist;
  dist.mean = {0.12, -0.8};
  dist.stddev = {0.45, 1.7};
  const std::vector<double> action = {0.3, -1.4};
  std::vector<double> dmean, dstddev;
  dist.log_prob_grad(action, 1.0, dmean, dstddev);

  const double h = 1e-6;
  for (int d = 0; d < 2; ++d) {
    DiagonalNormal up = dist, down = dist;
    up.mean[d] += h;
    down.mean[d] -= h;
    const double fd = (up.log_prob(action) - down.log_prob(action)) / (2.0 * h);
    CHECK(dmean[d] == doctest::Approx(fd).epsilon(1e-6));

    up = dist;
    down = dist;
    up.stddev[d] += h;
    down.stddev[d] -= h;
    const double fds = (up.log_prob(action) - down.log_prob(action)) / (2.0 * h);
    CHECK(dstddev[d] == doctest::Approx(fds).epsilon(1e-6));
  }

  // scale multiplies, and repeated calls accumulate.
  std::vector<double> dmean2, dstddev2;
  dist.log_prob_grad(action, 2.0, dmean2, dstddev2);
  dist.log_prob_grad(action, 1.0, dmean2, dstddev2);
  for (int d = 0; d < 2; ++d) {
    CHECK(dmean2[d] == doctest::Approx(3.0 * dmean[d]).epsilon(1e-12));
    CHECK(dstddev2[d] == doctest::Approx(3.0 * dstddev[d]).epsilon(1e-12));
  }
}

TEST_CASE("entropy_grad matches finite differences of entropy") {
  DiagonalNormal dist;
  dist.mean = {0.0, 0.0};
  dist.stddev = {0.3, 2.2};
  std::vector<double> dstddev;
  dist.entropy_grad(1.0, dstddev);
  const double h = 1e-6;
  for (int d = 0; d < 2; ++d) {
    DiagonalNormal up = dist, down = dist;
    up.stddev[d] += h;
    down.stddev[d] -= h;
    const double fd = (up.entropy() - down.entropy()) / (2.0 * h);
    CHECK(dstddev[d] == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("chain_to_raw matches finite differences through the whole head") {
  const Bounds b = test_bounds();
  const std::vector<double> mean_raw = {0.4, -0.9};
  const std::vector<double> stddev_raw = {-0.3, 1.2};
  const std::vector<double> action = {0.05, -2.0};

  auto head_log_prob = [&](const std::vector<double>& mr,
                           const std::vector<double>& sr) {
    return normal_head(mr, sr, b).log_prob(action);
  };

  const DiagonalNormal dist = normal_head(mean_raw, stddev_raw, b);
  std::vector<double> dmean, dstddev;
  dist.log_prob_grad(action, 1.0, dmean, dstddev);
  const std::vector<double> raw_grad = dist.chain_to_raw(dmean, dstddev);
  REQUIRE(raw_grad.size() == 4);

  const double h = 1e-6;
  for (int d = 0; d < 2; ++d) {
    std::vector<double> up = mean_raw, down = mean_raw;
    up[d] += h;
    down[d] -= h;
    const double fd = (head_log_prob(up, stddev_raw) - head_log_prob(down, stddev_raw)) /
                      (2.0 * h);
    CHECK(raw_grad[d] == doctest::Approx(fd).epsilon(1e-6));

    up = stddev_raw;
    down = stddev_raw;
    up[d] += h;
    down[d] -= h;
    const double fds = (head_log_prob(mean_raw, up) - head_log_prob(mean_raw, down)) /
                       (2.0 * h);
    CHECK(raw_grad[2 + d] == doctest::Approx(fds).epsilon(1e-6));
  }
}

TEST_CASE("log_prob uses the unclamped density on clamped samples") {
  // Sampling clamps to the bounds but the density is evaluated under the
  // plain Gaussian, so a clamped action's log_prob is simply the Gaussian
  // log-density at the boundary point.
  const Bounds b = test_bounds();
  const DiagonalNormal dist = normal_head({0.0, 0.0}, {3.0, 3.0}, b);
  const std::vector<double> boundary = {b.hi[0], b.lo[1]};
  double expect = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double z = (boundary[d] - dist.mean[d]) / dist.stddev[d];
    expect += -0.9189385332046727 - std::log(dist.stddev[d]) - 0.5 * z * z;
  }
  CHECK(dist.log_prob(boundary) == doctest::Approx(expect).epsilon(1e-12));
}
