// Reference artifacts: example models, the exact conditioned-OU simulator and
// its closed-form mean, and the endpoint-rejection oracle.
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bridgesim/reference.hpp"
#include "bridgesim/sde.hpp"
#include "bridgesim/weights.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bridgesim;
using namespace testutil;

TEST_SUITE("reference") {

TEST_CASE("example models: drift, Jacobian, and dispersion values") {
  const double x = 0.25;
  auto ou = make_ou(2.0, 0.1);
  CHECK(ou.drift(0.3, vec1(x))(0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(ou.jacobian(0.3, vec1(x))(0, 0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(ou.dispersion(0.3, vec1(x))(0, 0) == 0.1);
  CHECK(ou.diffusivity(0.3, vec1(x))(0, 0) == doctest::Approx(0.01).epsilon(1e-15));

  auto sine = make_sine(0.5);
  // b(1/4) = -sin(pi/2) = -1, b'(1/4) = -2 pi cos(pi/2) = 0.
  CHECK(sine.drift(0.0, vec1(x))(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(sine.jacobian(0.0, vec1(x))(0, 0)) <= 1e-12);
  CHECK(sine.drift(0.0, vec1(0.0))(0) == 0.0);

  auto ousine = make_ou_sine(0.15);
  CHECK(ousine.drift(0.0, vec1(x))(0) == doctest::Approx(-0.125 - 1.0).epsilon(1e-14));
  CHECK(ousine.jacobian(0.0, vec1(0.0))(0, 0) ==
        doctest::Approx(-0.5 - 2.0 * M_PI).epsilon(1e-13));
  CHECK(ousine.dispersion(0.0, vec1(x))(0, 0) == 0.15);
}

TEST_CASE("ou_bridge_mean: endpoints, closed-form value, and edge cases") {
  const auto spec = spec1(0.1, 1.0, 3.0);
  CHECK(ou_bridge_mean(2.0, 0.1, spec, 0.0)(0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(ou_bridge_mean(2.0, 0.1, spec, 3.0)(0) == doctest::Approx(1.0).epsilon(1e-14));
  // (u + v) sinh(3) / sinh(6) at the midpoint, by hand.
  const double expected = 1.1 * std::sinh(3.0) / std::sinh(6.0);
  CHECK(ou_bridge_mean(2.0, 0.1, spec, 1.5)(0) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.0546308).epsilon(1e-5));
  // Zero mean reversion degenerates to the chord.
  CHECK(ou_bridge_mean(0.0, 0.1, spec, 0.75)(0) ==
        doctest::Approx(0.1 + 0.9 * 0.25).epsilon(1e-14));
  CHECK_THROWS_WITH_AS((void)ou_bridge_mean(2.0, 0.1, spec, -0.1),
                       doctest::Contains("outside"), std::invalid_argument);
  CHECK_THROWS_WITH_AS((void)ou_bridge_mean(2.0, 0.1, spec, 3.1),
                       doctest::Contains("outside"), std::invalid_argument);
}

TEST_CASE("ou_bridge_exact: validation and endpoint contract") {
  const auto spec = spec1(0.1, 1.0, 1.0);
  auto grid = uniform_grid(1.0, 50);
  CHECK_THROWS_WITH_AS(
      (void)ou_bridge_exact(0.0, 0.3, spec, grid, sample_wiener(*grid, 1, 1)),
      doctest::Contains("alpha must be nonzero"), std::invalid_argument);
  const auto path = ou_bridge_exact(1.0, 0.3, spec, grid, sample_wiener(*grid, 1, 1));
  CHECK(path.state(0)(0) == 0.1);
  CHECK(path.state(50)(0) == 1.0);
  CHECK(path.nodes() == 51);
}

TEST_CASE("ou_bridge_exact: midpoint moments match the conditioned-OU law") {
  const double alpha = 1.0, sigma = 0.3, T = 1.0;
  const auto spec = spec1(0.0, 1.0, T);
  auto grid = uniform_grid(T, 1000);
  const std::size_t n = 4000, mid = 500;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto path =
        ou_bridge_exact(alpha, sigma, spec, grid, sample_wiener(*grid, 1, 7000 + k));
    const double x = path.state(mid)(0);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  const double mean_exact = ou_bridge_mean(alpha, sigma, spec, 0.5)(0);
  const double var_exact = sigma * sigma * std::sinh(alpha * 0.5) *
                           std::sinh(alpha * 0.5) / (alpha * std::sinh(alpha));
  const double se_mean = std::sqrt(var_exact / n);
  const double se_var = var_exact * std::sqrt(2.0 / (n - 1.0));
  CAPTURE(mean);
  CAPTURE(var);
  CHECK(std::abs(mean - mean_exact) <= 3.5 * se_mean);
  CHECK(std::abs(var - var_exact) <= 5.0 * se_var);
}

TEST_CASE("rejection_oracle: a huge tolerance accepts every attempt") {
  auto model = make_ou(1.0, 0.3);
  const auto spec = spec1(0.0, 0.5, 1.0);
  auto grid = uniform_grid(1.0, 20);
  const auto res = rejection_oracle(model, spec, grid, 1e6, 25, 3);
  CHECK(res.acceptance_rate == 1.0);
  CHECK(res.attempts == 25);
  REQUIRE(res.paths.size() == 25);
  for (const auto& p : res.paths) CHECK(p.state(0)(0) == 0.0);
}

TEST_CASE("rejection_oracle: conditioned Brownian motion is symmetric") {
  // b = 0, sigma = 1, u = v = 0: accepted paths are near-bridges, so the
  // midpoint mean is 0 with bridge variance about t(T-t)/T = 1/4.
  auto model = scalar_model([](double, double) { return 0.0; },
                            [](double, double) { return 1.0; });
  const auto spec = spec1(0.0, 0.0, 1.0);
  auto grid = uniform_grid(1.0, 100);
  const std::size_t n = 500;
  const auto res = rejection_oracle(model, spec, grid, 0.1, n, 11);
  REQUIRE(res.paths.size() == n);
  CHECK(res.acceptance_rate > 0.02);
  CHECK(res.acceptance_rate < 0.3);
  double s1 = 0.0;
  for (const auto& p : res.paths) s1 += p.state(50)(0);
  const double mean = s1 / n;
  const double se = 0.5 / std::sqrt(static_cast<double>(n));
  CAPTURE(mean);
  CHECK(std::abs(mean) <= 3.0 * se);
  // Endpoints of accepted paths satisfy the tolerance.
  for (const auto& p : res.paths) CHECK(std::abs(p.state(100)(0)) <= 0.1);
}

TEST_CASE("rejection_oracle: thread count does not change the result") {
  auto model = make_ou(1.0, 0.5);
  const auto spec = spec1(0.0, 0.3, 1.0);
  auto grid = uniform_grid(1.0, 40);
  const auto one = rejection_oracle(model, spec, grid, 0.4, 30, 5, 0, 1);
  const auto three = rejection_oracle(model, spec, grid, 0.4, 30, 5, 0, 3);
  CHECK(one.attempts == three.attempts);
  REQUIRE(one.paths.size() == three.paths.size());
  for (std::size_t k = 0; k < one.paths.size(); ++k)
    CHECK((one.paths[k].states - three.paths[k].states).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rejection_oracle: validation and budget exhaustion") {
  auto model = make_ou(1.0, 0.5);
  const auto spec = spec1(0.0, 0.3, 1.0);
  auto grid = uniform_grid(1.0, 10);
  CHECK_THROWS_WITH_AS((void)rejection_oracle(model, spec, grid, 0.0, 10, 1),
                       doctest::Contains("eps must be positive"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS((void)rejection_oracle(model, spec, grid, 0.1, 0, 1),
                       doctest::Contains("n_accept must be positive"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS((void)rejection_oracle(model, spec, grid, 1e-9, 10, 1, 1000),
                       doctest::Contains("increase the endpoint tolerance"),
                       std::runtime_error);
}

}  // TEST_SUITE
