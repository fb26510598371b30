#include <doctest.h>

#include <cmath>
#include <random>

#include "loclab/envelope.hpp"
#include "loclab/geometry.hpp"

using namespace loclab;

TEST_SUITE("envelope") {

TEST_CASE("exact exponential with cap equal to its constant") {
  std::vector<EnvelopePoint> pts;
  for (int r = 0; r <= 40; ++r) pts.push_back({2.0 * std::exp(-0.7 * r), 0, double(r), 0});
  EnvelopeRequest req{"E", 0.5, 1.0, 0.0, 2.0};
  auto fit = fit_envelope(points_from(pts), req);
  CHECK(fit.verdict);
  CHECK(fit.sigma_at_required_zeta == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fit.violations == 0);
}

TEST_CASE("cap slack divided by the largest distance") {
  std::vector<EnvelopePoint> pts;
  for (int r = 0; r <= 40; ++r) pts.push_back({std::exp(-0.7 * r), 0, double(r), 0});
  auto s = max_sigma(points_from(pts), 1.0, 0.0, 10.0);
  CHECK(s == doctest::Approx(0.7 + std::log(10.0) / 40).epsilon(1e-12));
}

TEST_CASE("infeasible at the origin") {
  std::vector<EnvelopePoint> pts{{50.0, 0, 0, 0}, {1.0, 0, 3, 0}};
  auto fit = fit_envelope(points_from(pts), EnvelopeRequest{"E", 0.1, 1.0, 0.0, 10.0});
  CHECK_FALSE(fit.verdict);
  CHECK(std::isinf(fit.sigma_at_required_zeta));
  CHECK(fit.sigma_at_required_zeta < 0);
}

TEST_CASE("points only at the origin give an unbounded rate") {
  std::vector<EnvelopePoint> pts{{1.0, 0, 0, 0}, {0.0, 0, 5, 0}};
  auto fit = fit_envelope(points_from(pts), EnvelopeRequest{"E", 3.0, 1.0, 0.0, 1.0});
  CHECK(fit.verdict);
  CHECK(std::isinf(fit.sigma_hat));
  CHECK(fit.c_hat == doctest::Approx(1.0));
}

TEST_CASE("allowance is minimized") {
  // value e^{0.05 a} e^{-r}: needs eps >= 0.05 minus whatever the cap absorbs.
  std::vector<EnvelopePoint> pts;
  for (int a = 0; a <= 100; a += 10)
    for (int r = 0; r <= 10; ++r) pts.push_back({std::exp(0.05 * a - r), 0, double(r), double(a)});
  EnvelopeRequest req{"E", 0.5, 1.0, 0.2, 1.0};
  auto fit = fit_envelope(points_from(pts), req);
  CHECK(fit.verdict);
  CHECK(fit.epsilon_hat >= 0.05 - 1e-12);
  CHECK(fit.epsilon_hat <= 0.2);
  CHECK(fit.violations == 0);
}

TEST_CASE("required constant") {
  std::vector<EnvelopePoint> pts{{1.0, 0, 0, 0}, {0.5, std::log(0.25), 2, 0}};
  // second point: 0.5 / 0.25 * e^{0.3*2}
  CHECK(required_constant(points_from(pts), 0.3, 1.0, 0.0) == doctest::Approx(2 * std::exp(0.6)));
  CHECK(count_violations(points_from(pts), 0.3, 1.0, 0.0, 1.5) == 1);
  CHECK(count_violations(points_from(pts), 0.3, 1.0, 0.0, 4.0) == 0);
}

TEST_CASE("certified fits have no violations") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EnvelopePoint> pts;
    const double rate = 2 * u(rng);
    const int n = 5 + static_cast<int>(u(rng) * 200);
    for (int i = 0; i < n; ++i) {
      const double r = std::floor(u(rng) * 60);
      const double a = std::floor(u(rng) * 30);
      pts.push_back({u(rng) * std::exp(-rate * r + 0.02 * a), std::log(0.1 + u(rng)), r, a});
    }
    EnvelopeRequest req{"E", 0.0, 0.5 + 0.5 * u(rng), 0.05, 10.0};
    auto fit = fit_envelope(points_from(pts), req);
    if (!fit.verdict) continue;
    CHECK(fit.violations == 0);
    CHECK(count_violations(points_from(pts), std::isfinite(fit.sigma_hat) ? fit.sigma_hat : 0.0,
                           fit.zeta_hat, fit.epsilon_hat, fit.c_hat) == 0);
  }
}

TEST_CASE("required zeta is added to the grid") {
  std::vector<EnvelopePoint> pts{{1.0, 0, 0, 0}, {0.1, 0, 4, 0}};
  auto fit = fit_envelope(points_from(pts), EnvelopeRequest{"E", 0.1, 0.6, 0.0, 10.0});
  bool found = false;
  for (const auto& z : fit.per_zeta) found = found || z.zeta == 0.6;
  CHECK(found);
  CHECK_THROWS_AS(fit_envelope(points_from(pts), EnvelopeRequest{"E", 0.1, 1.5, 0.0, 10.0}), ParameterError);
}

}
