#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "loclab/dynamics.hpp"

using namespace loclab;

namespace {

// Trapezoid over the unnormalized bump, independent of smooth_ramp.
double bump_cdf(double s) {
  auto bump = [](double x) { return std::abs(x) < 1 ? std::exp(-1 / (1 - x * x)) : 0.0; };
  auto integrate = [&](double lo, double hi) {
    const int n = 20000;
    double h = (hi - lo) / n, acc = 0.5 * (bump(lo) + bump(hi));
    for (int i = 1; i < n; ++i) acc += bump(lo + i * h);
    return acc * h;
  };
  return integrate(-1, 2 * s - 1) / integrate(-1, 1);
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("window covering the spectrum is one everywhere") {
  auto sd = fixtures::anderson(30, 4, 1);
  auto w = full_window(sd);
  for (double v : w.sampled) CHECK(v == 1.0);
  CHECK_FALSE(w.degenerate);
}

TEST_CASE("window below the spectrum is degenerate") {
  auto sd = fixtures::anderson(30, 4, 1);
  const double lo = sd.eigenvalues[0];
  auto w = make_window(sd, lo - 3, lo - 1, 0.1);
  CHECK(w.degenerate);
  for (double v : w.sampled) CHECK(v == 0.0);
  CHECK(moment(sd, w, 0, DecayParams{}, 3.0) == 0.0);
}

TEST_CASE("ramp values match the bump integral") {
  CHECK(smooth_ramp(0.0) == 0.0);
  CHECK(smooth_ramp(1.0) == 1.0);
  CHECK(smooth_ramp(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  for (double s : {0.1, 0.3, 0.7, 0.9}) CHECK(smooth_ramp(s) == doctest::Approx(bump_cdf(s)).epsilon(1e-7));
  EnergyWindow w(0, 10, 0.2);  // ramp width 1
  CHECK(w(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w(9.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w(5.0) == 1.0);
  CHECK(w(-0.1) == 0.0);
}

TEST_CASE("evolved kernel identities") {
  auto sd = fixtures::anderson(12, 3, 4);
  auto w = full_window(sd);
  SiteSet all(12);
  std::iota(all.begin(), all.end(), 0);
  CHECK(evolved_kernel(sd, w, {5}, {5}, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double t : {0.3, 2.0, 50.0}) CHECK(evolved_kernel(sd, w, all, {5}, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-site kernel is |sin t|") {
  auto sd = diagonalize(build_laplacian(fixtures::path(2)));
  auto w = full_window(sd);
  for (double t = 0; t < 7; t += 0.37)
    CHECK(evolved_kernel(sd, w, {1}, {0}, t) == doctest::Approx(std::abs(std::sin(t))).epsilon(1e-12));
}

TEST_CASE("moment closed forms") {
  auto sd = diagonalize(build_laplacian(fixtures::path(2)));
  auto w = full_window(sd);
  DecayParams p{1.0, 1.0, 0.0};
  CHECK(moment(sd, w, 0, p, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moment(sd, w, 0, p, std::numbers::pi / 2) == doctest::Approx(std::numbers::e).epsilon(1e-12));
  for (double t : {0.2, 1.1, 3.0}) {
    const double c = std::cos(t), s = std::sin(t);
    CHECK(moment(sd, w, 0, p, t) == doctest::Approx(c * c + std::numbers::e * s * s).epsilon(1e-12));
  }
}

TEST_CASE("sigma zero moment is bounded by one") {
  auto sd = fixtures::anderson(40, 4, 2);
  auto w = make_window(sd, -1, 2, 0.05);
  DecayParams p{0.0, 1.0, 0.0};
  for (double t : {0.0, 1.0, 10.0, 1000.0}) CHECK(moment(sd, w, 20, p, t) <= 1.0 + 1e-12);
}

TEST_CASE("moment is monotone in sigma and even in time") {
  auto sd = fixtures::anderson(40, 2, 3);
  auto w = full_window(sd);
  for (double t : {0.5, 4.0, 33.0}) {
    double prev = 0;
    for (double sigma : {0.0, 0.1, 0.3, 0.9}) {
      const double m = moment(sd, w, 20, DecayParams{sigma, 1.0, 0.0}, t);
      CHECK(m >= prev * (1 - 1e-12));
      prev = m;
      CHECK(m == doctest::Approx(moment(sd, w, 20, DecayParams{sigma, 1.0, 0.0}, -t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("large sigma stays finite in log form") {
  auto sd = diagonalize(build_laplacian(fixtures::path(300)));
  auto w = full_window(sd);
  DecayParams p{3.0, 1.0, 0.0};
  const double lm = log_moment(sd, w, 0, p, 500.0);
  CHECK(std::isfinite(lm));
  CHECK(lm > 700);
  CHECK_THROWS_AS(moment(sd, w, 0, p, 500.0), std::overflow_error);
}

TEST_CASE("Cesaro and Abel of simple series") {
  auto grid = uniform_time_grid(400, 0.01);
  std::vector<double> constant(grid.size(), 3.0);
  auto c = cesaro_average(grid, constant);
  auto a = abel_average(grid, constant);
  CHECK(std::isnan(c[0]));
  CHECK(c.back() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(a[100] == doctest::Approx(3.0 * (1 - std::exp(-40.0))).epsilon(1e-6));

  std::vector<double> cos2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) cos2[i] = std::pow(std::cos(grid[i]), 2);
  auto cc = cesaro_average(grid, cos2);
  CHECK(cc.back() == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(std::abs(cc.back() - 0.5) < std::abs(cc[1000] - 0.5) + 1e-3);
}

TEST_CASE("exact averages agree with the grid") {
  auto sd = fixtures::anderson(24, 3, 7);
  auto w = full_window(sd);
  DecayParams p{0.2, 1.0, 0.0};
  ExactMomentAverages exact(sd, w, 12, p);
  auto grid = uniform_time_grid(200, resolving_time_step(sd) / 4);
  auto series = moment_series(sd, w, 12, p, grid);
  for (std::size_t i = 1; i < grid.size(); i += 97) {
    CHECK(series.values[i] == doctest::Approx(exact.at(grid[i])).epsilon(1e-10));
    CHECK(series.cesaro[i] == doctest::Approx(exact.cesaro(grid[i])).epsilon(1e-3));
  }
  CHECK(exact.limit() == doctest::Approx(liminf_cesaro(sd, w, 12, p)).epsilon(1e-12));
}

TEST_CASE("liminf special cases") {
  auto one = diagonalize(build_laplacian(fixtures::path(1)));
  auto w1 = full_window(one);
  DecayParams p{0.5, 1.0, 0.0};
  CHECK(liminf_cesaro(one, w1, 0, p) == doctest::Approx(moment(one, w1, 0, p, 0.0)));
  auto sd = fixtures::anderson(30, 4, 9);
  CHECK(liminf_cesaro(sd, full_window(sd), 10, DecayParams{0.0, 1.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("liminf is below the grid supremum") {
  auto sd = fixtures::anderson(40, 4, 4);
  auto w = full_window(sd);
  DecayParams p{0.2, 1.0, 0.0};
  auto s = moment_series(sd, w, 20, p, default_time_grid());
  CHECK(liminf_cesaro(sd, w, 20, p) <= s.sup_over_grid * (1 + 1e-9));
}

TEST_CASE("Abel and Cesaro stay within the oscillation") {
  auto sd = fixtures::anderson(32, 4, 6);
  auto w = full_window(sd);
  auto grid = uniform_time_grid(2000, resolving_time_step(sd));
  auto s = moment_series(sd, w, 16, DecayParams{0.2, 1.0, 0.0}, grid);
  for (std::size_t i = 10; i < grid.size(); i += 50) {
    if (std::isnan(s.abel[i])) continue;
    double lo = s.values[i], hi = s.values[i];
    for (std::size_t j = 0; j < grid.size(); ++j) {
      lo = std::min(lo, s.values[j]);
      hi = std::max(hi, s.values[j]);
    }
    CHECK(std::abs(s.abel[i] - s.cesaro[i]) <= 2 * (hi - lo) + 1e-12);
  }
}

TEST_CASE("time grids") {
  auto g = default_time_grid();
  CHECK(g.size() == 201);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(0.1));
  CHECK(g.back() == doctest::Approx(1e4));
  auto sd = diagonalize(build_laplacian(fixtures::path(2)));
  CHECK(resolving_time_step(sd) == doctest::Approx(std::numbers::pi / 4));
}

}
