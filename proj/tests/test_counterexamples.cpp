#include <doctest.h>

#include <cmath>
#include <numbers>

#include "loclab/counterexamples.hpp"

using namespace loclab;

namespace {

// n^n e^{-n} / (2 pi n!) by a running product, no lgamma.
double product_oracle(int n) {
  double log_v = -n - std::log(2 * std::numbers::pi);
  for (int k = 1; k <= n; ++k) log_v += std::log(double(n) / k);
  return std::exp(log_v);
}

}  // namespace

TEST_SUITE("counterexamples") {

TEST_CASE("Landau amplitude at the origin") {
  LandauSpec b2{2.0};
  CHECK(landau_amplitude(b2, 0, {0, 0}) == doctest::Approx(std::sqrt(1 / std::numbers::pi)).epsilon(1e-14));
  for (int n : {1, 2, 7}) CHECK(landau_amplitude(b2, n, {0, 0}) == 0.0);
}

TEST_CASE("Landau peak radius maximizes the radial profile") {
  for (int n : {1, 4, 30}) {
    const double r0 = landau_peak_radius(1.0, n);
    CHECK(r0 == doctest::Approx(std::sqrt(2.0 * n)));
    const double v0 = landau_log_amplitude(1.0, n, r0);
    for (double dr : {-0.1, -0.01, 0.01, 0.1}) CHECK(landau_log_amplitude(1.0, n, r0 + dr) < v0);
  }
}

TEST_CASE("opposite product identity") {
  LandauSpec spec;
  auto one = landau_opposite_product(spec, 1);
  CHECK(one.direct == doctest::Approx(std::exp(-1.0) / (2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(one.direct == doctest::Approx(0.0585498).epsilon(1e-6));
  for (int n : {1, 5, 10, 20, 50, 200, 1000}) {
    auto p = landau_opposite_product(spec, n);
    CHECK(p.rel_err <= 1e-10);
    CHECK(std::abs(p.direct - product_oracle(n)) / product_oracle(n) <= 1e-10);
  }
  CHECK(std::abs(landau_opposite_product(spec, 50).stirling_ratio - 1) < 0.02);
  CHECK_THROWS_AS(landau_opposite_product(spec, 0), ParameterError);
}

TEST_CASE("Landau eigenfunctions are normalized") {
  for (int n = 0; n <= 20; ++n) CHECK(landau_normalization(LandauSpec{1.0}, n) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(landau_normalization(LandauSpec{3.0}, 7) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("SUDEC violation") {
  LandauSpec spec;
  for (double sigma : {0.1, 0.5, 1.0}) {
    auto v = landau_sudec_violation(spec, 1, 10000, sigma, 1.0);
    REQUIRE(v.first_exceeding);
    CHECK(v.rows[*v.first_exceeding - 1].ratio > 1e6);
  }
  auto v = landau_sudec_violation(spec, 1, 2000, 1.0, 1.0);
  CHECK(v.monotone_from <= 5);
  for (std::size_t i = 1; i < v.rows.size(); ++i)
    if (v.rows[i].n > v.monotone_from) CHECK(v.rows[i].log_ratio >= v.rows[i - 1].log_ratio);
}

TEST_CASE("sigma zero gives the bare product") {
  auto v = landau_sudec_violation(LandauSpec{}, 1, 400, 0.0, 1.0);
  CHECK_FALSE(v.first_exceeding);
  for (const auto& r : v.rows) {
    CHECK(r.ratio == doctest::Approx(r.product));
    CHECK(r.product * std::sqrt(double(r.n)) == doctest::Approx(1 / std::pow(2 * std::numbers::pi, 1.5)).epsilon(0.01 + 1.0 / r.n));
  }
}

TEST_CASE("Landau parameter errors") {
  CHECK_THROWS_AS(landau_sudec_violation(LandauSpec{}, 1, 10, 0.5, 2.0), ParameterError);
  CHECK_THROWS_AS(landau_sudec_violation(LandauSpec{}, 1, 10, -0.5, 1.0), ParameterError);
  CHECK_THROWS_AS(landau_sudec_violation(LandauSpec{}, 10, 1, 0.5, 1.0), ParameterError);
  CHECK_THROWS_AS(landau_sudec_violation(LandauSpec{-1.0}, 1, 10, 0.5, 1.0), ParameterError);
}

TEST_CASE("cluster construction") {
  ClusterSpec spec;
  auto rep = cluster_suleplus_violation(spec);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.spectra_identical);
  CHECK(rep.blockwise_pass);
  CHECK(rep.blockwise_constant);
  for (const auto& r : rep.rows) {
    CHECK(r.cross_copy_symmetric_product == doctest::Approx(rep.rows[0].cross_copy_symmetric_product).epsilon(1e-12));
    CHECK(r.spectrum_shift < 1e-12);
    CHECK(r.min_multiplicity == 2);
    CHECK(r.rotation_invariance_error <= 1e-10);
    CHECK(r.rotation_verdicts_agree);
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].sudec_plus_required_c > rep.rows[i - 1].sudec_plus_required_c);
    CHECK(rep.rows[i].rotated_sule_required_c > rep.rows[i - 1].rotated_sule_required_c);
  }
  CHECK(rep.sudec_plus_ratio >= 10);
  CHECK(rep.rotated_sule_ratio >= 10);
  CHECK(rep.c_delta_growth >= rep.c_delta_growth_required);
  CHECK(rep.sudec_basis_dependent);
  CHECK(rep.rotation_invariant);
  CHECK(rep.verdict);
}

TEST_CASE("symmetric combination of two single-site copies") {
  ClusterSpec spec;
  spec.base = std::make_shared<const SiteSpace>(SiteSpace::lattice_box(1, 1));
  spec.separations = {3, 9, 27};
  auto rep = cluster_suleplus_violation(spec);
  for (const auto& r : rep.rows) CHECK(r.cross_copy_symmetric_product == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("cluster parameter errors") {
  ClusterSpec spec;
  spec.separations = {20, 10};
  CHECK_THROWS_AS(cluster_suleplus_violation(spec), ParameterError);
  spec.separations = {10};
  spec.copies = 1;
  CHECK_THROWS_AS(cluster_suleplus_violation(spec), ParameterError);
}

}
