#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "loclab/diagnostics.hpp"

using namespace loclab;

namespace {

struct AndersonFixture {
  SpectralData sd = fixtures::anderson(64, 4, 1);
  EnergyWindow window = full_window(sd);
  Site u = *sd.space->origin();
};

BasisView delta_basis(int side) {
  auto space = fixtures::path(side);
  return basis_from_vectors(space, Eigen::MatrixXd::Identity(side, side),
                            WeightOperator::lattice_polynomial(*space, 1.0));
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("projector profile of a rank-one spectrum") {
  auto one = fixtures::laplacian(fixtures::path(1));
  auto w = full_window(one);
  auto p = sulp_profile(one, w, 0, DecayParams{0.2, 1.0, 0.0});
  CHECK(p.profile[0] == doctest::Approx(1.0));

  // A single projector selected by a narrow window.
  auto sd = fixtures::anderson(24, 4, 2);
  const double e = sd.eigenvalues[10];
  const double gap = std::min(sd.eigenvalues[10] - sd.eigenvalues[9], sd.eigenvalues[11] - sd.eigenvalues[10]);
  auto win = make_window(sd, e - 0.9 * gap, e + 0.9 * gap, 0.5);
  const auto& phi = sd.eigenvectors.col(10);
  Site u = localization_center(phi);
  auto prof = sulp_profile(sd, win, u, DecayParams{0.2, 1.0, 0.0});
  const double x10 = win(e);
  for (Site x = 0; x < 24; ++x)
    CHECK(prof.profile[x] == doctest::Approx(x10 * std::abs(phi[x] * phi[u])).epsilon(1e-12));
}

TEST_CASE("projector profile is a Parseval majorant at sigma zero") {
  AndersonFixture f;
  auto p = sulp_profile(f.sd, f.window, f.u, DecayParams{0.0, 1.0, 0.0});
  CHECK(p.profile.squaredNorm() <= 1.0 + 1e-12);
  CHECK(p.l_value <= 1.0 + 1e-12);
}

TEST_CASE("A_k ledger") {
  AndersonFixture f;
  auto led = ak_ledger(f.sd, f.window, f.u, DecayParams{0.2, 1.0, 0.0});
  CHECK_FALSE(led.degenerate);
  CHECK(led.row_sum_error <= 1e-12);
  CHECK(led.column_sum_max <= 1 + 1e-12);
  for (double l : {0.5, 1.0, 2.0, 10.0, 1e3, 1e6, 1e9}) {
    std::size_t brute = 0;
    for (double a : led.A) brute += a <= l;
    CHECK(led.counting(l) == brute);
  }
  CHECK(std::is_sorted(led.sorted_A.begin(), led.sorted_A.end()));
}

TEST_CASE("kernel interpolation") {
  AndersonFixture f;
  DecayParams p{0.2, 1.0, 0.0, std::nullopt, 0.5};
  auto k = kernel_interpolation_check(f.sd, f.window, f.u, p, default_time_grid());
  CHECK(k.violations == 0);
  CHECK(k.chain_violations == 0);
  CHECK(std::isfinite(k.c_min));
  CHECK(k.c_min <= 1e3);
  CHECK(k.holder_sum.allFinite());
  CHECK(k.verdict);

  double prev = std::numeric_limits<double>::infinity();
  for (double g : {0.25, 0.5, 0.75, 0.9}) {
    p.gamma = g;
    auto r = kernel_interpolation_check(f.sd, f.window, f.u, p, default_time_grid());
    CHECK(r.c_min <= prev * (1 + 1e-12));
    prev = r.c_min;
  }
}

TEST_CASE("kernel interpolation with a single projector") {
  auto one = fixtures::laplacian(fixtures::path(1));
  auto k = kernel_interpolation_check(one, full_window(one), 0, DecayParams{0.2, 1.0, 0.0, std::nullopt, 0.5},
                                      {0.0, 1.0, 10.0});
  CHECK(k.c_min == doctest::Approx(1.0));
  CHECK(k.violations == 0);
}

TEST_CASE("localization center ties") {
  Eigen::VectorXd v(5);
  v << 0.1, -0.5, 0.5, 0.2, -0.5;
  CHECK(localization_center(v) == 1);
  v << 0.1, 0.2, 0.3, 0.4, -0.9;
  CHECK(localization_center(v) == 4);
}

TEST_CASE("delta basis passes SULE and SUDEC with unit constant") {
  auto b = delta_basis(21);
  DecayParams p{5.0, 1.0, 0.0};
  auto sule = sule_fit(b, all_columns(b), p);
  CHECK(sule.fit.verdict);
  CHECK(sule.fit.c_hat == doctest::Approx(1.0));
  for (std::size_t c = 0; c < b.size(); ++c) CHECK(sule.centers[c].x_phi == c);

  // Products vanish off the diagonal; with f = 1 the diagonal terms are 1.
  auto sudec = sudec_check(b, all_columns(b), p, RateFunction::one());
  CHECK(sudec.fit.verdict);
  CHECK(std::isinf(sudec.fit.sigma_hat));
  CHECK(sudec.fit.c_hat == doctest::Approx(1.0));
  // With f(alpha) = alpha the diagonal needs C = max <u>^2 e^{-eps |u|}.
  auto weighted = sudec_source(b, all_columns(b), RateFunction::identity(), SudecOptions{});
  double need = 0;
  for (int u = 0; u <= 10; ++u) need = std::max(need, (1.0 + u * u) * std::exp(-1.0 * u));
  CHECK(required_constant(weighted, 5.0, 1.0, 1.0) == doctest::Approx(need).epsilon(1e-9));
}

TEST_CASE("synthetic exponential eigenvector") {
  auto space = fixtures::path(101);
  const Site center = *space->find({10, 0, 0});
  Eigen::MatrixXd v(101, 1);
  for (Site x = 0; x < 101; ++x) v(x, 0) = std::exp(-0.5 * space->distance(x, center));
  auto b = basis_from_vectors(space, v, WeightOperator::lattice_polynomial(*space, 1.0));
  const double peak = b.vectors(center, 0);
  DecayParams p{0.1, 1.0, 0.0};

  // At the smallest admissible constant the fitted rate is the true one.
  auto tight = sule_fit(b, {0}, p, EnvelopeOptions{peak});
  CHECK(tight.sigma_min >= 0.45);
  CHECK(tight.sigma_min <= 0.5 + 1e-9);

  // The default cap adds at most log(C_cap/peak)/r_max on a finite support.
  auto capped = sule_fit(b, {0}, p);
  const int r_max = space->eccentricity(center);
  CHECK(capped.sigma_min >= 0.45);
  CHECK(capped.sigma_min <= 0.5 + std::log(10.0 / peak) / r_max + 1e-9);
  CHECK(capped.centers[0].x_phi == center);
}

TEST_CASE("free Laplacian fails SUDEC") {
  auto sd = fixtures::laplacian(fixtures::path(128));
  auto w = full_window(sd);
  auto b = basis_view(sd, w);
  auto r = sudec_check(b, all_columns(b), DecayParams{0.05, 1.0, 0.01});
  CHECK(r.fit.sigma_at_required_zeta < 0.02);
  CHECK_FALSE(r.fit.verdict);
}

TEST_CASE("Anderson SUDEC and SULE certify") {
  AndersonFixture f;
  auto b = basis_view(f.sd, f.window);
  DecayParams p{0.05, 1.0, 0.3};
  auto sule = sule_fit(b, all_columns(b), p);
  CHECK(sule.fit.verdict);
  CHECK(sule.fit.violations == 0);
  auto sudec = sudec_check(b, all_columns(b), p);
  CHECK(sudec.fit.verdict);
  CHECK(sudec.fit.violations == 0);
}

TEST_CASE("rate functions") {
  AndersonFixture f;
  auto b = basis_view(f.sd, f.window);
  DecayParams p{0.05, 1.0, 0.3};
  auto id = sudec_check(b, all_columns(b), p, RateFunction::identity());
  auto one = sudec_check(b, all_columns(b), p, RateFunction::one());
  CHECK(id.rate == "identity");
  CHECK(one.rate == "one");
  // alpha <= 1, so the constant-rate form needs the smaller constant.
  CHECK(one.fit.sigma_at_required_zeta >= id.fit.sigma_at_required_zeta - 1e-12);
}

TEST_CASE("pair subsample is deterministic") {
  auto space = SiteSpace::lattice_box(1, 200);
  bool sub = false;
  auto a = sample_pairs(space, 1000, 7, &sub);
  auto b = sample_pairs(space, 1000, 7);
  CHECK(sub);
  CHECK(a == b);
  CHECK(a.size() <= 1000);
  auto all = sample_pairs(space, 1000000, 7, &sub);
  CHECK_FALSE(sub);
  CHECK(all.size() == 200u * 200u);
}

TEST_CASE("SUDEC+ on simple spectra") {
  AndersonFixture f;
  auto groups = window_groups(f.sd, f.window);
  auto b = basis_view(f.sd, f.window);
  DecayParams p{0.05, 1.0, 0.3};
  auto plus = sudec_plus_check(f.sd, groups, p, 1.0);
  auto plain = sudec_check(b, all_columns(b), p);
  CHECK(plus.sudec_plus.verdict == plain.fit.verdict);
  CHECK(plus.sudec_plus.sigma_at_required_zeta ==
        doctest::Approx(plain.fit.sigma_at_required_zeta).epsilon(1e-10));

  // Group by group as well.
  for (std::size_t g = 0; g < groups.size(); g += 9) {
    auto one = sudec_plus_check(f.sd, {groups[g]}, p, 1.0);
    auto single = sudec_check(b, {groups[g]}, p);
    CHECK(one.sudec_plus.verdict == single.fit.verdict);
  }
}

TEST_CASE("SUDEC+ pass implies the projector profile bound") {
  AndersonFixture f;
  DecayParams p{0.05, 1.0, 0.3};
  auto plus = sudec_plus_check(f.sd, window_groups(f.sd, f.window), p, 1.0);
  REQUIRE(plus.sudec_plus.verdict);
  auto prof = sulp_profile(f.sd, f.window, f.u, DecayParams{2 * 0.05, 1.0, 0.0});
  CHECK(std::isfinite(prof.required_c));
  CHECK(prof.fit.violations == 0);
}

TEST_CASE("alpha center products") {
  auto space = fixtures::path(21);
  std::vector<LocalizationCenter> centers;
  for (int x : {0, 3, -7, 10}) {
    LocalizationCenter c;
    c.x_phi = *space->find({x, 0, 0});
    c.alpha = 1.0 / (1.0 + x * x);
    centers.push_back(c);
  }
  auto r = alpha_center_bound(*space, centers, 1.0);
  for (double v : r.products) CHECK(v == doctest::Approx(1.0));
  CHECK(r.verdict);

  AndersonFixture f;
  auto b = basis_view(f.sd, f.window);
  auto sule = sule_fit(b, all_columns(b), DecayParams{0.05, 1.0, 0.3});
  auto fx = alpha_center_bound(*f.sd.space, sule.centers, 1.0);
  CHECK(fx.minimum >= 0.1);
}

TEST_CASE("center cluster check") {
  auto space = SiteSpace::lattice_box(1, 30);
  Eigen::MatrixXd single = Eigen::MatrixXd::Zero(30, 1);
  single(4, 0) = 1;
  auto r = center_cluster_check(space, single, 0.1);
  CHECK(r.skipped);
  CHECK(r.c_delta == 0.0);

  Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(30, 2);
  pair(5, 0) = 1;
  pair(25, 1) = 1;
  auto q = center_cluster_check(space, pair, 0.1);
  const int d = space.distance(5, 25);
  CHECK(q.c_delta >= d - 0.1 * std::max(space.norm(5), space.norm(25)) - 1e-12);
}

TEST_CASE("center census") {
  auto b = delta_basis(41);
  std::vector<Site> centers(41);
  std::iota(centers.begin(), centers.end(), 0);
  auto c = center_census(b, centers, 1.0, 1.0);
  for (std::size_t i = 0; i < c.radii.size(); ++i) {
    const int L = c.radii[i];
    CHECK(c.n_l[i] == std::min<std::size_t>(2 * L + 1, 41));
    CHECK(c.ntilde_l[i] <= c.n_l[i]);
  }

  AndersonFixture f;
  auto bv = basis_view(f.sd, f.window);
  auto plus = sudec_plus_check(f.sd, window_groups(f.sd, f.window), DecayParams{0.05, 1.0, 0.3}, 1.0);
  auto census = center_census(bv, plus.centers, 1.0, alpha_total(f.sd, window_groups(f.sd, f.window)));
  CHECK(census.order_holds);
  CHECK(census.c_order > 0);
  CHECK(census.count_violations == 0);
  for (std::size_t i = 0; i < census.radii.size(); ++i) CHECK(census.ntilde_l[i] <= census.n_l[i]);
  // N_L / L bounded in one dimension.
  for (std::size_t i = 0; i < census.radii.size(); ++i)
    if (census.radii[i] >= 1) CHECK(double(census.n_l[i]) / census.radii[i] <= 3.0 + 1e-12);
}

TEST_CASE("mixed exponents") {
  SUBCASE("equal exponents reduce to the plain fit") {
    AndersonFixture f;
    auto b = basis_view(f.sd, f.window);
    auto pts = sule_points(b, all_columns(b));
    EnvelopeRequest req{"SULE", 0.05, 0.5, 0.05, 10.0};
    auto plain = fit_envelope(points_from(pts), req);
    req.allowance_zeta = 0.5;
    auto same = fit_envelope(points_from(pts), req);
    CHECK(same.sigma_hat == plain.sigma_hat);
    CHECK(same.c_hat == plain.c_hat);
    CHECK(same.verdict == plain.verdict);
  }

  SUBCASE("allowance growing at the larger exponent") {
    // phi_n = delta_n + delta_{-n} / 2: a far bump whose constant grows like e^{c n}.
    auto space = fixtures::path(801);
    std::vector<int> ns;
    for (int n = 10; n <= 400; n += 10) ns.push_back(n);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(801, ns.size());
    for (std::size_t k = 0; k < ns.size(); ++k) {
      v(*space->find({ns[k], 0, 0}), k) = 1.0;
      v(*space->find({-ns[k], 0, 0}), k) = 0.5;
    }
    auto b = basis_from_vectors(space, v, WeightOperator::lattice_polynomial(*space, 1.0));
    auto sule = mixed_exponent_check(b, all_columns(b), DecayParams{0.5, 0.5, 0.1, 1.0});
    CHECK(sule.sule_prime.fit.verdict);
    CHECK_FALSE(sule.sule_plain.fit.verdict);
    auto sudec = mixed_exponent_check(b, all_columns(b), DecayParams{0.5, 0.5, 0.7, 1.0});
    CHECK(sudec.sudec_prime.fit.verdict);
    CHECK_FALSE(sudec.sudec_plain.fit.verdict);
  }

  SUBCASE("Anderson fixture") {
    AndersonFixture f;
    auto b = basis_view(f.sd, f.window);
    auto r = mixed_exponent_check(b, all_columns(b), DecayParams{0.05, 0.5, 0.3, 1.0});
    CHECK(r.sudec_prime.fit.verdict);
    CHECK(r.sule_prime.fit.verdict);
    CHECK(r.sudec_prime.fit.violations == 0);
    CHECK(r.sule_prime.fit.violations == 0);
  }

  CHECK_THROWS_AS(DecayParams({0.1, 0.5, 0.1, 0.5}).validate(), ParameterError);
}

}
