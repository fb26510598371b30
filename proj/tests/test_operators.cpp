#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fixtures.hpp"

using namespace loclab;

TEST_SUITE("operators") {

TEST_CASE("Dirichlet path Laplacian spectrum") {
  auto sd = diagonalize(build_dirichlet_laplacian(fixtures::path(3)));
  const double expect[] = {2 - std::sqrt(2.0), 2, 2 + std::sqrt(2.0)};
  for (int k = 0; k < 3; ++k) {
    CHECK(sd.eigenvalues[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    CHECK(sd.eigenvalues[k] ==
          doctest::Approx(2 - 2 * std::cos((k + 1) * std::numbers::pi / 4)).epsilon(1e-12));
  }
}

TEST_CASE("free path Laplacian spectrum") {
  auto sd = diagonalize(build_laplacian(fixtures::path(3)));
  for (int k = 0; k < 3; ++k)
    CHECK(sd.eigenvalues[k] == doctest::Approx(2 - 2 * std::cos(k * std::numbers::pi / 3)).epsilon(1e-12));
}

TEST_CASE("Dirichlet boundary needs a lattice") {
  auto g = std::make_shared<const SiteSpace>(SiteSpace::graph(2, {{0, 1}}));
  CHECK_THROWS_AS(build_dirichlet_laplacian(g), ParameterError);
  auto sq = build_dirichlet_laplacian(std::make_shared<const SiteSpace>(SiteSpace::lattice_box(2, 3)));
  for (Site x = 0; x < 9; ++x) CHECK(sq.entry(x, x) == 4.0);
}

TEST_CASE("single site Laplacian is zero") {
  auto h = build_laplacian(fixtures::path(1));
  CHECK(h.dimension() == 1);
  CHECK(h.entry(0, 0) == 0.0);
}

TEST_CASE("two-site Laplacian") {
  auto h = build_laplacian(fixtures::path(2));
  CHECK(h.entry(0, 0) == 1.0);
  CHECK(h.entry(0, 1) == -1.0);
  auto sd = diagonalize(h);
  CHECK(sd.eigenvalues[0] == doctest::Approx(0).epsilon(1e-14));
  CHECK(sd.eigenvalues[1] == doctest::Approx(2).epsilon(1e-14));
}

TEST_CASE("Anderson with zero width is the Laplacian") {
  auto space = fixtures::path(20);
  CHECK(build_anderson(space, 0, 5).dense() == build_laplacian(space).dense());
}

TEST_CASE("Anderson determinism and seed dependence") {
  auto space = fixtures::path(30);
  auto a = build_anderson(space, 4, 1).dense();
  auto b = build_anderson(space, 4, 1).dense();
  auto c = build_anderson(space, 4, 2).dense();
  CHECK(a == b);
  bool diag_differs = false;
  for (int i = 0; i < 30; ++i) {
    if (a(i, i) != c(i, i)) diag_differs = true;
    for (int j = 0; j < 30; ++j)
      if (i != j) CHECK(a(i, j) == c(i, j));
  }
  CHECK(diag_differs);
  for (int i = 0; i < 30; ++i) CHECK(std::abs(a(i, i) - build_laplacian(space).entry(i, i)) <= 2.0);
  CHECK_THROWS_AS(build_anderson(space, -1, 1), ParameterError);
}

TEST_CASE("nested boxes share the potential") {
  auto small = SiteSpace::lattice_box(1, 10);
  auto big = SiteSpace::lattice_box(1, 40);
  for (Site x = 0; x < small.size(); ++x) {
    Site y = *big.find(small.coord(x));
    CHECK(anderson_potential(small, x, 4, 9) == anderson_potential(big, y, 4, 9));
  }
}

TEST_CASE("Hamiltonians are exactly symmetric and obey Gershgorin") {
  for (auto seed : {1u, 2u, 3u}) {
    auto space = std::make_shared<const SiteSpace>(SiteSpace::lattice_box(2, 6));
    auto h = build_anderson(space, 3, seed);
    Eigen::MatrixXd m = h.dense();
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    auto sd = diagonalize(h);
    auto [lo, hi] = h.gershgorin_interval();
    CHECK(sd.eigenvalues.minCoeff() >= lo - 1e-12);
    CHECK(sd.eigenvalues.maxCoeff() <= hi + 1e-12);
  }
}

TEST_CASE("cluster Laplacian of two 2-site copies") {
  auto base = SiteSpace::lattice_box(1, 2);
  auto sd = diagonalize(build_cluster_laplacian(base, 2, 5));
  auto grouped = group_projectors(sd, 1e-9);
  REQUIRE(grouped.groups.size() == 2);
  CHECK(grouped.groups[0].energy == doctest::Approx(0).epsilon(1e-12));
  CHECK(grouped.groups[0].multiplicity == 2);
  CHECK(grouped.groups[1].energy == doctest::Approx(2).epsilon(1e-12));
  CHECK(grouped.groups[1].multiplicity == 2);
}

TEST_CASE("cluster of single sites is the zero operator") {
  auto h = build_cluster_laplacian(SiteSpace::lattice_box(1, 1), 3, 4);
  CHECK(h.dimension() == 3);
  CHECK(h.dense().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cluster spectrum is independent of separation") {
  auto base = SiteSpace::lattice_box(1, 4);
  auto e0 = diagonalize(build_cluster_laplacian(base, 3, 6)).eigenvalues;
  for (int d : {10, 25, 60}) {
    auto e = diagonalize(build_cluster_laplacian(base, 3, d)).eigenvalues;
    CHECK((e - e0).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("cluster eigenvectors live on single copies") {
  auto layout = layout_clusters(SiteSpace::lattice_box(1, 4), 2, 12);
  auto sd = diagonalize(build_cluster_laplacian(SiteSpace::lattice_box(1, 4), 2, 12));
  for (Eigen::Index k = 0; k < sd.eigenvectors.cols(); ++k) {
    std::set<int> copies;
    for (Site x = 0; x < sd.dimension(); ++x)
      if (std::abs(sd.eigenvectors(x, k)) > 1e-14) copies.insert(layout.copy_of(x));
    CHECK(copies.size() == 1);
  }
}

TEST_CASE("overlapping copies are rejected") {
  CHECK_THROWS_AS(layout_clusters(SiteSpace::lattice_box(1, 4), 2, 0), ConstructionError);
}

TEST_CASE("lattice weight values") {
  auto s = SiteSpace::lattice_box(1, 9);
  auto w = WeightOperator::lattice_polynomial(s, 1.0);
  CHECK(w.values()[*s.find({0, 0, 0})] == doctest::Approx(1.0));
  CHECK(w.values()[*s.find({2, 0, 0})] == doctest::Approx(std::sqrt(5.0)));
  CHECK_THROWS_AS(WeightOperator::lattice_polynomial(s, 0.5), ParameterError);
  auto s2 = SiteSpace::lattice_box(2, 3);
  CHECK_THROWS_AS(WeightOperator::lattice_polynomial(s2, 1.0), ParameterError);
}

TEST_CASE("graph exponential weight") {
  auto t = binary_tree(4);
  auto w = WeightOperator::graph_exponential(t, 0.5);
  for (Site x = 0; x < t.size(); ++x)
    if (t.norm(x) == 4) CHECK(w.values()[x] == doctest::Approx(std::exp(2.0)));
  CHECK_THROWS_AS(WeightOperator::graph_exponential(t, 1.5), ParameterError);
}

TEST_CASE("Hamiltonian export round trip") {
  auto h = build_anderson(fixtures::path(12), 2.5, 4);
  const auto path = std::filesystem::temp_directory_path() / "loclab_h.csv";
  write_hamiltonian(h, path);
  auto back = read_hamiltonian(path);
  CHECK(back.dense() == h.dense());
  CHECK(back.space().size() == 12);
  std::filesystem::remove(path);
}

}
