#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "loclab/geometry.hpp"

using namespace loclab;

TEST_SUITE("geometry") {

TEST_CASE("lattice box in one dimension") {
  auto s = SiteSpace::lattice_box(1, 5);
  CHECK(s.size() == 5);
  auto lo = s.find({-2, 0, 0});
  auto hi = s.find({2, 0, 0});
  REQUIRE(lo);
  REQUIRE(hi);
  CHECK(s.distance(*lo, *hi) == 4);
  CHECK_FALSE(s.find({3, 0, 0}));
  CHECK(s.norm(*s.origin()) == 0);
}

TEST_CASE("lattice metric is the sup norm") {
  auto s = SiteSpace::lattice_box(2, 7);
  for (Site a = 0; a < s.size(); ++a)
    for (Site b = 0; b < s.size(); ++b) {
      const auto& ca = s.coord(a);
      const auto& cb = s.coord(b);
      CHECK(s.distance(a, b) == std::max(std::abs(ca[0] - cb[0]), std::abs(ca[1] - cb[1])));
    }
}

TEST_CASE("graph bridge distance matches BFS") {
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {4, 5}, {5, 6}, {6, 7}, {3, 4}};
  auto g = SiteSpace::graph(8, edges);
  CHECK(g.size() == 8);
  for (Site a = 0; a < 8; ++a) {
    auto d = fixtures::bfs(8, edges, a);
    for (Site b = 0; b < 8; ++b) CHECK(g.distance(a, b) == d[b]);
  }
  CHECK(g.distance(0, 7) == 7);
}

TEST_CASE("disconnected graph is a construction error") {
  CHECK_THROWS_AS(SiteSpace::graph(4, {{0, 1}, {2, 3}}), ConstructionError);
}

TEST_CASE("nonpositive dimensions are parameter errors") {
  CHECK_THROWS_AS(SiteSpace::lattice_box(0, 3), ParameterError);
  CHECK_THROWS_AS(SiteSpace::lattice_box(1, 0), ParameterError);
  CHECK_THROWS_AS(SiteSpace::linear(0), ParameterError);
  CHECK_THROWS_AS(SiteSpace::graph(0, {}), ParameterError);
}

TEST_CASE("linear basis metric") {
  auto s = SiteSpace::linear(10);
  for (Site i = 0; i < 10; ++i)
    for (Site j = 0; j < 10; ++j)
      CHECK(s.distance(i, j) == std::abs(static_cast<int>(i) - static_cast<int>(j)));
}

TEST_CASE("indicator boxes") {
  auto s = SiteSpace::lattice_box(2, 9);
  Site c = *s.find({0, 0, 0});
  CHECK(indicator(s, c, 3).size() == 9);
  CHECK(indicator(s, c, 1) == SiteSet{c});

  Site corner = *s.find({-4, -4, 0});
  auto clipped = indicator(s, corner, 3);
  // Enumeration oracle: box of side 3 around the corner, clipped to the space.
  std::size_t expect = 0;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      if (s.find({-4 + dx, -4 + dy, 0})) ++expect;
  CHECK(clipped.size() == expect);
  CHECK(clipped.size() < 9);
  CHECK_THROWS_AS(indicator(s, s.size(), 1), ParameterError);
}

TEST_CASE("single-site boxes partition the space") {
  auto s = SiteSpace::lattice_box(2, 6);
  std::vector<int> hits(s.size(), 0);
  for (Site x = 0; x < s.size(); ++x)
    for (Site y : indicator(s, x, 1)) ++hits[y];
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST_CASE("sphere census on a path") {
  auto s = SiteSpace::lattice_box(1, 41);
  auto g = sphere_census(s, *s.origin(), 15);
  for (std::size_t i = 0; i < g.radii.size(); ++i)
    if (g.radii[i] >= 1) CHECK(g.sphere_counts[i] == 2);
}

TEST_CASE("sphere census in Z^2 matches enumeration") {
  auto s = SiteSpace::lattice_box(2, 21);
  Site u = *s.find({0, 0, 0});
  auto g = sphere_census(s, u, 8);
  for (std::size_t i = 0; i < g.radii.size(); ++i) {
    const int L = g.radii[i];
    std::size_t count = 0;
    for (int x = -10; x <= 10; ++x)
      for (int y = -10; y <= 10; ++y)
        if (std::max(std::abs(x), std::abs(y)) == L) ++count;
    CHECK(g.sphere_counts[i] == count);
    if (L >= 1) CHECK(count == static_cast<std::size_t>(8 * L));
  }
}

TEST_CASE("binary tree fails moderate growth") {
  auto t = binary_tree(10);
  CHECK(t.size() == 2047);
  auto g = sphere_census(t, t.root(), 10);
  for (std::size_t i = 0; i < g.radii.size(); ++i)
    CHECK(g.sphere_counts[i] == (std::size_t{1} << g.radii[i]));
  CHECK(g.beta_defined);
  CHECK(g.beta_fit >= 1.0);
  CHECK_FALSE(g.passes_moderate_growth);
}

TEST_CASE("quadratic layered tree passes moderate growth") {
  std::vector<std::size_t> levels{1};
  for (std::size_t L = 1; L <= 30; ++L) levels.push_back(L * L);
  auto t = layered_tree(levels);
  auto g = sphere_census(t, t.root(), 30);
  CHECK(g.beta_defined);
  CHECK(g.beta_fit < 1.0);
  CHECK(g.passes_moderate_growth);
}

TEST_CASE("census beyond the diameter is flagged") {
  auto s = SiteSpace::lattice_box(1, 5);
  auto g = sphere_census(s, *s.origin(), 6);
  CHECK(g.beyond_diameter);
  CHECK(g.sphere_counts.back() == 0);
}

TEST_CASE("spheres partition connected spaces") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng() % 30;
    std::vector<Edge> edges;
    for (Site v = 1; v < n; ++v) edges.push_back({rng() % v, v});
    for (int extra = 0; extra < 5; ++extra) {
      Site a = rng() % n, b = rng() % n;
      if (a != b) edges.push_back({std::min(a, b), std::max(a, b)});
    }
    auto g = SiteSpace::graph(n, edges);
    Site u = rng() % n;
    auto census = sphere_census(g, u, static_cast<int>(n));
    std::size_t total = 1;
    for (std::size_t i = 0; i < census.radii.size(); ++i)
      if (census.radii[i] >= 1) total += census.sphere_counts[i];
    CHECK(total == n);
  }
}

TEST_CASE("metric is invariant under relabeling") {
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {1, 4}, {4, 5}, {5, 3}};
  const std::size_t n = 6;
  std::vector<Site> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Edge> relabeled;
  for (auto [a, b] : edges) relabeled.push_back({perm[a], perm[b]});
  auto g = SiteSpace::graph(n, edges);
  auto h = SiteSpace::graph(n, relabeled);
  for (Site a = 0; a < n; ++a)
    for (Site b = 0; b < n; ++b) CHECK(g.distance(a, b) == h.distance(perm[a], perm[b]));
}

TEST_CASE("edge list reader") {
  const auto path = std::filesystem::temp_directory_path() / "loclab_edges.txt";
  {
    std::ofstream out(path);
    out << "# square\n0 1\n1 2\n2 3\n3 0\n";
  }
  std::size_t n = 0;
  auto edges = read_edge_list(path, &n);
  CHECK(edges.size() == 4);
  CHECK(n == 4);
  std::filesystem::remove(path);
}

}
