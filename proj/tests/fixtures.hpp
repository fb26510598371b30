// Shared fixtures and independent oracles for the unit tests.
#pragma once

#include <cmath>
#include <deque>
#include <memory>
#include <vector>

#include "loclab/diagnostics.hpp"
#include "loclab/operators.hpp"
#include "loclab/spectral.hpp"

namespace fixtures {

inline loclab::SpacePtr path(int n) {
  return std::make_shared<const loclab::SiteSpace>(loclab::SiteSpace::lattice_box(1, n));
}

inline loclab::SpectralData anderson(int side, double width, std::uint64_t seed, double kappa = 1.0) {
  auto space = path(side);
  auto sd = loclab::diagonalize(loclab::build_anderson(space, width, seed));
  loclab::assign_alpha(sd, loclab::WeightOperator::lattice_polynomial(*space, kappa));
  return sd;
}

inline loclab::SpectralData laplacian(const loclab::SpacePtr& space, double kappa = 1.0) {
  auto sd = loclab::diagonalize(loclab::build_laplacian(space));
  loclab::assign_alpha(sd, loclab::WeightOperator::lattice_polynomial(*space, kappa));
  return sd;
}

// Plain adjacency-list BFS, independent of SiteSpace's distance table.
inline std::vector<int> bfs(std::size_t n, const std::vector<loclab::Edge>& edges, std::size_t src) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> d(n, -1);
  std::deque<std::size_t> q{src};
  d[src] = 0;
  while (!q.empty()) {
    auto v = q.front();
    q.pop_front();
    for (auto w : adj[v])
      if (d[w] < 0) {
        d[w] = d[v] + 1;
        q.push_back(w);
      }
  }
  return d;
}

}  // namespace fixtures
