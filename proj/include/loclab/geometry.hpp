// Site spaces: lattice boxes (sup-norm metric), connected graphs (hop
// distance) and linearly indexed bases, plus sphere-growth diagnostics.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace loclab {

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Site = std::size_t;
using Coord = std::array<int, 3>;
using Edge = std::pair<Site, Site>;
using SiteSet = std::vector<Site>;

enum class SpaceKind { Lattice, Graph, Linear };

std::string to_string(SpaceKind kind);

// Construction parameters; which fields matter depends on `kind`.
struct SpaceSpec {
  SpaceKind kind = SpaceKind::Lattice;
  int dim = 1;
  int side = 1;
  Coord center{0, 0, 0};
  std::size_t vertices = 0;
  std::vector<Edge> edges;
  Site root = 0;
  std::size_t n = 1;
};

class SiteSpace {
 public:
  // Sites c + [-floor(L/2), -floor(L/2) + L - 1]^d, nearest-neighbour bonds.
  static SiteSpace lattice_box(int dim, int side, Coord center = {0, 0, 0});
  // Arbitrary sites of Z^d with explicit bonds (used for embedded clusters).
  static SiteSpace lattice_sites(int dim, std::vector<Coord> coords,
                                 std::vector<Edge> bonds);
  static SiteSpace graph(std::size_t vertices, std::vector<Edge> edges,
                         Site root = 0);
  static SiteSpace linear(std::size_t n);

  SpaceKind kind() const { return kind_; }
  std::size_t size() const { return size_; }
  int dim() const { return dim_; }
  // Side length for full lattice boxes, 0 otherwise.
  int box_side() const { return box_side_; }
  Coord box_center() const { return box_center_; }
  Site root() const { return root_; }

  int distance(Site a, Site b) const;
  // |x|: sup-norm of the coordinate, hop distance to the root, or the index.
  int norm(Site x) const;
  const Coord& coord(Site x) const { return coords_.at(x); }
  std::optional<Site> find(const Coord& c) const;
  // The site with norm 0, when present.
  std::optional<Site> origin() const;

  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<SiteSet>& neighbors() const { return neighbors_; }
  std::size_t degree(Site x) const { return neighbors_.at(x).size(); }
  int eccentricity(Site u) const;
  int diameter() const;

  void require_site(Site x) const;

 private:
  SiteSpace() = default;
  void finish_adjacency();
  void build_distance_table();

  SpaceKind kind_ = SpaceKind::Lattice;
  std::size_t size_ = 0;
  int dim_ = 1;
  int box_side_ = 0;
  Coord box_center_{0, 0, 0};
  Site root_ = 0;
  std::vector<Coord> coords_;
  std::unordered_map<std::uint64_t, Site> coord_index_;
  std::vector<Edge> edges_;
  std::vector<SiteSet> neighbors_;
  std::vector<std::uint32_t> hops_;  // row-major n*n, graphs only
};

using SpacePtr = std::shared_ptr<const SiteSpace>;

SiteSpace build_site_space(const SpaceSpec& spec);

// Rooted trees, root = vertex 0, vertices numbered level by level.
SiteSpace binary_tree(int depth);
// level_sizes[L] vertices at depth L (level_sizes[0] must be 1); children are
// spread evenly over the parents of the previous level.
SiteSpace layered_tree(const std::vector<std::size_t>& level_sizes);

// Box Lambda_L(x) clipped to the space; L == 1 gives {x}.
SiteSet indicator(const SiteSpace& space, Site x, int side);

struct GrowthProfile {
  std::vector<int> radii;
  std::vector<std::size_t> sphere_counts;
  // Slope of log log N_L against log L over radii with N_L >= 2.
  double beta_fit = 0.0;
  bool beta_defined = false;
  // Smallest beta with N_L <= exp(L^beta) for every L >= 2 in range.
  double beta_envelope = 0.0;
  bool passes_moderate_growth = false;
  // Radii past the eccentricity of u, where the counts are necessarily zero.
  bool beyond_diameter = false;
};

GrowthProfile sphere_census(const SiteSpace& space, Site u, int max_radius);

// Edge list: one "u v" pair per line, 0-based; '#' starts a comment.
std::vector<Edge> read_edge_list(const std::filesystem::path& path,
                                 std::size_t* vertex_count = nullptr);

}  // namespace loclab
