#include "loclab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace loclab {

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

std::uint64_t pack(const Coord& c) {
  auto enc = [](int v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1FFFFFu; };
  return enc(c[0]) | (enc(c[1]) << 21) | (enc(c[2]) << 42);
}

int box_low(int side) { return -(side / 2); }

std::vector<std::uint32_t> bfs(const std::vector<SiteSet>& nbrs, Site src) {
  std::vector<std::uint32_t> dist(nbrs.size(), kUnreached);
  std::deque<Site> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    Site v = queue.front();
    queue.pop_front();
    for (Site w : nbrs[v]) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

}  // namespace

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Lattice: return "lattice";
    case SpaceKind::Graph: return "graph";
    case SpaceKind::Linear: return "linear";
  }
  return "unknown";
}

SiteSpace SiteSpace::lattice_box(int dim, int side, Coord center) {
  if (dim < 1 || dim > 3) throw ParameterError("lattice dimension must be 1, 2 or 3");
  if (side < 1) throw ParameterError("lattice side length must be >= 1");
  for (int i = dim; i < 3; ++i) center[i] = 0;
  SiteSpace s;
  s.kind_ = SpaceKind::Lattice;
  s.dim_ = dim;
  s.box_side_ = side;
  s.box_center_ = center;
  const int lo = box_low(side);
  const int n1 = side;
  const int n2 = dim >= 2 ? side : 1;
  const int n3 = dim >= 3 ? side : 1;
  // Lexicographic order with the first coordinate varying slowest.
  for (int a = 0; a < n1; ++a)
    for (int b = 0; b < n2; ++b)
      for (int c = 0; c < n3; ++c) {
        Coord x{center[0] + lo + a, dim >= 2 ? center[1] + lo + b : 0,
                dim >= 3 ? center[2] + lo + c : 0};
        s.coord_index_.emplace(pack(x), s.coords_.size());
        s.coords_.push_back(x);
      }
  s.size_ = s.coords_.size();
  for (Site i = 0; i < s.size_; ++i) {
    for (int axis = 0; axis < dim; ++axis) {
      Coord y = s.coords_[i];
      ++y[axis];
      if (auto j = s.find(y)) s.edges_.emplace_back(i, *j);
    }
  }
  s.finish_adjacency();
  return s;
}

SiteSpace SiteSpace::lattice_sites(int dim, std::vector<Coord> coords,
                                   std::vector<Edge> bonds) {
  if (dim < 1 || dim > 3) throw ParameterError("lattice dimension must be 1, 2 or 3");
  if (coords.empty()) throw ParameterError("lattice site list is empty");
  SiteSpace s;
  s.kind_ = SpaceKind::Lattice;
  s.dim_ = dim;
  for (auto& c : coords) {
    for (int i = dim; i < 3; ++i) c[i] = 0;
    if (!s.coord_index_.emplace(pack(c), s.coords_.size()).second)
      throw ConstructionError("duplicate lattice site in site list");
    s.coords_.push_back(c);
  }
  s.size_ = s.coords_.size();
  for (const auto& [a, b] : bonds) {
    if (a >= s.size_ || b >= s.size_ || a == b)
      throw ConstructionError("bond references an invalid site");
    int l1 = 0;
    for (int i = 0; i < 3; ++i) l1 += std::abs(s.coords_[a][i] - s.coords_[b][i]);
    if (l1 != 1) throw ConstructionError("bond joins sites that are not lattice neighbours");
    s.edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  s.finish_adjacency();
  return s;
}

SiteSpace SiteSpace::graph(std::size_t vertices, std::vector<Edge> edges, Site root) {
  if (vertices < 1) throw ParameterError("graph needs at least one vertex");
  if (root >= vertices) throw ParameterError("graph root outside the vertex range");
  SiteSpace s;
  s.kind_ = SpaceKind::Graph;
  s.size_ = vertices;
  s.root_ = root;
  s.coords_.resize(vertices, Coord{0, 0, 0});
  for (Site v = 0; v < vertices; ++v) s.coords_[v][0] = static_cast<int>(v);
  for (auto [a, b] : edges) {
    if (a >= vertices || b >= vertices)
      throw ConstructionError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") references a vertex outside [0," +
                              std::to_string(vertices) + ")");
    if (a == b) continue;
    s.edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  s.finish_adjacency();
  s.build_distance_table();
  return s;
}

SiteSpace SiteSpace::linear(std::size_t n) {
  if (n < 1) throw ParameterError("linear basis size must be >= 1");
  SiteSpace s;
  s.kind_ = SpaceKind::Linear;
  s.size_ = n;
  s.coords_.resize(n, Coord{0, 0, 0});
  for (Site i = 0; i < n; ++i) {
    s.coords_[i][0] = static_cast<int>(i);
    s.coord_index_.emplace(pack(s.coords_[i]), i);
    if (i + 1 < n) s.edges_.emplace_back(i, i + 1);
  }
  s.finish_adjacency();
  return s;
}

void SiteSpace::finish_adjacency() {
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  neighbors_.assign(size_, {});
  for (auto [a, b] : edges_) {
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& n : neighbors_) std::sort(n.begin(), n.end());
}

void SiteSpace::build_distance_table() {
  hops_.assign(size_ * size_, kUnreached);
  for (Site src = 0; src < size_; ++src) {
    auto d = bfs(neighbors_, src);
    if (src == 0) {
      std::vector<Site> stranded;
      for (Site v = 0; v < size_; ++v)
        if (d[v] == kUnreached) stranded.push_back(v);
      if (!stranded.empty()) {
        // Name the component of the first unreachable vertex.
        auto comp = bfs(neighbors_, stranded.front());
        std::ostringstream msg;
        std::size_t count = 0;
        msg << "graph is disconnected: component {";
        for (Site v = 0; v < size_; ++v) {
          if (comp[v] == kUnreached) continue;
          if (count < 8) msg << (count ? ", " : "") << v;
          ++count;
        }
        if (count > 8) msg << ", ...";
        msg << "} (" << count << " vertices) is unreachable from vertex 0";
        throw ConstructionError(msg.str());
      }
    }
    std::copy(d.begin(), d.end(), hops_.begin() + static_cast<std::ptrdiff_t>(src * size_));
  }
}

void SiteSpace::require_site(Site x) const {
  if (x >= size_)
    throw ParameterError("site " + std::to_string(x) + " outside space of " +
                         std::to_string(size_) + " sites");
}

int SiteSpace::distance(Site a, Site b) const {
  switch (kind_) {
    case SpaceKind::Lattice: {
      const auto& p = coords_[a];
      const auto& q = coords_[b];
      return std::max({std::abs(p[0] - q[0]), std::abs(p[1] - q[1]), std::abs(p[2] - q[2])});
    }
    case SpaceKind::Graph:
      return static_cast<int>(hops_[a * size_ + b]);
    case SpaceKind::Linear:
      return a > b ? static_cast<int>(a - b) : static_cast<int>(b - a);
  }
  return 0;
}

int SiteSpace::norm(Site x) const {
  switch (kind_) {
    case SpaceKind::Lattice: {
      const auto& p = coords_[x];
      return std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])});
    }
    case SpaceKind::Graph:
      return distance(x, root_);
    case SpaceKind::Linear:
      return static_cast<int>(x);
  }
  return 0;
}

std::optional<Site> SiteSpace::find(const Coord& c) const {
  if (kind_ == SpaceKind::Graph) {
    if (c[0] >= 0 && static_cast<std::size_t>(c[0]) < size_ && c[1] == 0 && c[2] == 0)
      return static_cast<Site>(c[0]);
    return std::nullopt;
  }
  auto it = coord_index_.find(pack(c));
  if (it == coord_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Site> SiteSpace::origin() const {
  for (Site x = 0; x < size_; ++x)
    if (norm(x) == 0) return x;
  return std::nullopt;
}

int SiteSpace::eccentricity(Site u) const {
  require_site(u);
  int e = 0;
  for (Site x = 0; x < size_; ++x) e = std::max(e, distance(u, x));
  return e;
}

int SiteSpace::diameter() const {
  if (kind_ == SpaceKind::Linear) return static_cast<int>(size_) - 1;
  if (kind_ == SpaceKind::Lattice && box_side_ > 0) return box_side_ - 1;
  int d = 0;
  for (Site u = 0; u < size_; ++u) d = std::max(d, eccentricity(u));
  return d;
}

SiteSpace build_site_space(const SpaceSpec& spec) {
  switch (spec.kind) {
    case SpaceKind::Lattice: return SiteSpace::lattice_box(spec.dim, spec.side, spec.center);
    case SpaceKind::Graph: return SiteSpace::graph(spec.vertices, spec.edges, spec.root);
    case SpaceKind::Linear: return SiteSpace::linear(spec.n);
  }
  throw ParameterError("unknown space kind");
}

SiteSpace binary_tree(int depth) {
  if (depth < 0) throw ParameterError("tree depth must be >= 0");
  std::vector<std::size_t> levels;
  for (int l = 0; l <= depth; ++l) levels.push_back(std::size_t{1} << l);
  return layered_tree(levels);
}

SiteSpace layered_tree(const std::vector<std::size_t>& level_sizes) {
  if (level_sizes.empty() || level_sizes[0] != 1)
    throw ParameterError("a rooted tree has exactly one vertex at level 0");
  std::vector<Edge> edges;
  std::size_t prev_start = 0;
  std::size_t start = 1;
  for (std::size_t l = 1; l < level_sizes.size(); ++l) {
    const std::size_t parents = level_sizes[l - 1];
    const std::size_t count = level_sizes[l];
    if (count < parents)
      throw ParameterError("tree levels must not shrink (every vertex keeps a child)");
    for (std::size_t i = 0; i < count; ++i)
      edges.emplace_back(prev_start + i * parents / count, start + i);
    prev_start = start;
    start += count;
  }
  return SiteSpace::graph(start, std::move(edges), 0);
}

SiteSet indicator(const SiteSpace& space, Site x, int side) {
  space.require_site(x);
  if (side < 1) throw ParameterError("box side must be >= 1");
  SiteSet out;
  if (side == 1) return {x};
  if (space.kind() == SpaceKind::Graph) {
    const int radius = side / 2;
    for (Site y = 0; y < space.size(); ++y)
      if (space.distance(x, y) <= radius) out.push_back(y);
    return out;
  }
  const int lo = box_low(side);
  const int hi = lo + side - 1;
  const auto& cx = space.coord(x);
  const int dim = space.kind() == SpaceKind::Linear ? 1 : space.dim();
  for (Site y = 0; y < space.size(); ++y) {
    const auto& cy = space.coord(y);
    bool inside = true;
    for (int i = 0; i < dim && inside; ++i) {
      const int off = cy[i] - cx[i];
      inside = off >= lo && off <= hi;
    }
    if (inside) out.push_back(y);
  }
  return out;
}

GrowthProfile sphere_census(const SiteSpace& space, Site u, int max_radius) {
  space.require_site(u);
  if (max_radius < 1) throw ParameterError("sphere census needs max radius >= 1");
  GrowthProfile g;
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_radius) + 1, 0);
  for (Site x = 0; x < space.size(); ++x) {
    const int d = space.distance(u, x);
    if (d >= 1 && d <= max_radius) ++counts[static_cast<std::size_t>(d)];
  }
  g.beyond_diameter = max_radius > space.eccentricity(u);
  for (int L = 1; L <= max_radius; ++L) {
    g.radii.push_back(L);
    g.sphere_counts.push_back(counts[static_cast<std::size_t>(L)]);
  }

  // Least-squares slope of log log N_L against log L where N_L >= 2.
  long double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < g.radii.size(); ++i) {
    if (g.sphere_counts[i] < 2) continue;
    const long double x = std::log(static_cast<long double>(g.radii[i]));
    const long double y = std::log(std::log(static_cast<long double>(g.sphere_counts[i])));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  const long double denom = static_cast<long double>(m) * sxx - sx * sx;
  if (m >= 2 && denom > 0) {
    g.beta_fit = static_cast<double>((static_cast<long double>(m) * sxy - sx * sy) / denom);
    g.beta_defined = true;
  }
  for (std::size_t i = 0; i < g.radii.size(); ++i) {
    if (g.radii[i] < 2 || g.sphere_counts[i] < 3) continue;
    const double b = std::log(std::log(static_cast<double>(g.sphere_counts[i]))) /
                     std::log(static_cast<double>(g.radii[i]));
    g.beta_envelope = std::max(g.beta_envelope, b);
  }
  g.passes_moderate_growth = g.beta_defined && g.beta_fit < 1.0;
  return g;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path, std::size_t* vertex_count) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open edge list " + path.string());
  std::vector<Edge> edges;
  std::size_t max_vertex = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long a = 0, b = 0;
    if (!(ls >> a)) continue;
    std::string rest;
    if (!(ls >> b) || a < 0 || b < 0 || (ls >> rest))
      throw ParameterError(path.string() + ":" + std::to_string(lineno) +
                           ": expected two non-negative vertex ids");
    edges.emplace_back(static_cast<Site>(a), static_cast<Site>(b));
    max_vertex = std::max({max_vertex, static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
  }
  if (vertex_count) *vertex_count = edges.empty() ? 1 : max_vertex + 1;
  return edges;
}

}  // namespace loclab
