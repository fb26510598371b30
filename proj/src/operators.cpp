#include "loclab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

namespace loclab {

Hamiltonian::Hamiltonian(SpacePtr space, Eigen::VectorXd diagonal,
                         std::vector<Hopping> hoppings, HamiltonianLabel label)
    : space_(std::move(space)),
      diagonal_(std::move(diagonal)),
      hoppings_(std::move(hoppings)),
      label_(std::move(label)) {
  const auto n = space_->size();
  if (static_cast<std::size_t>(diagonal_.size()) != n)
    throw ParameterError("diagonal length does not match the number of sites");
  for (auto& h : hoppings_) {
    if (h.i > h.j) std::swap(h.i, h.j);
    const auto& nb = space_->neighbors().at(h.i);
    if (!std::binary_search(nb.begin(), nb.end(), h.j))
      throw ConstructionError("hopping (" + std::to_string(h.i) + "," + std::to_string(h.j) +
                              ") is not a bond of the site space");
  }
  if (n < kDenseLimit) {
    matrix_ = dense();
  } else {
    matrix_ = sparse();
  }
}

Eigen::MatrixXd Hamiltonian::dense() const {
  if (auto* m = std::get_if<Eigen::MatrixXd>(&matrix_); m && m->size() > 0) return *m;
  const auto n = static_cast<Eigen::Index>(space_->size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m.diagonal() = diagonal_;
  for (const auto& h : hoppings_) {
    const auto i = static_cast<Eigen::Index>(h.i);
    const auto j = static_cast<Eigen::Index>(h.j);
    m(i, j) = h.value;
    m(j, i) = h.value;
  }
  return m;
}

Eigen::SparseMatrix<double> Hamiltonian::sparse() const {
  const auto n = static_cast<Eigen::Index>(space_->size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) + 2 * hoppings_.size());
  for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, diagonal_[i]);
  for (const auto& h : hoppings_) {
    trip.emplace_back(static_cast<Eigen::Index>(h.i), static_cast<Eigen::Index>(h.j), h.value);
    trip.emplace_back(static_cast<Eigen::Index>(h.j), static_cast<Eigen::Index>(h.i), h.value);
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

double Hamiltonian::entry(Site i, Site j) const {
  if (i == j) return diagonal_[static_cast<Eigen::Index>(i)];
  if (auto* m = std::get_if<Eigen::MatrixXd>(&matrix_))
    return (*m)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  const Site a = std::min(i, j), b = std::max(i, j);
  for (const auto& h : hoppings_)
    if (h.i == a && h.j == b) return h.value;
  return 0.0;
}

std::pair<double, double> Hamiltonian::gershgorin_interval() const {
  std::vector<double> radius(space_->size(), 0.0);
  for (const auto& h : hoppings_) {
    radius[h.i] += std::abs(h.value);
    radius[h.j] += std::abs(h.value);
  }
  double lo = diagonal_.size() ? diagonal_[0] - radius[0] : 0.0;
  double hi = diagonal_.size() ? diagonal_[0] + radius[0] : 0.0;
  for (Eigen::Index i = 0; i < diagonal_.size(); ++i) {
    lo = std::min(lo, diagonal_[i] - radius[static_cast<std::size_t>(i)]);
    hi = std::max(hi, diagonal_[i] + radius[static_cast<std::size_t>(i)]);
  }
  return {lo, hi};
}

double Hamiltonian::gershgorin_norm() const {
  std::vector<double> row(space_->size(), 0.0);
  for (Eigen::Index i = 0; i < diagonal_.size(); ++i)
    row[static_cast<std::size_t>(i)] = std::abs(diagonal_[i]);
  for (const auto& h : hoppings_) {
    row[h.i] += std::abs(h.value);
    row[h.j] += std::abs(h.value);
  }
  return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
}

namespace {

Hamiltonian laplacian_with_potential(SpacePtr space, const Eigen::VectorXd& potential,
                                     HamiltonianLabel label) {
  const auto n = space->size();
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  for (Site x = 0; x < n; ++x)
    diag[static_cast<Eigen::Index>(x)] =
        static_cast<double>(space->degree(x)) + potential[static_cast<Eigen::Index>(x)];
  std::vector<Hopping> hops;
  hops.reserve(space->edges().size());
  for (auto [a, b] : space->edges()) hops.push_back({a, b, -1.0});
  return Hamiltonian(std::move(space), std::move(diag), std::move(hops), std::move(label));
}

bool is_connected(const SiteSpace& s) {
  std::vector<bool> seen(s.size(), false);
  std::deque<Site> q{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    Site v = q.front();
    q.pop_front();
    for (Site w : s.neighbors()[v])
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        q.push_back(w);
      }
  }
  return count == s.size();
}

}  // namespace

Hamiltonian build_laplacian(SpacePtr space) {
  const auto n = static_cast<Eigen::Index>(space->size());
  HamiltonianLabel label{"laplacian", {{"space", space_to_json(*space)}}};
  return laplacian_with_potential(std::move(space), Eigen::VectorXd::Zero(n), std::move(label));
}

Hamiltonian build_dirichlet_laplacian(SpacePtr space) {
  if (space->kind() != SpaceKind::Lattice)
    throw ParameterError("Dirichlet boundary needs a lattice space");
  const auto n = space->size();
  Eigen::VectorXd pad(static_cast<Eigen::Index>(n));
  for (Site x = 0; x < n; ++x)
    pad[static_cast<Eigen::Index>(x)] = 2.0 * space->dim() - static_cast<double>(space->degree(x));
  HamiltonianLabel label{"laplacian", {{"space", space_to_json(*space)}, {"boundary", "dirichlet"}}};
  return laplacian_with_potential(std::move(space), pad, std::move(label));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

double anderson_potential(const SiteSpace& space, Site x, double width, std::uint64_t seed) {
  std::uint64_t key = x;
  if (space.kind() == SpaceKind::Lattice) {
    const auto& c = space.coord(x);
    key = 0;
    for (int v : c) key = splitmix64(key ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  }
  const std::uint64_t bits = splitmix64(seed ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
  const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return width * (unit - 0.5);
}

Hamiltonian build_anderson(SpacePtr space, double width, std::uint64_t seed) {
  if (!(width >= 0.0)) throw ParameterError("disorder width W must be >= 0");
  const auto n = space->size();
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Site x = 0; x < n; ++x)
    v[static_cast<Eigen::Index>(x)] = anderson_potential(*space, x, width, seed);
  HamiltonianLabel label{"anderson",
                         {{"space", space_to_json(*space)},
                          {"W", width},
                          {"seed", seed},
                          {"distribution", "uniform[-W/2,W/2]"},
                          {"prng", "splitmix64(seed, site key)"}}};
  return laplacian_with_potential(std::move(space), v, std::move(label));
}

ClusterLayout layout_clusters(const SiteSpace& base, int copies, int separation) {
  if (copies < 2) throw ParameterError("cluster construction needs J >= 2 copies");
  if (base.kind() == SpaceKind::Graph)
    throw ParameterError("cluster base must be a lattice or linear space (needs coordinates)");
  if (separation < 1)
    throw ConstructionError("copies overlap: separation D=" + std::to_string(separation) +
                            " must be >= 1");
  if (!is_connected(base)) throw ConstructionError("cluster base is not connected");

  int lo = base.coord(0)[0], hi = lo;
  for (Site x = 0; x < base.size(); ++x) {
    lo = std::min(lo, base.coord(x)[0]);
    hi = std::max(hi, base.coord(x)[0]);
  }
  const int step = (hi - lo) + separation;
  const int dim = base.kind() == SpaceKind::Linear ? 1 : base.dim();
  std::vector<Coord> coords;
  std::vector<Edge> bonds;
  const std::size_t m = base.size();
  for (int c = 0; c < copies; ++c) {
    for (Site x = 0; x < m; ++x) {
      Coord p = base.coord(x);
      p[0] += c * step - lo;
      coords.push_back(p);
    }
    for (auto [a, b] : base.edges())
      bonds.emplace_back(static_cast<Site>(c) * m + a, static_cast<Site>(c) * m + b);
  }
  ClusterLayout layout;
  layout.space = std::make_shared<SiteSpace>(SiteSpace::lattice_sites(dim, coords, bonds));
  layout.copies = copies;
  layout.separation = separation;
  layout.copy_size = m;
  for (Site a = 0; a < layout.space->size(); ++a)
    for (Site b = a + 1; b < layout.space->size(); ++b)
      if (layout.copy_of(a) != layout.copy_of(b) && layout.space->distance(a, b) < separation)
        throw ConstructionError("copies closer than the requested separation");
  return layout;
}

Hamiltonian build_cluster_laplacian(const SiteSpace& base, int copies, int separation) {
  auto layout = layout_clusters(base, copies, separation);
  const auto n = static_cast<Eigen::Index>(layout.space->size());
  HamiltonianLabel label{"cluster",
                         {{"space", space_to_json(*layout.space)},
                          {"J", copies},
                          {"D", separation},
                          {"base", space_to_json(base)}}};
  return laplacian_with_potential(layout.space, Eigen::VectorXd::Zero(n), std::move(label));
}

double japanese_bracket(double r) { return std::sqrt(1.0 + r * r); }

WeightOperator WeightOperator::lattice_polynomial(const SiteSpace& space, double kappa) {
  if (space.kind() == SpaceKind::Graph)
    throw ParameterError("polynomial weights need a lattice or linear space");
  const int d = space.kind() == SpaceKind::Linear ? 1 : space.dim();
  if (!(kappa > 0.5 * d))
    throw ParameterError("weight exponent kappa must exceed d/2 = " + std::to_string(0.5 * d) +
                         " so that sum_x <x>^(-2 kappa) converges");
  WeightOperator w;
  w.kind_ = Kind::LatticePolynomial;
  w.parameter_ = kappa;
  w.values_.resize(static_cast<Eigen::Index>(space.size()));
  for (Site x = 0; x < space.size(); ++x)
    w.values_[static_cast<Eigen::Index>(x)] = std::pow(japanese_bracket(space.norm(x)), kappa);
  return w;
}

WeightOperator WeightOperator::graph_exponential(const SiteSpace& space, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("graph weight exponent must lie in (0,1)");
  WeightOperator w;
  w.kind_ = Kind::GraphExponential;
  w.parameter_ = alpha;
  w.values_.resize(static_cast<Eigen::Index>(space.size()));
  for (Site x = 0; x < space.size(); ++x)
    w.values_[static_cast<Eigen::Index>(x)] =
        std::exp(std::pow(static_cast<double>(space.norm(x)), alpha));
  return w;
}

double WeightOperator::inverse_square_trace() const {
  double s = 0;
  for (Eigen::Index i = 0; i < values_.size(); ++i) s += 1.0 / (values_[i] * values_[i]);
  return s;
}

nlohmann::json space_to_json(const SiteSpace& space) {
  nlohmann::json j;
  j["kind"] = to_string(space.kind());
  switch (space.kind()) {
    case SpaceKind::Lattice:
      j["dim"] = space.dim();
      if (space.box_side() > 0) {
        j["side"] = space.box_side();
        const auto c = space.box_center();
        j["center"] = std::vector<int>(c.begin(), c.begin() + space.dim());
      } else {
        nlohmann::json coords = nlohmann::json::array();
        for (Site x = 0; x < space.size(); ++x) {
          const auto& c = space.coord(x);
          coords.push_back(std::vector<int>(c.begin(), c.begin() + space.dim()));
        }
        j["coords"] = coords;
        j["bonds"] = space.edges();
      }
      break;
    case SpaceKind::Graph:
      j["vertices"] = space.size();
      j["root"] = space.root();
      j["edges"] = space.edges();
      break;
    case SpaceKind::Linear:
      j["n"] = space.size();
      break;
  }
  return j;
}

SiteSpace space_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "lattice") {
    const int dim = j.at("dim").get<int>();
    if (j.contains("side")) {
      Coord c{0, 0, 0};
      auto cv = j.value("center", std::vector<int>{});
      for (std::size_t i = 0; i < cv.size() && i < 3; ++i) c[i] = cv[i];
      return SiteSpace::lattice_box(dim, j.at("side").get<int>(), c);
    }
    std::vector<Coord> coords;
    for (const auto& cj : j.at("coords")) {
      Coord c{0, 0, 0};
      auto cv = cj.get<std::vector<int>>();
      for (std::size_t i = 0; i < cv.size() && i < 3; ++i) c[i] = cv[i];
      coords.push_back(c);
    }
    return SiteSpace::lattice_sites(dim, coords, j.at("bonds").get<std::vector<Edge>>());
  }
  if (kind == "graph")
    return SiteSpace::graph(j.at("vertices").get<std::size_t>(),
                            j.at("edges").get<std::vector<Edge>>(), j.value("root", Site{0}));
  if (kind == "linear") return SiteSpace::linear(j.at("n").get<std::size_t>());
  throw ParameterError("unknown space kind '" + kind + "'");
}

void write_hamiltonian(const Hamiltonian& h, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "loclab-hamiltonian/1";
  header["label"] = {{"kind", h.label().kind}, {"params", h.label().params}};
  header["dimension"] = h.dimension();
  header["space"] = space_to_json(h.space());
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << header.dump() << "\n" << "row,col,value\n";
  char buf[64];
  std::vector<Hopping> rows;
  for (Site i = 0; i < h.dimension(); ++i)
    if (h.diagonal()[static_cast<Eigen::Index>(i)] != 0.0)
      rows.push_back({i, i, h.diagonal()[static_cast<Eigen::Index>(i)]});
  for (const auto& hp : h.hoppings())
    if (hp.value != 0.0) rows.push_back(hp);
  std::sort(rows.begin(), rows.end(),
            [](const Hopping& a, const Hopping& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.i << "," << r.j << "," << buf << "\n";
  }
}

Hamiltonian read_hamiltonian(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != "loclab-hamiltonian/1")
    throw ParameterError(path.string() + ": not a loclab Hamiltonian export");
  auto space = std::make_shared<SiteSpace>(space_from_json(header.at("space")));
  if (header.at("dimension").get<std::size_t>() != space->size())
    throw ParameterError(path.string() + ": dimension does not match the site space");
  std::getline(in, line);  // column header
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  std::vector<Hopping> hops;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Site i = 0, j = 0;
    double v = 0;
    char c1 = 0, c2 = 0;
    if (!(ls >> i >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',' || i >= space->size() ||
        j >= space->size())
      throw ParameterError(path.string() + ":" + std::to_string(lineno) + ": bad triplet");
    if (i == j)
      diag[static_cast<Eigen::Index>(i)] = v;
    else
      hops.push_back({i, j, v});
  }
  HamiltonianLabel label{header.at("label").at("kind").get<std::string>(),
                         header.at("label").at("params")};
  return Hamiltonian(std::move(space), std::move(diag), std::move(hops), std::move(label));
}

}  // namespace loclab
