#include "loclab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <tuple>

namespace loclab {

Eigen::MatrixXd SpectralData::group_vectors(std::size_t g) const {
  const auto& grp = groups.at(g);
  Eigen::MatrixXd out(eigenvectors.rows(), static_cast<Eigen::Index>(grp.indices.size()));
  for (std::size_t j = 0; j < grp.indices.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = eigenvectors.col(static_cast<Eigen::Index>(grp.indices[j]));
  return out;
}

namespace {

std::vector<std::vector<Site>> hopping_components(const Hamiltonian& h) {
  const auto n = h.dimension();
  std::vector<Site> parent(n);
  std::iota(parent.begin(), parent.end(), Site{0});
  auto find = [&](Site x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& hp : h.hoppings()) {
    if (hp.value == 0.0) continue;
    Site a = find(hp.i), b = find(hp.j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::vector<Site>> comps;
  std::vector<std::size_t> comp_of(n, SIZE_MAX);
  for (Site x = 0; x < n; ++x) {
    Site r = find(x);
    if (comp_of[r] == SIZE_MAX) {
      comp_of[r] = comps.size();
      comps.emplace_back();
    }
    comps[comp_of[r]].push_back(x);
  }
  return comps;
}

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v.size() && v[best] < 0) v = -v;
}

void fill_group_index(SpectralData& sd) {
  sd.group_of.assign(sd.dimension(), 0);
  for (std::size_t g = 0; g < sd.groups.size(); ++g)
    for (auto k : sd.groups[g].indices) sd.group_of[k] = g;
}

void fill_alpha(SpectralData& sd) {
  if (!sd.weight) return;
  const Eigen::VectorXd inv_sq = sd.weight->cwiseProduct(*sd.weight).cwiseInverse();
  for (auto& g : sd.groups) {
    g.alpha_phi.clear();
    g.alpha_E = 0;
    for (auto k : g.indices) {
      const double a =
          inv_sq.dot(sd.eigenvectors.col(static_cast<Eigen::Index>(k)).cwiseAbs2());
      g.alpha_phi.push_back(a);
      g.alpha_E += a;
    }
  }
}

}  // namespace

SpectralData diagonalize(const Hamiltonian& h) {
  const auto n = h.dimension();
  if (n > kMaxDiagonalizeDimension)
    throw ParameterError("dimension " + std::to_string(n) + " exceeds the dense limit " +
                         std::to_string(kMaxDiagonalizeDimension));
  const auto comps = hopping_components(h);
  const Eigen::MatrixXd full = h.dense();

  struct Pair {
    double value;
    std::size_t comp;
    Eigen::Index local;
  };
  std::vector<Pair> order;
  std::vector<Eigen::MatrixXd> vecs(comps.size());
  std::vector<Eigen::VectorXd> vals(comps.size());
  double residual = 0, ortho = 0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const auto& sites = comps[c];
    const auto m = static_cast<Eigen::Index>(sites.size());
    Eigen::MatrixXd block(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b)
        block(a, b) = full(static_cast<Eigen::Index>(sites[static_cast<std::size_t>(a)]),
                           static_cast<Eigen::Index>(sites[static_cast<std::size_t>(b)]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
    if (es.info() != Eigen::Success)
      throw ConvergenceError("eigensolver did not converge on a block of size " +
                                 std::to_string(m),
                             std::numeric_limits<double>::infinity());
    vals[c] = es.eigenvalues();
    vecs[c] = es.eigenvectors();
    for (Eigen::Index k = 0; k < m; ++k) normalize_sign(vecs[c].col(k));
    residual = std::max(residual,
                        (block * vecs[c] - vecs[c] * vals[c].asDiagonal()).cwiseAbs().maxCoeff());
    ortho = std::max(ortho, (vecs[c].transpose() * vecs[c] - Eigen::MatrixXd::Identity(m, m))
                                .cwiseAbs()
                                .maxCoeff());
    for (Eigen::Index k = 0; k < m; ++k) order.push_back({vals[c][k], c, k});
  }
  std::stable_sort(order.begin(), order.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.value, a.comp, a.local) < std::tie(b.value, b.comp, b.local);
  });

  SpectralData sd;
  sd.space = h.space_ptr();
  sd.eigenvalues.resize(static_cast<Eigen::Index>(n));
  sd.eigenvectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& p = order[k];
    const auto kk = static_cast<Eigen::Index>(k);
    sd.eigenvalues[kk] = p.value;
    const auto& sites = comps[p.comp];
    for (std::size_t a = 0; a < sites.size(); ++a)
      sd.eigenvectors(static_cast<Eigen::Index>(sites[a]), kk) =
          vecs[p.comp](static_cast<Eigen::Index>(a), p.local);
  }
  sd.residual = residual;
  sd.orthonormality_error = ortho;
  sd.operator_norm = h.gershgorin_norm();
  sd.provenance = {{"kind", h.label().kind},
                   {"params", h.label().params},
                   {"space", space_to_json(h.space())},
                   {"components", comps.size()}};
  const double scale = std::max(sd.operator_norm, 1.0);
  if (residual > 1e-8 * scale)
    throw ConvergenceError("eigen-residual " + std::to_string(residual) + " exceeds 1e-8*||H||",
                           residual);
  const double tol = default_degeneracy_tol(sd);
  return group_projectors(std::move(sd), tol);
}

double default_degeneracy_tol(const SpectralData& sd) { return 1e-9 * sd.width(); }

SpectralData group_projectors(SpectralData sd, double tol) {
  if (!(tol >= 0)) throw ParameterError("degeneracy tolerance must be >= 0");
  sd.degeneracy_tol = tol;
  sd.groups.clear();
  const auto n = sd.dimension();
  for (std::size_t k = 0; k < n;) {
    ProjectorGroup g;
    g.indices.push_back(k);
    std::size_t j = k + 1;
    while (j < n && sd.eigenvalues[static_cast<Eigen::Index>(j)] -
                            sd.eigenvalues[static_cast<Eigen::Index>(j - 1)] <=
                        tol) {
      g.indices.push_back(j);
      ++j;
    }
    double sum = 0;
    for (auto i : g.indices) sum += sd.eigenvalues[static_cast<Eigen::Index>(i)];
    g.energy = sum / static_cast<double>(g.indices.size());
    g.multiplicity = g.indices.size();
    sd.groups.push_back(std::move(g));
    k = j;
  }
  fill_group_index(sd);
  fill_alpha(sd);
  return sd;
}

void assign_alpha(SpectralData& sd, const WeightOperator& weight) {
  if (static_cast<std::size_t>(weight.values().size()) != sd.dimension())
    throw ParameterError("weight operator does not match the spectral data dimension");
  sd.weight = weight.values();
  fill_alpha(sd);
}

double alpha_total(const SpectralData& sd, const std::vector<std::size_t>& groups) {
  double s = 0;
  for (auto g : groups) s += sd.groups.at(g).alpha_E;
  return s;
}

double projector_kernel(const SpectralData& sd, std::size_t group, const SiteSet& x,
                        const SiteSet& u) {
  if (x.empty() || u.empty()) return 0.0;
  const auto& idx = sd.groups.at(group).indices;
  const auto m = static_cast<Eigen::Index>(idx.size());
  auto gram = [&](const SiteSet& s) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(s.size()), m);
    for (std::size_t a = 0; a < s.size(); ++a)
      for (Eigen::Index j = 0; j < m; ++j)
        rows(static_cast<Eigen::Index>(a), j) =
            sd.eigenvectors(static_cast<Eigen::Index>(s[a]),
                            static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
    return Eigen::MatrixXd(rows.transpose() * rows);
  };
  const double hs2 = gram(x).cwiseProduct(gram(u)).sum();
  return std::sqrt(std::max(0.0, hs2));
}

double projector_site_norm(const SpectralData& sd, std::size_t group, Site x) {
  double s = 0;
  for (auto k : sd.groups.at(group).indices) {
    const double v = sd.eigenvectors(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k));
    s += v * v;
  }
  return std::sqrt(s);
}

double projector_entry(const SpectralData& sd, std::size_t group, Site x, Site u) {
  double s = 0;
  for (auto k : sd.groups.at(group).indices)
    s += sd.eigenvectors(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k)) *
         sd.eigenvectors(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k));
  return s;
}

SpectralData rotate_group(const SpectralData& sd, std::size_t group, const Eigen::MatrixXd& q) {
  const auto& idx = sd.groups.at(group).indices;
  const auto m = static_cast<Eigen::Index>(idx.size());
  if (q.rows() != m || q.cols() != m)
    throw ParameterError("rotation size does not match the group multiplicity");
  const double err = (q.transpose() * q - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw ParameterError("rotation matrix is not orthogonal");
  SpectralData out = sd;
  const Eigen::MatrixXd rotated = sd.group_vectors(group) * q;
  for (Eigen::Index j = 0; j < m; ++j)
    out.eigenvectors.col(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)])) = rotated.col(j);
  fill_alpha(out);
  return out;
}

Eigen::MatrixXd random_orthogonal(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto mm = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd g(mm, mm);
  for (Eigen::Index j = 0; j < mm; ++j)
    for (Eigen::Index i = 0; i < mm; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(mm, mm);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < mm; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Eigen::MatrixXd pairwise_symmetric(std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(mm, mm);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 0; j + 1 < mm; j += 2) {
    q(j, j) = s;
    q(j + 1, j) = s;
    q(j, j + 1) = s;
    q(j + 1, j + 1) = -s;
  }
  return q;
}

void write_spectral_cache(const SpectralData& sd, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "loclab-spectrum/1";
  j["provenance"] = sd.provenance;
  j["space"] = space_to_json(*sd.space);
  j["eigenvalues"] = std::vector<double>(sd.eigenvalues.data(),
                                         sd.eigenvalues.data() + sd.eigenvalues.size());
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index k = 0; k < sd.eigenvectors.cols(); ++k) {
    const Eigen::VectorXd c = sd.eigenvectors.col(k);
    cols.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  }
  j["eigenvectors"] = cols;
  j["residual"] = sd.residual;
  j["orthonormality_error"] = sd.orthonormality_error;
  j["operator_norm"] = sd.operator_norm;
  j["degeneracy_tol"] = sd.degeneracy_tol;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : sd.groups)
    groups.push_back({{"energy", g.energy}, {"indices", g.indices}, {"multiplicity", g.multiplicity}});
  j["groups"] = groups;
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << j.dump() << "\n";
}

SpectralData read_spectral_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "loclab-spectrum/1")
    throw ParameterError(path.string() + ": not a loclab spectral cache");
  SpectralData sd;
  sd.space = std::make_shared<SiteSpace>(space_from_json(j.at("space")));
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(ev.size());
  if (static_cast<std::size_t>(n) != sd.space->size())
    throw ParameterError(path.string() + ": eigenvalue count does not match the space");
  sd.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), n);
  sd.eigenvectors.resize(n, n);
  const auto& cols = j.at("eigenvectors");
  if (static_cast<Eigen::Index>(cols.size()) != n)
    throw ParameterError(path.string() + ": eigenvector count does not match");
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto c = cols[static_cast<std::size_t>(k)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(c.size()) != n)
      throw ParameterError(path.string() + ": eigenvector length mismatch");
    sd.eigenvectors.col(k) = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
  }
  sd.residual = j.at("residual").get<double>();
  sd.orthonormality_error = j.at("orthonormality_error").get<double>();
  sd.operator_norm = j.at("operator_norm").get<double>();
  sd.provenance = j.at("provenance");
  const double tol = j.at("degeneracy_tol").get<double>();
  return group_projectors(std::move(sd), tol);
}

}  // namespace loclab
