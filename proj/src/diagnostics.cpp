#include "loclab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

namespace loclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-12;

nlohmann::json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double lsum_exp(const std::vector<double>& terms) {
  double mx = -kInf;
  for (double v : terms) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  CompensatedSum s;
  for (double v : terms) s.add(std::exp(v - mx));
  return mx + std::log(s.value());
}

double checked(double log_value, const std::string& what) {
  if (log_value > 709.78) throw std::overflow_error(what + " overflows double");
  return std::exp(log_value);
}

// Largest-magnitude index; entries within kTieTol (relative) of the maximum
// count as ties and the smallest index wins.
Site argmax_abs(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return 0;
  const double mx = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) >= mx * (1 - kTieTol)) return static_cast<Site>(i);
  return 0;
}

EnvelopeRequest request_from(const std::string& name, const DecayParams& p,
                             const EnvelopeOptions& opt, bool mixed) {
  EnvelopeRequest r;
  r.inequality = name;
  r.sigma = p.sigma;
  r.zeta = p.zeta;
  r.epsilon = p.epsilon;
  r.c_cap = opt.c_cap;
  r.zeta_grid = opt.zeta_grid;
  if (mixed) {
    if (!p.zeta_prime) throw ParameterError("mixed-exponent check needs zeta'");
    r.allowance_zeta = *p.zeta_prime;
  }
  return r;
}

int lattice_dimension(const SiteSpace& s) { return s.kind() == SpaceKind::Lattice ? s.dim() : 1; }

}  // namespace

std::vector<std::size_t> all_columns(const BasisView& basis) {
  std::vector<std::size_t> out(basis.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

std::vector<std::size_t> window_groups(const SpectralData& sd, const EnergyWindow& window) {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < sd.groups.size(); ++g)
    if (window.group_values.at(g) > 0) out.push_back(g);
  return out;
}

BasisView basis_view(const SpectralData& sd, const EnergyWindow& window) {
  if (!sd.weight) throw ParameterError("basis view needs alpha weights (assign_alpha)");
  BasisView b;
  b.space = sd.space;
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k < sd.dimension(); ++k)
    if (window.sampled.at(k) > 0) cols.push_back(k);
  b.vectors.resize(sd.eigenvectors.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto k = cols[c];
    b.vectors.col(static_cast<Eigen::Index>(c)) = sd.eigenvectors.col(static_cast<Eigen::Index>(k));
    const auto g = sd.group_of[k];
    const auto& grp = sd.groups[g];
    const auto pos = static_cast<std::size_t>(
        std::find(grp.indices.begin(), grp.indices.end(), k) - grp.indices.begin());
    b.alpha.push_back(grp.alpha_phi.at(pos));
    b.group.push_back(g);
    b.source_index.push_back(k);
  }
  return b;
}

BasisView basis_from_vectors(SpacePtr space, const Eigen::MatrixXd& vectors,
                             const WeightOperator& weight) {
  if (static_cast<std::size_t>(vectors.rows()) != space->size())
    throw ParameterError("vector length does not match the site space");
  BasisView b;
  b.space = std::move(space);
  b.vectors = vectors;
  const Eigen::VectorXd inv_sq = weight.values().cwiseAbs2().cwiseInverse();
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const double nrm = vectors.col(c).norm();
    if (!(nrm > 0)) throw ParameterError("zero vector in basis");
    b.vectors.col(c) /= nrm;
    b.alpha.push_back(inv_sq.dot(b.vectors.col(c).cwiseAbs2()));
    b.group.push_back(static_cast<std::size_t>(c));
    b.source_index.push_back(static_cast<std::size_t>(c));
  }
  return b;
}

// ---- projector profile ------------------------------------------------------

SulpProfile sulp_profile(const SpectralData& sd, const EnergyWindow& window, Site u,
                         const DecayParams& params, double c_cap) {
  params.validate();
  sd.space->require_site(u);
  const auto& space = *sd.space;
  const auto n = static_cast<Eigen::Index>(sd.dimension());
  SulpProfile out;
  out.u = u;
  out.profile = Eigen::VectorXd::Zero(n);
  for (auto g : window_groups(sd, window)) {
    const Eigen::MatrixXd phi = sd.group_vectors(g);
    const Eigen::VectorXd col = phi * phi.row(static_cast<Eigen::Index>(u)).transpose();
    out.profile = out.profile.cwiseMax(window.group_values[g] * col.cwiseAbs());
  }
  const auto lw = log_moment_weights(space, u, params);
  std::vector<double> terms;
  for (Eigen::Index x = 0; x < n; ++x)
    if (out.profile[x] > 0) terms.push_back(lw[x] + 2 * std::log(out.profile[x]));
  out.l_value = checked(lsum_exp(terms), "L_u");
  out.liminf = liminf_cesaro(sd, window, u, params);

  std::vector<EnvelopePoint> pts;
  const double half_log = 0.5 * std::log(out.liminf);
  for (Eigen::Index x = 0; x < n; ++x) {
    EnvelopePoint p;
    p.value = out.profile[x];
    p.log_prefactor = half_log;
    p.r = space.distance(static_cast<Site>(x), u);
    p.i = static_cast<Site>(x);
    p.j = u;
    pts.push_back(p);
    if (p.value > 0)
      out.required_c = std::max(
          out.required_c,
          std::exp(std::log(p.value) - half_log + 0.5 * params.sigma * std::pow(p.r, params.zeta)));
  }
  EnvelopeRequest req;
  req.inequality = "SULP";
  req.sigma = params.sigma / 2;
  req.zeta = params.zeta;
  req.epsilon = 0;
  req.c_cap = c_cap;
  req.zeta_grid = {params.zeta};
  out.fit = fit_envelope(points_from(pts), req);
  out.sigma_hat = 2 * out.fit.sigma_hat;
  return out;
}

nlohmann::json SulpProfile::to_json() const {
  return {{"u", u},
          {"L_u", num(l_value)},
          {"liminf_cesaro", num(liminf)},
          {"required_C_at_params", num(required_c)},
          {"L_le_liminf", l_value <= liminf * (1 + 1e-12)},
          {"sigma_hat", num(sigma_hat)},
          {"fit", fit.to_json()}};
}

// ---- A_k ledger ---------------------------------------------------------------

ProjectorMassLedger ak_ledger(const SpectralData& sd, const EnergyWindow& window, Site u,
                              const DecayParams& params) {
  params.validate();
  sd.space->require_site(u);
  const auto& space = *sd.space;
  const auto n = static_cast<Eigen::Index>(sd.dimension());
  ProjectorMassLedger led;
  led.u = u;
  led.zeta = params.zeta;
  led.dimension = lattice_dimension(space);
  std::vector<Eigen::VectorXd> rows;
  for (auto g : window_groups(sd, window)) {
    const Eigen::MatrixXd phi = sd.group_vectors(g);
    const Eigen::VectorXd at_u = phi.row(static_cast<Eigen::Index>(u)).transpose();
    const double mass = at_u.norm();
    if (!(mass > 1e-300)) {
      led.excluded.push_back(g);
      continue;
    }
    led.kept.push_back(g);
    rows.push_back((phi * (at_u / mass)).cwiseAbs2());
  }
  led.degenerate = led.kept.empty();
  led.a.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t k = 0; k < rows.size(); ++k) led.a.row(static_cast<Eigen::Index>(k)) = rows[k];

  const auto lw = log_moment_weights(space, u, params);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CompensatedSum row;
    std::vector<double> terms;
    for (Eigen::Index x = 0; x < n; ++x) {
      const double v = rows[k][x];
      row.add(v);
      if (v > 0) terms.push_back(lw[x] + std::log(v));
    }
    led.row_sum_error = std::max(led.row_sum_error, std::abs(row.value() - 1.0));
    led.A.push_back(checked(lsum_exp(terms), "A_k"));
  }
  for (Eigen::Index x = 0; x < n; ++x) {
    CompensatedSum col;
    for (std::size_t k = 0; k < rows.size(); ++k) col.add(rows[k][x]);
    led.column_sum_max = std::max(led.column_sum_max, col.value());
  }
  led.sorted_A = led.A;
  std::sort(led.sorted_A.begin(), led.sorted_A.end());
  led.c_tilde = kInf;
  for (std::size_t k = 0; k < led.sorted_A.size(); ++k) {
    const double kk = std::pow(static_cast<double>(k + 1), params.zeta / led.dimension);
    led.c_tilde = std::min(led.c_tilde, std::log(led.sorted_A[k]) / kk);
  }
  if (led.sorted_A.empty()) led.c_tilde = 0;
  led.growth_holds = led.c_tilde > 0;
  return led;
}

std::size_t ProjectorMassLedger::counting(double l) const {
  return static_cast<std::size_t>(std::upper_bound(sorted_A.begin(), sorted_A.end(), l) -
                                  sorted_A.begin());
}

nlohmann::json ProjectorMassLedger::to_json() const {
  return {{"u", u},
          {"kept_groups", kept.size()},
          {"excluded_groups", excluded},
          {"row_sum_error", row_sum_error},
          {"column_sum_max", column_sum_max},
          {"row_sums_ok", row_sum_error <= 1e-12},
          {"column_sums_ok", column_sum_max <= 1 + 1e-12},
          {"C_tilde", num(c_tilde)},
          {"growth_holds", growth_holds},
          {"degenerate", degenerate},
          {"A_min", sorted_A.empty() ? nlohmann::json(nullptr) : num(sorted_A.front())},
          {"A_max", sorted_A.empty() ? nlohmann::json(nullptr) : num(sorted_A.back())}};
}

// ---- kernel interpolation -----------------------------------------------------

KernelInterpolation kernel_interpolation_check(const SpectralData& sd, const EnergyWindow& window,
                                               Site u, const DecayParams& params,
                                               const std::vector<double>& times) {
  params.validate();
  const double gamma = params.gamma.value_or(0.5);
  const auto& space = *sd.space;
  const auto n = static_cast<Eigen::Index>(sd.dimension());
  KernelInterpolation out;
  out.gamma = gamma;
  const auto sulp = sulp_profile(sd, window, u, params);
  out.sup_kernel = sup_kernel_profile(sd, window, u, times);
  out.bound_shape.resize(n);
  for (Eigen::Index x = 0; x < n; ++x)
    out.bound_shape[x] =
        std::pow(sulp.profile[x], 1 - gamma) * std::pow(sulp.l_value, gamma / 2);
  out.c_min = 0;
  for (Eigen::Index x = 0; x < n; ++x) {
    if (out.sup_kernel[x] <= 0) continue;
    out.c_min = out.bound_shape[x] > 0 ? std::max(out.c_min, out.sup_kernel[x] / out.bound_shape[x])
                                       : kInf;
  }
  const double c = out.c_min * (1 + 1e-12);
  for (Eigen::Index x = 0; x < n; ++x)
    if (out.sup_kernel[x] > c * out.bound_shape[x]) ++out.violations;

  const auto led = ak_ledger(sd, window, u, params);
  out.holder_sum = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < led.kept.size(); ++k) {
    const double ak = std::pow(led.A[k], -gamma / 2);
    for (Eigen::Index x = 0; x < n; ++x)
      out.holder_sum[x] +=
          std::pow(projector_site_norm(sd, led.kept[k], static_cast<Site>(x)), gamma) * ak;
  }
  out.holder_max = out.holder_sum.size() ? out.holder_sum.maxCoeff() : 0.0;

  const double sulp_scale = sulp.required_c * std::sqrt(sulp.liminf);
  for (Eigen::Index x = 0; x < n; ++x) {
    const double r = space.distance(static_cast<Site>(x), u);
    const double chain = c *
                         std::pow(sulp_scale * std::exp(-0.5 * params.sigma * std::pow(r, params.zeta)),
                                  1 - gamma) *
                         std::pow(sulp.l_value, gamma / 2) * (1 + 1e-12);
    if (out.sup_kernel[x] > chain) ++out.chain_violations;
  }
  out.verdict = std::isfinite(out.c_min) && out.violations == 0 && std::isfinite(out.holder_max) &&
                out.chain_violations == 0;
  return out;
}

nlohmann::json KernelInterpolation::to_json() const {
  return {{"gamma", gamma},
          {"C_min", num(c_min)},
          {"violations", violations},
          {"holder_sum_max", num(holder_max)},
          {"holder_finite", std::isfinite(holder_max)},
          {"chain_violations", chain_violations},
          {"verdict", verdict ? "pass" : "fail"}};
}

// ---- eigenfunction envelopes --------------------------------------------------

Site localization_center(const Eigen::Ref<const Eigen::VectorXd>& phi) { return argmax_abs(phi); }

std::vector<EnvelopePoint> sule_points(const BasisView& basis,
                                       const std::vector<std::size_t>& selection,
                                       std::vector<LocalizationCenter>* centers) {
  const auto& space = *basis.space;
  const auto n = basis.vectors.rows();
  std::vector<EnvelopePoint> pts;
  pts.reserve(selection.size() * static_cast<std::size_t>(n));
  for (auto c : selection) {
    const auto col = basis.vectors.col(static_cast<Eigen::Index>(c));
    LocalizationCenter lc;
    lc.vector = c;
    lc.x_phi = localization_center(col);
    lc.peak = std::abs(col[static_cast<Eigen::Index>(lc.x_phi)]);
    lc.alpha = basis.alpha.at(c);
    lc.peak_over_sqrt_alpha = lc.peak / std::sqrt(lc.alpha);
    if (centers) centers->push_back(lc);
    const double a = space.norm(lc.x_phi);
    for (Eigen::Index x = 0; x < n; ++x) {
      EnvelopePoint p;
      p.value = std::abs(col[x]);
      p.r = space.distance(static_cast<Site>(x), lc.x_phi);
      p.a = a;
      p.i = static_cast<Site>(x);
      p.j = lc.x_phi;
      p.vector = c;
      pts.push_back(p);
    }
  }
  return pts;
}

SuleResult sule_fit(const BasisView& basis, const std::vector<std::size_t>& selection,
                    const DecayParams& params, const EnvelopeOptions& opt, bool mixed) {
  params.validate();
  if (selection.empty()) throw ParameterError("SULE fit needs a nonempty selection");
  const auto& space = *basis.space;
  const auto n = static_cast<std::size_t>(basis.vectors.rows());
  SuleResult out;
  const auto all = sule_points(basis, selection, &out.centers);
  const auto req = request_from(mixed ? "SULE'" : "SULE", params, opt, mixed);
  out.fit = fit_envelope(points_from(all), req);
  out.sigma_min = kInf;
  for (std::size_t s = 0; s < selection.size(); ++s) {
    const std::vector<EnvelopePoint> pts(all.begin() + static_cast<std::ptrdiff_t>(s * n),
                                         all.begin() + static_cast<std::ptrdiff_t>((s + 1) * n));
    const double sg = max_sigma(points_from(pts), params.zeta, params.epsilon, opt.c_cap,
                                req.allowance_zeta);
    out.sigma_per_vector.push_back(sg);
    out.sigma_min = std::min(out.sigma_min, sg);
  }
  const double sg = out.fit.sigma_hat, z = out.fit.zeta_hat;
  for (auto& lc : out.centers) {
    if (!(sg > 0) || std::isinf(sg)) {
      lc.r_phi = std::isinf(sg) ? 0.0 : kInf;
      continue;
    }
    const double t1 = std::pow(out.fit.epsilon_hat / sg, 1 / z) * space.norm(lc.x_phi);
    const double lg = std::log(3 * out.fit.c_hat);
    const double t2 = lg > 0 ? std::pow(lg / sg, 1 / z) : 0.0;
    lc.r_phi = std::max(0.0, t1 + t2);
  }
  return out;
}

nlohmann::json SuleResult::to_json(bool with_centers) const {
  nlohmann::json j{{"fit", fit.to_json()}, {"sigma_min_per_vector", num(sigma_min)}};
  double peak_min = kInf;
  for (const auto& c : centers) peak_min = std::min(peak_min, c.peak_over_sqrt_alpha);
  j["peak_over_sqrt_alpha_min"] = num(peak_min);
  if (with_centers) {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : centers)
      cs.push_back({{"vector", c.vector},
                    {"x_phi", c.x_phi},
                    {"peak", c.peak},
                    {"alpha", c.alpha},
                    {"R_phi", num(c.r_phi)}});
    j["centers"] = cs;
  }
  return j;
}

RateFunction RateFunction::identity() { return {"identity", [](double s) { return s; }}; }
RateFunction RateFunction::one() { return {"one", [](double) { return 1.0; }}; }
RateFunction RateFunction::power(double p) {
  if (!(p > 0)) throw ParameterError("power rate function needs p > 0");
  return {"power(" + std::to_string(p) + ")", [p](double s) { return std::pow(s, p); }};
}

std::vector<std::pair<Site, Site>> sample_pairs(const SiteSpace& space, std::size_t max_pairs,
                                                std::uint64_t seed, bool* subsampled) {
  const std::size_t n = space.size();
  std::vector<std::pair<Site, Site>> out;
  if (n * n <= max_pairs) {
    out.reserve(n * n);
    for (Site u = 0; u < n; ++u)
      for (Site x = 0; x < n; ++x) out.emplace_back(x, u);
    if (subsampled) *subsampled = false;
    return out;
  }
  // Diagonal pairs are always kept; the rest of the budget is water-filled
  // over the distance strata and each stratum keeps at most its share.
  std::map<int, std::size_t> count;
  for (Site u = 0; u < n; ++u)
    for (Site x = 0; x < n; ++x)
      if (x != u) ++count[space.distance(x, u)];
  std::size_t budget = max_pairs > n ? max_pairs - n : 0;
  std::map<int, std::size_t> share;
  std::vector<std::pair<std::size_t, int>> by_size;
  for (auto [r, c] : count) by_size.emplace_back(c, r);
  std::sort(by_size.begin(), by_size.end());
  for (std::size_t i = 0; i < by_size.size(); ++i) {
    const std::size_t fair = budget / (by_size.size() - i);
    const std::size_t take = std::min(fair, by_size[i].first);
    share[by_size[i].second] = take;
    budget -= take;
  }
  std::map<int, std::size_t> taken;
  for (Site u = 0; u < n; ++u)
    for (Site x = 0; x < n; ++x) {
      if (x == u) {
        out.emplace_back(x, u);
        continue;
      }
      const int r = space.distance(x, u);
      const std::size_t want = share[r];
      if (taken[r] >= want) continue;
      const double p = static_cast<double>(want) / static_cast<double>(count[r]);
      const auto key = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(u * n + x)));
      if (static_cast<double>(key >> 11) * 0x1.0p-53 < p) {
        out.emplace_back(x, u);
        ++taken[r];
      }
    }
  if (subsampled) *subsampled = true;
  return out;
}

PointSource sudec_source(const BasisView& basis, const std::vector<std::size_t>& selection,
                         const RateFunction& rate, const SudecOptions& opt, SudecResult* info) {
  const auto& space = *basis.space;
  bool sub = false;
  auto pairs = std::make_shared<std::vector<std::pair<Site, Site>>>(
      sample_pairs(space, opt.max_pairs, opt.seed, &sub));
  if (info) {
    info->pairs = pairs->size();
    info->subsampled = sub;
    info->rate = rate.name;
  }
  auto pr = std::make_shared<std::vector<double>>(pairs->size());
  auto pa = std::make_shared<std::vector<double>>(pairs->size());
  for (std::size_t k = 0; k < pairs->size(); ++k) {
    (*pr)[k] = space.distance((*pairs)[k].first, (*pairs)[k].second);
    (*pa)[k] = space.norm((*pairs)[k].second);
  }
  auto log_pref = std::make_shared<std::vector<double>>();
  for (auto c : selection) {
    const double f = rate.f(basis.alpha.at(c));
    log_pref->push_back(f > 0 ? std::log(f) : -kInf);
  }
  return [&basis, selection, pairs, pr, pa, log_pref](const PointVisitor& visit) {
    EnvelopePoint p;
    for (std::size_t s = 0; s < selection.size(); ++s) {
      const auto col = basis.vectors.col(static_cast<Eigen::Index>(selection[s]));
      p.log_prefactor = (*log_pref)[s];
      p.vector = selection[s];
      for (std::size_t k = 0; k < pairs->size(); ++k) {
        const auto [x, u] = (*pairs)[k];
        p.value = std::abs(col[static_cast<Eigen::Index>(x)]) * std::abs(col[static_cast<Eigen::Index>(u)]);
        if (!(p.value > 0)) continue;
        p.r = (*pr)[k];
        p.a = (*pa)[k];
        p.i = x;
        p.j = u;
        visit(p);
      }
    }
  };
}

SudecResult sudec_check(const BasisView& basis, const std::vector<std::size_t>& selection,
                        const DecayParams& params, const RateFunction& rate,
                        const SudecOptions& opt) {
  params.validate();
  if (selection.empty()) throw ParameterError("SUDEC check needs a nonempty selection");
  SudecResult out;
  const auto src = sudec_source(basis, selection, rate, opt, &out);
  std::string name = opt.mixed ? "SUDEC'" : "SUDEC";
  if (rate.name != "identity") name += "_f[" + rate.name + "]";
  out.fit = fit_envelope(src, request_from(name, params, opt.envelope, opt.mixed));
  return out;
}

nlohmann::json SudecResult::to_json() const {
  return {{"fit", fit.to_json()}, {"rate", rate}, {"pairs", pairs}, {"subsampled", subsampled}};
}

namespace {

struct ProjectorNorms {
  std::vector<Eigen::VectorXd> norms;  // ||chi_x P_E|| per group
  std::vector<double> alpha;
  std::vector<Site> centers;
  std::vector<std::size_t> groups;
};

std::shared_ptr<ProjectorNorms> projector_norms(const SpectralData& sd,
                                                const std::vector<std::size_t>& groups) {
  if (!sd.weight) throw ParameterError("projector checks need alpha weights (assign_alpha)");
  auto pn = std::make_shared<ProjectorNorms>();
  pn->groups = groups;
  for (auto g : groups) {
    const Eigen::MatrixXd phi = sd.group_vectors(g);
    Eigen::VectorXd nr = phi.rowwise().norm();
    pn->centers.push_back(argmax_abs(nr));
    pn->norms.push_back(std::move(nr));
    pn->alpha.push_back(sd.groups[g].alpha_E);
  }
  return pn;
}

}  // namespace

PointSource sudec_plus_source(const SpectralData& sd, const std::vector<std::size_t>& groups) {
  auto pn = projector_norms(sd, groups);
  const auto& space = *sd.space;
  auto pairs = std::make_shared<std::vector<std::pair<Site, Site>>>(
      sample_pairs(space, 1000000, 0x5eed, nullptr));
  auto sp = sd.space;
  return [pn, pairs, sp](const PointVisitor& visit) {
    EnvelopePoint p;
    for (std::size_t s = 0; s < pn->groups.size(); ++s) {
      p.log_prefactor = std::log(pn->alpha[s]);
      p.vector = pn->groups[s];
      for (const auto& [x, u] : *pairs) {
        p.value = pn->norms[s][static_cast<Eigen::Index>(x)] * pn->norms[s][static_cast<Eigen::Index>(u)];
        if (!(p.value > 0)) continue;
        p.r = sp->distance(x, u);
        p.a = sp->norm(u);
        p.i = x;
        p.j = u;
        visit(p);
      }
    }
  };
}

PointSource sule_plus_source(const SpectralData& sd, const std::vector<std::size_t>& groups) {
  auto pn = projector_norms(sd, groups);
  auto sp = sd.space;
  return [pn, sp](const PointVisitor& visit) {
    EnvelopePoint p;
    for (std::size_t s = 0; s < pn->groups.size(); ++s) {
      p.log_prefactor = 0.5 * std::log(pn->alpha[s]);
      p.vector = pn->groups[s];
      p.a = sp->norm(pn->centers[s]);
      p.j = pn->centers[s];
      for (Eigen::Index x = 0; x < pn->norms[s].size(); ++x) {
        p.value = pn->norms[s][x];
        p.r = sp->distance(static_cast<Site>(x), pn->centers[s]);
        p.i = static_cast<Site>(x);
        visit(p);
      }
    }
  };
}

SudecPlusResult sudec_plus_check(const SpectralData& sd, const std::vector<std::size_t>& groups,
                                 const DecayParams& params, double kappa,
                                 const EnvelopeOptions& opt) {
  params.validate();
  const auto& space = *sd.space;
  SudecPlusResult out;
  out.kappa = kappa;
  const auto pn = projector_norms(sd, groups);
  out.centers = pn->centers;
  for (std::size_t s = 0; s < groups.size(); ++s) {
    const auto& grp = sd.groups[groups[s]];
    const double bracket = japanese_bracket(space.norm(pn->centers[s]));
    out.trace_bound_c = std::max(out.trace_bound_c, static_cast<double>(grp.multiplicity) /
                                                        (grp.alpha_E * std::pow(bracket, 2 * kappa)));
  }
  out.sudec_plus = fit_envelope(sudec_plus_source(sd, groups), request_from("SUDEC+", params, opt, false));
  out.sule_plus = fit_envelope(sule_plus_source(sd, groups), request_from("SULE+", params, opt, false));
  return out;
}

nlohmann::json SudecPlusResult::to_json() const {
  return {{"sudec_plus", sudec_plus.to_json()},
          {"sule_plus", sule_plus.to_json()},
          {"trace_bound_C", num(trace_bound_c)},
          {"kappa", kappa}};
}

AlphaCenterBound alpha_center_bound(const SiteSpace& space,
                                    const std::vector<LocalizationCenter>& centers, double kappa) {
  AlphaCenterBound out;
  out.minimum = centers.empty() ? 0.0 : kInf;
  for (const auto& c : centers) {
    const double v = c.alpha * std::pow(japanese_bracket(space.norm(c.x_phi)), 2 * kappa);
    out.products.push_back(v);
    out.minimum = std::min(out.minimum, v);
  }
  out.verdict = out.minimum > 0;
  return out;
}

nlohmann::json AlphaCenterBound::to_json() const {
  return {{"minimum", num(minimum)}, {"vectors", products.size()}, {"verdict", verdict ? "pass" : "fail"}};
}

CenterClusterCheck center_cluster_check(const SiteSpace& space, const Eigen::MatrixXd& basis,
                                        double delta, double cap) {
  if (!(delta >= 0)) throw ParameterError("delta must be >= 0");
  CenterClusterCheck out;
  out.delta = delta;
  out.cap = cap;
  const auto m = basis.cols();
  if (m <= 1) {
    out.skipped = true;
    out.vectors = static_cast<std::size_t>(m);
    if (m == 1) out.centers.push_back(localization_center(basis.col(0)));
    return out;
  }
  std::vector<Eigen::VectorXd> vecs;
  for (Eigen::Index i = 0; i < m; ++i) vecs.push_back(basis.col(i));
  const double s = 1 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      vecs.push_back(s * (basis.col(i) + basis.col(j)));
      vecs.push_back(s * (basis.col(i) - basis.col(j)));
    }
  for (const auto& v : vecs) out.centers.push_back(localization_center(v));
  out.vectors = vecs.size();
  for (auto xa : out.centers)
    for (auto xb : out.centers)
      out.c_delta = std::max(out.c_delta, space.distance(xa, xb) - delta * space.norm(xa));
  out.verdict = out.c_delta <= cap;
  return out;
}

nlohmann::json CenterClusterCheck::to_json() const {
  return {{"delta", delta},
          {"C_delta", c_delta},
          {"vectors", vectors},
          {"skipped", skipped},
          {"cap", cap},
          {"verdict", verdict ? "pass" : "fail"}};
}

CenterCensus center_census(const BasisView& basis, const std::vector<Site>& group_centers,
                           double kappa, double alpha_total) {
  const auto& space = *basis.space;
  CenterCensus out;
  out.kappa = kappa;
  out.alpha_total = alpha_total;
  for (std::size_t c = 0; c < basis.size(); ++c)
    out.sorted_norms.push_back(
        space.norm(localization_center(basis.vectors.col(static_cast<Eigen::Index>(c)))));
  std::sort(out.sorted_norms.begin(), out.sorted_norms.end());
  std::vector<int> gnorms;
  for (auto x : group_centers) gnorms.push_back(space.norm(x));
  std::sort(gnorms.begin(), gnorms.end());
  const int lmax = out.sorted_norms.empty() ? 0 : out.sorted_norms.back();
  for (int L = 0; L <= std::max(lmax, gnorms.empty() ? 0 : gnorms.back()); ++L) {
    out.radii.push_back(L);
    out.n_l.push_back(static_cast<std::size_t>(
        std::upper_bound(out.sorted_norms.begin(), out.sorted_norms.end(), L) - out.sorted_norms.begin()));
    out.ntilde_l.push_back(static_cast<std::size_t>(
        std::upper_bound(gnorms.begin(), gnorms.end(), L) - gnorms.begin()));
  }
  out.c_order = out.sorted_norms.empty() ? 0.0 : kInf;
  for (std::size_t k = 0; k < out.sorted_norms.size(); ++k)
    out.c_order = std::min(out.c_order, japanese_bracket(out.sorted_norms[k]) /
                                            std::pow(static_cast<double>(k + 1), 1 / (2 * kappa)));
  out.order_holds = out.c_order > 0 && std::isfinite(out.c_order);
  for (std::size_t i = 0; i < out.radii.size(); ++i) {
    const int L = out.radii[i];
    if (L < 1) continue;
    out.c_count = std::max(out.c_count, static_cast<double>(out.n_l[i]) /
                                            (std::pow(L, 2 * kappa) * alpha_total));
  }
  const double c = out.c_count * (1 + 1e-12);
  for (std::size_t i = 0; i < out.radii.size(); ++i) {
    const int L = out.radii[i];
    if (L >= 1 && static_cast<double>(out.n_l[i]) > c * std::pow(L, 2 * kappa) * alpha_total)
      ++out.count_violations;
  }
  return out;
}

nlohmann::json CenterCensus::to_json() const {
  bool tilde_le = true, monotone = true;
  for (std::size_t i = 0; i < n_l.size(); ++i) {
    tilde_le = tilde_le && ntilde_l[i] <= n_l[i];
    if (i) monotone = monotone && n_l[i] >= n_l[i - 1];
  }
  return {{"kappa", kappa},
          {"c_order", num(c_order)},
          {"order_holds", order_holds},
          {"alpha_total", alpha_total},
          {"C_count", num(c_count)},
          {"count_violations", count_violations},
          {"N_L_monotone", monotone},
          {"Ntilde_le_N", tilde_le},
          {"max_radius", radii.empty() ? 0 : radii.back()}};
}

MixedExponentResult mixed_exponent_check(const BasisView& basis,
                                         const std::vector<std::size_t>& selection,
                                         const DecayParams& params, const SudecOptions& opt) {
  if (!params.zeta_prime) throw ParameterError("mixed-exponent check needs zeta'");
  MixedExponentResult out;
  SudecOptions mixed = opt;
  mixed.mixed = true;
  SudecOptions plain = opt;
  plain.mixed = false;
  out.sudec_prime = sudec_check(basis, selection, params, RateFunction::identity(), mixed);
  out.sule_prime = sule_fit(basis, selection, params, opt.envelope, true);
  out.sudec_plain = sudec_check(basis, selection, params, RateFunction::identity(), plain);
  out.sule_plain = sule_fit(basis, selection, params, opt.envelope, false);
  return out;
}

nlohmann::json MixedExponentResult::to_json() const {
  return {{"sudec_prime", sudec_prime.to_json()},
          {"sule_prime", sule_prime.to_json()},
          {"sudec_plain", sudec_plain.to_json()},
          {"sule_plain", sule_plain.to_json()}};
}

}  // namespace loclab
