#include "loclab/counterexamples.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "loclab/operators.hpp"
#include "loclab/report.hpp"

namespace loclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2 * std::numbers::pi);

double log_normalizer(double B, int n) {
  return 0.5 * ((n + 1) * std::log(B) - n * std::log(2.0) - kLog2Pi - std::lgamma(n + 1.0));
}

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0 ? std::abs(a - b) / s : 0.0;
}

}  // namespace

void LandauSpec::validate() const {
  if (!(B > 0)) throw ParameterError("Landau field B must be positive");
  if (n_max < 0) throw ParameterError("Landau n_max must be >= 0");
}

double landau_log_amplitude(double B, int n, double r) {
  if (n < 0) throw ParameterError("Landau index must be >= 0");
  if (r < 0) throw ParameterError("radius must be >= 0");
  if (r == 0 && n > 0) return -kInf;
  const double lr = n > 0 ? n * std::log(r) : 0.0;
  return log_normalizer(B, n) + lr - 0.25 * B * r * r;
}

double landau_amplitude(const LandauSpec& spec, int n, std::complex<double> z) {
  spec.validate();
  if (n > spec.n_max) throw ParameterError("Landau index exceeds n_max");
  const double r = std::abs(z);
  if (r == 0 && n > 0) return 0.0;
  return std::exp(landau_log_amplitude(spec.B, n, r));
}

double landau_peak_radius(double B, int n) { return std::sqrt(2.0 * n / B); }

OppositeProduct landau_opposite_product(const LandauSpec& spec, int n) {
  spec.validate();
  if (n < 1) throw ParameterError("opposite-point product needs n >= 1");
  OppositeProduct out;
  out.n = n;
  out.radius = landau_peak_radius(spec.B, n);
  const std::complex<double> z1(out.radius, 0.0), z2(-out.radius, 0.0);
  out.direct = landau_amplitude(spec, n, z1) * landau_amplitude(spec, n, z2);
  const double log_b = std::log(spec.B);
  out.closed_form = std::exp(log_b + n * std::log(static_cast<double>(n)) - n - kLog2Pi - std::lgamma(n + 1.0));
  double s = 0;
  for (int k = 1; k <= n; ++k) s += std::log(static_cast<double>(n) / k);
  out.product_sum = std::exp(log_b + s - n - kLog2Pi);
  out.rel_err = rel_diff(out.direct, out.closed_form);
  out.stirling_ratio = out.closed_form / spec.B * 2 * std::numbers::pi * std::sqrt(2 * std::numbers::pi * n);
  return out;
}

double landau_normalization(const LandauSpec& spec, int n) {
  spec.validate();
  if (n < 0) throw ParameterError("Landau index must be >= 0");
  const double B = spec.B;
  auto f = [B, n](double r) {
    if (r <= 0) return 0.0;
    return std::exp(2 * landau_log_amplitude(B, n, r)) * r;
  };
  const double peak = landau_peak_radius(B, n);
  const double tail = 12.0 / std::sqrt(B);
  const double lo = std::max(0.0, peak - tail), hi = peak + tail;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = GK::integrate(f, lo, hi, 15, 1e-13);
  if (lo > 0) total += GK::integrate(f, 0.0, lo, 15, 1e-13);
  return 2 * std::numbers::pi * total;
}

LandauViolation landau_sudec_violation(const LandauSpec& spec, int n_min, int n_max, double sigma,
                                       double zeta, double threshold) {
  spec.validate();
  if (!(zeta > 0 && zeta <= 1)) throw ParameterError("zeta must lie in (0,1]");
  if (!(sigma >= 0)) throw ParameterError("sigma must be >= 0");
  if (n_min < 1 || n_max < n_min) throw ParameterError("Landau range must be nonempty with n >= 1");
  if (n_max > spec.n_max) throw ParameterError("Landau range exceeds n_max");
  if (!(threshold > 0)) throw ParameterError("threshold must be positive");
  LandauViolation out;
  out.B = spec.B;
  out.sigma = sigma;
  out.zeta = zeta;
  out.threshold = threshold;
  const double log_thr = std::log(threshold);
  for (int n = n_min; n <= n_max; ++n) {
    LandauViolationRow row;
    row.n = n;
    row.separation = 2 * landau_peak_radius(spec.B, n);
    const double lp = 2 * landau_log_amplitude(spec.B, n, 0.5 * row.separation);
    const double decay = sigma * std::pow(row.separation, zeta);
    row.product = std::exp(lp);
    row.bound = std::exp(-decay);
    row.log_ratio = lp + decay;
    row.ratio = std::exp(row.log_ratio);
    if (!out.first_exceeding && row.log_ratio > log_thr) out.first_exceeding = n;
    out.rows.push_back(row);
  }
  std::size_t k = out.rows.size() - 1;
  while (k > 0 && out.rows[k - 1].log_ratio <= out.rows[k].log_ratio) --k;
  out.monotone_from = out.rows[k].n;
  return out;
}

void LandauViolation::write_csv(const std::filesystem::path& path) const {
  CsvTable t({"n", "separation", "product", "bound", "ratio", "log_ratio"});
  for (const auto& r : rows)
    t.add_row(std::vector<double>{static_cast<double>(r.n), r.separation, r.product, r.bound,
                                  r.ratio, r.log_ratio});
  t.write(path);
}

nlohmann::json LandauViolation::to_json() const {
  nlohmann::json j{{"B", B},
                   {"sigma", sigma},
                   {"zeta", zeta},
                   {"threshold", threshold},
                   {"n_min", rows.empty() ? 0 : rows.front().n},
                   {"n_max", rows.empty() ? 0 : rows.back().n},
                   {"monotone_from", monotone_from},
                   {"violated", first_exceeding.has_value()}};
  j["first_exceeding_n"] = first_exceeding ? nlohmann::json(*first_exceeding) : nlohmann::json();
  if (!rows.empty()) {
    j["final_ratio"] = json_number(rows.back().ratio);
    j["final_log_ratio"] = json_number(rows.back().log_ratio);
  }
  return j;
}

// ---- disjoint cluster copies -------------------------------------------------

namespace {

struct ClusterSpectrum {
  SpectralData sd;
  std::vector<std::size_t> groups;
  ClusterLayout layout;
};

ClusterSpectrum cluster_spectrum(const SiteSpace& base, int copies, int separation, double kappa) {
  ClusterSpectrum cs;
  cs.layout = layout_clusters(base, copies, separation);
  const auto h = build_cluster_laplacian(base, copies, separation);
  cs.sd = diagonalize(h);
  assign_alpha(cs.sd, WeightOperator::lattice_polynomial(*cs.sd.space, kappa));
  for (std::size_t g = 0; g < cs.sd.groups.size(); ++g) cs.groups.push_back(g);
  return cs;
}

SpectralData rotate_all(const SpectralData& sd, const std::function<Eigen::MatrixXd(std::size_t, std::size_t)>& q) {
  SpectralData out = sd;
  for (std::size_t g = 0; g < sd.groups.size(); ++g) {
    const auto m = sd.groups[g].multiplicity;
    if (m > 1) out = rotate_group(out, g, q(g, m));
  }
  return out;
}

BasisView basis_of(const SpectralData& sd) {
  return basis_view(sd, full_window(sd));
}

bool increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

double ratio(const std::vector<double>& v) {
  return v.empty() || !(v.front() > 0) ? kInf : v.back() / v.front();
}

bool same(double a, double b) {
  if (a == b) return true;
  return rel_diff(a, b) <= 1e-10;
}

}  // namespace

ClusterReport cluster_suleplus_violation(const ClusterSpec& spec_in) {
  ClusterReport rep;
  rep.spec = spec_in;
  auto& spec = rep.spec;
  if (!spec.base) spec.base = std::make_shared<const SiteSpace>(SiteSpace::lattice_box(1, 4));
  spec.params.validate();
  if (spec.separations.empty()) throw ParameterError("separation sweep must be nonempty");
  for (std::size_t i = 1; i < spec.separations.size(); ++i)
    if (spec.separations[i] <= spec.separations[i - 1])
      throw ParameterError("separation sweep must be increasing");
  if (spec.rotations < 0) throw ParameterError("rotation count must be >= 0");

  const auto& p = spec.params;
  const EnvelopeOptions env{spec.c_cap, {0.25, 0.5, 0.75, 1.0}};
  SudecOptions sopt;
  sopt.envelope = env;

  Eigen::VectorXd reference_spectrum;
  std::vector<double> rot_sudec, rot_sule, plus_c, cdelta;
  bool spectra_ok = true, blockwise_ok = true, invariant = true, dependent = false;
  std::optional<SuleResult> first_sule;
  bool constant = true;

  for (int D : spec.separations) {
    const auto cs = cluster_spectrum(*spec.base, spec.copies, D, spec.kappa);
    const auto& sd = cs.sd;
    ClusterRow row;
    row.separation = D;
    row.min_multiplicity = sd.dimension();
    for (const auto& g : sd.groups) row.min_multiplicity = std::min(row.min_multiplicity, g.multiplicity);
    if (reference_spectrum.size() == 0) reference_spectrum = sd.eigenvalues;
    row.spectrum_shift = (sd.eigenvalues - reference_spectrum).cwiseAbs().maxCoeff();
    spectra_ok = spectra_ok && row.spectrum_shift <= 1e-12 * std::max(1.0, sd.operator_norm);

    // Blockwise basis from the solver: every vector lives in one copy.
    const auto block = basis_of(sd);
    const auto sel = all_columns(block);
    const auto sule = sule_fit(block, sel, p, env);
    row.blockwise_sule_sigma = sule.fit.sigma_hat;
    row.blockwise_sule_epsilon = sule.fit.epsilon_hat;
    row.blockwise_sule_c = sule.fit.c_hat;
    row.blockwise_sule_pass = sule.fit.verdict;
    blockwise_ok = blockwise_ok && sule.fit.verdict;
    if (!first_sule) {
      first_sule = sule;
    } else {
      constant = constant && same(sule.fit.sigma_hat, first_sule->fit.sigma_hat) &&
                 same(sule.fit.epsilon_hat, first_sule->fit.epsilon_hat) &&
                 same(sule.fit.c_hat, first_sule->fit.c_hat) &&
                 sule.fit.zeta_hat == first_sule->fit.zeta_hat;
    }
    const auto bsudec = sudec_check(block, sel, p, RateFunction::identity(), sopt);
    row.blockwise_sudec_sigma = bsudec.fit.sigma_at_required_zeta;
    row.blockwise_sudec_pass = bsudec.fit.verdict;

    // Symmetric / antisymmetric combinations across copies.
    const auto rotated = rotate_all(sd, [](std::size_t, std::size_t m) { return pairwise_symmetric(m); });
    const auto rb = basis_of(rotated);
    const auto rpts = sule_points(rb, sel);
    row.rotated_sule_required_c = required_constant(points_from(rpts), p.sigma, p.zeta, p.epsilon);
    const auto rsrc = sudec_source(rb, sel, RateFunction::identity(), sopt);
    row.rotated_sudec_required_c = required_constant(rsrc, p.sigma, p.zeta, p.epsilon);
    const auto rsudec = sudec_check(rb, sel, p, RateFunction::identity(), sopt);
    row.rotated_sudec_sigma = rsudec.fit.sigma_at_required_zeta;
    row.rotated_sudec_pass = rsudec.fit.verdict;
    dependent = dependent || (row.rotated_sudec_pass != row.blockwise_sudec_pass);
    for (Eigen::Index c = 0; c < rb.vectors.cols(); ++c) {
      const auto v = rb.vectors.col(c).cwiseAbs();
      for (Eigen::Index x = 0; x < v.size(); ++x)
        for (Eigen::Index u = 0; u < v.size(); ++u)
          if (cs.layout.copy_of(static_cast<Site>(x)) != cs.layout.copy_of(static_cast<Site>(u)))
            row.cross_copy_symmetric_product = std::max(row.cross_copy_symmetric_product, v[x] * v[u]);
    }

    // Projector level, which no choice of basis can change.
    const auto plus = sudec_plus_check(sd, cs.groups, p, spec.kappa, env);
    row.sudec_plus = plus.sudec_plus;
    row.sudec_plus_pass = plus.sudec_plus.verdict;
    row.sudec_plus_required_c = required_constant(sudec_plus_source(sd, cs.groups), p.sigma, p.zeta, p.epsilon);
    row.sule_plus_required_c = required_constant(sule_plus_source(sd, cs.groups), p.sigma, p.zeta, p.epsilon);
    row.rotation_verdicts_agree = true;
    for (int r = 0; r < spec.rotations; ++r) {
      const auto seed = derive_seed(spec.seed, static_cast<std::uint64_t>(r));
      const auto q = rotate_all(sd, [seed](std::size_t g, std::size_t m) {
        return random_orthogonal(m, derive_seed(seed, g));
      });
      const auto fit = sudec_plus_check(q, cs.groups, p, spec.kappa, env).sudec_plus;
      const double req = required_constant(sudec_plus_source(q, cs.groups), p.sigma, p.zeta, p.epsilon);
      row.rotation_invariance_error = std::max(
          {row.rotation_invariance_error, rel_diff(fit.sigma_hat, row.sudec_plus.sigma_hat),
           rel_diff(fit.c_hat, row.sudec_plus.c_hat), rel_diff(fit.epsilon_hat, row.sudec_plus.epsilon_hat),
           rel_diff(req, row.sudec_plus_required_c)});
      if (fit.verdict != row.sudec_plus.verdict || fit.zeta_hat != row.sudec_plus.zeta_hat)
        row.rotation_verdicts_agree = false;
    }
    invariant = invariant && row.rotation_verdicts_agree && row.rotation_invariance_error <= 1e-10;

    for (auto g : cs.groups) {
      const auto cc = center_cluster_check(*sd.space, sd.group_vectors(g), spec.delta, spec.c_cap);
      row.c_delta = std::max(row.c_delta, cc.c_delta);
    }

    rot_sudec.push_back(row.rotated_sudec_required_c);
    rot_sule.push_back(row.rotated_sule_required_c);
    plus_c.push_back(row.sudec_plus_required_c);
    cdelta.push_back(row.c_delta);
    rep.rows.push_back(std::move(row));
  }

  rep.rotated_sudec_increasing = increasing(rot_sudec);
  rep.rotated_sule_increasing = increasing(rot_sule);
  rep.sudec_plus_increasing = increasing(plus_c);
  rep.rotated_sudec_ratio = ratio(rot_sudec);
  rep.rotated_sule_ratio = ratio(rot_sule);
  rep.sudec_plus_ratio = ratio(plus_c);
  rep.c_delta_nondecreasing = std::is_sorted(cdelta.begin(), cdelta.end());
  rep.c_delta_growth = cdelta.back() - cdelta.front();
  rep.c_delta_growth_required =
      (spec.separations.back() - spec.separations.front()) * (1 - spec.delta);
  rep.blockwise_constant = constant;
  rep.blockwise_pass = blockwise_ok;
  rep.spectra_identical = spectra_ok;
  rep.rotation_invariant = invariant;
  rep.sudec_basis_dependent = dependent;
  const bool multi = spec.separations.size() > 1;
  rep.verdict = rep.blockwise_pass && rep.blockwise_constant && rep.spectra_identical &&
                rep.rotated_sudec_increasing && rep.rotated_sule_increasing &&
                rep.sudec_plus_increasing && rep.c_delta_nondecreasing && rep.rotation_invariant &&
                (!multi || (rep.rotated_sudec_ratio >= 10 && rep.rotated_sule_ratio >= 10 &&
                            rep.sudec_plus_ratio >= 10 &&
                            rep.c_delta_growth >= rep.c_delta_growth_required));
  return rep;
}

void ClusterReport::write_csv(const std::filesystem::path& path) const {
  CsvTable t({"D", "required_C", "C_delta", "rotated_SUDEC_C", "rotated_SULE_C", "SULE_plus_C",
              "blockwise_SULE_sigma", "blockwise_SULE_C", "blockwise_SUDEC_pass", "rotated_SUDEC_pass",
              "SUDEC_plus_sigma", "rotation_invariance_error"});
  for (const auto& r : rows)
    t.add_row(std::vector<double>{static_cast<double>(r.separation), r.sudec_plus_required_c, r.c_delta,
                                  r.rotated_sudec_required_c, r.rotated_sule_required_c,
                                  r.sule_plus_required_c, r.blockwise_sule_sigma, r.blockwise_sule_c,
                                  r.blockwise_sudec_pass ? 1.0 : 0.0, r.rotated_sudec_pass ? 1.0 : 0.0,
                                  r.sudec_plus.sigma_hat, r.rotation_invariance_error});
  t.write(path);
}

nlohmann::json ClusterReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"D", r.separation},
                  {"blockwise_SULE", {{"sigma_hat", json_number(r.blockwise_sule_sigma)},
                                      {"epsilon_hat", json_number(r.blockwise_sule_epsilon)},
                                      {"C_hat", json_number(r.blockwise_sule_c)},
                                      {"verdict", r.blockwise_sule_pass ? "pass" : "fail"}}},
                  {"blockwise_SUDEC", {{"sigma_at_required_zeta", json_number(r.blockwise_sudec_sigma)},
                                       {"verdict", r.blockwise_sudec_pass ? "pass" : "fail"}}},
                  {"rotated_SULE_required_C", json_number(r.rotated_sule_required_c)},
                  {"rotated_SUDEC", {{"required_C", json_number(r.rotated_sudec_required_c)},
                                     {"sigma_at_required_zeta", json_number(r.rotated_sudec_sigma)},
                                     {"verdict", r.rotated_sudec_pass ? "pass" : "fail"}}},
                  {"cross_copy_product_max", json_number(r.cross_copy_symmetric_product)},
                  {"SUDEC_plus_required_C", json_number(r.sudec_plus_required_c)},
                  {"SULE_plus_required_C", json_number(r.sule_plus_required_c)},
                  {"SUDEC_plus", r.sudec_plus.to_json()},
                  {"rotation_invariance_error", json_number(r.rotation_invariance_error)},
                  {"rotation_verdicts_agree", r.rotation_verdicts_agree},
                  {"C_delta", json_number(r.c_delta)},
                  {"spectrum_shift", json_number(r.spectrum_shift)},
                  {"min_multiplicity", r.min_multiplicity}});
  return {{"copies", spec.copies},
          {"separations", spec.separations},
          {"base_sites", spec.base ? spec.base->size() : 0},
          {"params", spec.params.to_json()},
          {"kappa", spec.kappa},
          {"delta", spec.delta},
          {"C_cap", spec.c_cap},
          {"rotations", spec.rotations},
          {"seed", spec.seed},
          {"rows", rs},
          {"rotated_SUDEC_increasing", rotated_sudec_increasing},
          {"rotated_SULE_increasing", rotated_sule_increasing},
          {"SUDEC_plus_increasing", sudec_plus_increasing},
          {"rotated_SUDEC_ratio", json_number(rotated_sudec_ratio)},
          {"rotated_SULE_ratio", json_number(rotated_sule_ratio)},
          {"SUDEC_plus_ratio", json_number(sudec_plus_ratio)},
          {"C_delta_nondecreasing", c_delta_nondecreasing},
          {"C_delta_growth", json_number(c_delta_growth)},
          {"C_delta_growth_required", json_number(c_delta_growth_required)},
          {"blockwise_constant", blockwise_constant},
          {"blockwise_pass", blockwise_pass},
          {"spectra_identical", spectra_identical},
          {"rotation_invariant", rotation_invariant},
          {"SUDEC_basis_dependent", sudec_basis_dependent},
          {"verdict", verdict ? "pass" : "fail"}};
}

}  // namespace loclab
