// Localization criteria as measurable quantities: projector profiles, the
// A_k ledger, kernel interpolation, eigenfunction envelopes (single-site and
// two-site), projector-level bounds and localization-center censuses.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "loclab/dynamics.hpp"
#include "loclab/envelope.hpp"
#include "loclab/spectral.hpp"

namespace loclab {

// A set of unit vectors on a site space with their weighted masses. Built from
// a spectral decomposition or from synthetic vectors.
struct BasisView {
  SpacePtr space;
  Eigen::MatrixXd vectors;         // columns
  std::vector<double> alpha;       // ||T^-1 phi||^2
  std::vector<std::size_t> group;  // group label per column
  std::vector<std::size_t> source_index;  // eigenvector index, or column index

  std::size_t size() const { return static_cast<std::size_t>(vectors.cols()); }
};

// Eigenvectors whose cutoff value is positive; requires assign_alpha().
BasisView basis_view(const SpectralData& sd, const EnergyWindow& window);
// Synthetic columns, normalized; alpha from the weight.
BasisView basis_from_vectors(SpacePtr space, const Eigen::MatrixXd& vectors,
                             const WeightOperator& weight);

// ---- projector profile ------------------------------------------------------

struct SulpProfile {
  Site u = 0;
  Eigen::VectorXd profile;  // P_u(x) = sup_g X_g ||chi_x P_g chi_u||
  double l_value = 0;       // sum_x e^{sigma|x-u|^zeta} P_u(x)^2
  double liminf = 0;        // liminf of the Cesaro moment (diagonal formula)
  // Smallest C with P_u(x) <= C sqrt(liminf) e^{-sigma/2 |x-u|^zeta}.
  double required_c = 0;
  // Certified fit of P_u(x) / sqrt(liminf) against the decay e^{-rate r^zeta};
  // the fitted rate is sigma_hat/2.
  DecayFit fit;
  double sigma_hat = 0;  // 2 * fitted rate
  nlohmann::json to_json() const;
};

SulpProfile sulp_profile(const SpectralData& sd, const EnergyWindow& window, Site u,
                         const DecayParams& params, double c_cap = 10.0);

// ---- A_k ledger ---------------------------------------------------------------

struct ProjectorMassLedger {
  Site u = 0;
  std::vector<std::size_t> kept;      // groups with mass at u and X_g > 0
  std::vector<std::size_t> excluded;  // groups with X_g > 0 but no mass at u
  Eigen::MatrixXd a;                  // kept x sites
  std::vector<double> A;              // per kept group
  std::vector<double> sorted_A;
  double row_sum_error = 0;  // max |sum_x a_kx - 1|
  double column_sum_max = 0;  // max_x sum_k a_kx
  double c_tilde = 0;         // min_k log A_(k) / k^{zeta/d}
  bool growth_holds = false;  // A_(k) >= exp(c_tilde k^{zeta/d}) with c_tilde > 0
  bool degenerate = false;
  double zeta = 1;
  int dimension = 1;

  std::size_t counting(double l) const;  // #{k : A_k <= l}
  nlohmann::json to_json() const;
};

ProjectorMassLedger ak_ledger(const SpectralData& sd, const EnergyWindow& window, Site u,
                              const DecayParams& params);

// ---- kernel interpolation -----------------------------------------------------

struct KernelInterpolation {
  double gamma = 0.5;
  Eigen::VectorXd sup_kernel;      // sup_t ||chi_x e^{-itH} X(H) chi_u||
  Eigen::VectorXd bound_shape;     // P_u(x)^{1-gamma} L_u^{gamma/2}
  double c_min = 0;                // smallest C with sup_kernel <= C * bound_shape
  std::size_t violations = 0;      // at c_min
  Eigen::VectorXd holder_sum;      // sum_k ||chi_x P_k||^gamma A_k^{-gamma/2}
  double holder_max = 0;
  // Chain: sup_kernel <= c_min (C_sulp sqrt(liminf))^{1-gamma} e^{-(1-gamma) sigma/2 r^zeta} L^{gamma/2}
  std::size_t chain_violations = 0;
  bool verdict = false;
  nlohmann::json to_json() const;
};

KernelInterpolation kernel_interpolation_check(const SpectralData& sd, const EnergyWindow& window,
                                               Site u, const DecayParams& params,
                                               const std::vector<double>& times);

// ---- eigenfunction envelopes --------------------------------------------------

struct LocalizationCenter {
  std::size_t vector = 0;
  Site x_phi = 0;
  double peak = 0;
  double alpha = 0;
  double peak_over_sqrt_alpha = 0;
  double r_phi = 0;
};

// argmax_x |phi(x)|, smallest index on ties.
Site localization_center(const Eigen::Ref<const Eigen::VectorXd>& phi);

struct EnvelopeOptions {
  double c_cap = 10.0;
  std::vector<double> zeta_grid{0.25, 0.5, 0.75, 1.0};
};

struct SuleResult {
  std::vector<LocalizationCenter> centers;
  DecayFit fit;                      // joint fit over the selection
  std::vector<double> sigma_per_vector;  // at the requested zeta
  double sigma_min = 0;
  nlohmann::json to_json(bool with_centers = false) const;
};

// ||chi_x phi|| <= C e^{eps |x_phi|^zeta_a} e^{-sigma |x - x_phi|^zeta}.
SuleResult sule_fit(const BasisView& basis, const std::vector<std::size_t>& selection,
                    const DecayParams& params, const EnvelopeOptions& opt = {},
                    bool mixed = false);

struct RateFunction {
  std::string name = "identity";
  std::function<double(double)> f = [](double s) { return s; };
  static RateFunction identity();
  static RateFunction one();
  static RateFunction power(double p);
};

struct SudecOptions {
  EnvelopeOptions envelope;
  std::size_t max_pairs = 1000000;
  std::uint64_t seed = 0x5eed;
  bool mixed = false;  // allowance at exponent zeta'
};

struct SudecResult {
  DecayFit fit;
  std::string rate;
  std::size_t pairs = 0;
  bool subsampled = false;
  nlohmann::json to_json() const;
};

// ||chi_x phi|| ||chi_u phi|| <= C f(alpha_phi) e^{eps |u|^zeta_a} e^{-sigma |x-u|^zeta}.
SudecResult sudec_check(const BasisView& basis, const std::vector<std::size_t>& selection,
                        const DecayParams& params, const RateFunction& rate = RateFunction::identity(),
                        const SudecOptions& opt = {});

// Deterministic pair subsample: every diagonal pair plus at most
// max_pairs - n off-diagonal pairs spread evenly over the distance strata.
std::vector<std::pair<Site, Site>> sample_pairs(const SiteSpace& space, std::size_t max_pairs,
                                                std::uint64_t seed, bool* subsampled = nullptr);

struct SudecPlusResult {
  DecayFit sudec_plus;  // ||chi_x P_E|| ||chi_u P_E|| <= C alpha_E e^{eps|u|^zeta} e^{-sigma|x-u|^zeta}
  DecayFit sule_plus;   // ||chi_x P_E|| <= C sqrt(alpha_E) e^{eps|x_E|^zeta} e^{-sigma|x-x_E|^zeta}
  std::vector<Site> centers;          // x_E per group
  double trace_bound_c = 0;           // max_E N_E / (alpha_E <x_E>^{2 kappa})
  double kappa = 1;
  nlohmann::json to_json() const;
};

SudecPlusResult sudec_plus_check(const SpectralData& sd, const std::vector<std::size_t>& groups,
                                 const DecayParams& params, double kappa,
                                 const EnvelopeOptions& opt = {});

// Groups with a positive cutoff value.
std::vector<std::size_t> window_groups(const SpectralData& sd, const EnergyWindow& window);

struct AlphaCenterBound {
  std::vector<double> products;  // alpha_phi <x_phi>^{2 kappa}
  double minimum = 0;
  bool verdict = false;  // minimum > 0
  nlohmann::json to_json() const;
};

AlphaCenterBound alpha_center_bound(const SiteSpace& space,
                                    const std::vector<LocalizationCenter>& centers, double kappa);

struct CenterClusterCheck {
  double delta = 0.1;
  double c_delta = 0;
  std::size_t vectors = 0;
  bool skipped = false;  // single-vector group
  double cap = 10.0;
  bool verdict = true;   // c_delta <= cap
  std::vector<Site> centers;
  nlohmann::json to_json() const;
};

// Centers of the group basis and of every (phi_i +- phi_j)/sqrt(2);
// C_delta = max over ordered pairs of |x_a - x_b| - delta |x_a|, floored at 0.
CenterClusterCheck center_cluster_check(const SiteSpace& space, const Eigen::MatrixXd& group_basis,
                                        double delta, double cap = 10.0);

struct CenterCensus {
  std::vector<int> radii;
  std::vector<std::size_t> n_l;        // #{n : |x_phi_n| <= L}
  std::vector<std::size_t> ntilde_l;   // #{E : |x_E| <= L}
  std::vector<int> sorted_norms;       // |x_phi_(n)| increasing
  double kappa = 1;
  double c_order = 0;       // min_n <x_(n)> / n^{1/(2 kappa)}
  bool order_holds = false;
  double alpha_total = 0;
  double c_count = 0;       // max_{L>=1} N_L / (L^{2 kappa} alpha_total)
  std::size_t count_violations = 0;
  nlohmann::json to_json() const;
};

CenterCensus center_census(const BasisView& basis, const std::vector<Site>& group_centers,
                           double kappa, double alpha_total);

struct MixedExponentResult {
  SudecResult sudec_prime;  // alpha factor, allowance at zeta'
  SuleResult sule_prime;    // no alpha factor, allowance at zeta'
  SudecResult sudec_plain;
  SuleResult sule_plain;
  nlohmann::json to_json() const;
};

MixedExponentResult mixed_exponent_check(const BasisView& basis,
                                         const std::vector<std::size_t>& selection,
                                         const DecayParams& params, const SudecOptions& opt = {});

std::vector<std::size_t> all_columns(const BasisView& basis);

// Point sets behind the fits, for required-constant sweeps. The basis or
// spectral data must outlive a returned source.
std::vector<EnvelopePoint> sule_points(const BasisView& basis,
                                       const std::vector<std::size_t>& selection,
                                       std::vector<LocalizationCenter>* centers = nullptr);
PointSource sudec_source(const BasisView& basis, const std::vector<std::size_t>& selection,
                         const RateFunction& rate, const SudecOptions& opt,
                         SudecResult* info = nullptr);
PointSource sudec_plus_source(const SpectralData& sd, const std::vector<std::size_t>& groups);
PointSource sule_plus_source(const SpectralData& sd, const std::vector<std::size_t>& groups);

}  // namespace loclab
