// Closed-form constructions where the projector-level bounds fail: lowest
// Landau level eigenfunctions and disjoint copies of a finite cluster.
#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "loclab/diagnostics.hpp"

namespace loclab {

struct LandauSpec {
  double B = 1.0;
  int n_max = 10000;
  void validate() const;
};

// log |phi_n| at radius r >= 0 (-inf at r = 0 for n > 0).
double landau_log_amplitude(double B, int n, double r);
// |phi_n(z)| = (B^{n+1} / (2 pi 2^n n!))^{1/2} |z|^n e^{-(B/4)|z|^2}, via lgamma;
// the extra B makes 2 pi int |phi_n|^2 r dr = 1 for every B.
double landau_amplitude(const LandauSpec& spec, int n, std::complex<double> z);
// sqrt(2n/B): maximizer of r^{2n} e^{-B r^2 / 2}.
double landau_peak_radius(double B, int n);

struct OppositeProduct {
  int n = 0;
  double radius = 0;
  double direct = 0;        // product of two amplitude evaluations at +-radius
  double closed_form = 0;   // B n^n e^{-n} / (2 pi n!) via lgamma
  double product_sum = 0;   // B exp(sum_k log(n/k) - n - log 2 pi)
  double rel_err = 0;       // |direct - closed_form| / closed_form
  double stirling_ratio = 0;  // closed_form / B * 2 pi sqrt(2 pi n)
};

OppositeProduct landau_opposite_product(const LandauSpec& spec, int n);

// 2 pi int_0^inf |phi_n(r)|^2 r dr by adaptive Gauss-Kronrod.
double landau_normalization(const LandauSpec& spec, int n);

struct LandauViolationRow {
  int n = 0;
  double separation = 0;  // |z1 - z2| = 2 sqrt(2n/B)
  double product = 0;
  double bound = 0;       // e^{-sigma sep^zeta}
  double log_ratio = 0;
  double ratio = 0;       // product / bound (inf past double range)
};

struct LandauViolation {
  double B = 1, sigma = 0, zeta = 1, threshold = 1e6;
  std::vector<LandauViolationRow> rows;
  std::optional<int> first_exceeding;  // smallest n with ratio > threshold
  int monotone_from = 0;               // ratio nondecreasing from this n on
  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json to_json() const;
};

LandauViolation landau_sudec_violation(const LandauSpec& spec, int n_min, int n_max, double sigma,
                                       double zeta, double threshold = 1e6);

struct ClusterSpec {
  SpacePtr base;  // defaults to a 4-site path
  int copies = 2;
  std::vector<int> separations{10, 20, 40, 80};
  DecayParams params{0.05, 1.0, 0.1, std::nullopt, std::nullopt};
  double kappa = 1.0;
  double delta = 0.1;
  double c_cap = 10.0;
  int rotations = 5;
  std::uint64_t seed = 7;
};

struct ClusterRow {
  int separation = 0;
  // Blockwise (solver) basis.
  double blockwise_sule_sigma = 0, blockwise_sule_epsilon = 0, blockwise_sule_c = 0;
  bool blockwise_sule_pass = false;
  double blockwise_sudec_sigma = 0;
  bool blockwise_sudec_pass = false;
  // Pairwise symmetric rotation of every degenerate group.
  double rotated_sule_required_c = 0;
  double rotated_sudec_required_c = 0;
  double rotated_sudec_sigma = 0;
  bool rotated_sudec_pass = false;
  double cross_copy_symmetric_product = 0;  // max |phi(x)||phi(u)| across copies
  // Projector level.
  double sudec_plus_required_c = 0;
  double sule_plus_required_c = 0;
  DecayFit sudec_plus;
  bool sudec_plus_pass = false;
  double rotation_invariance_error = 0;  // SUDEC+ fit spread over random rotations
  bool rotation_verdicts_agree = false;
  double c_delta = 0;
  double spectrum_shift = 0;  // max |E_k(D) - E_k(D_0)|
  std::size_t min_multiplicity = 0;
};

struct ClusterReport {
  ClusterSpec spec;
  std::vector<ClusterRow> rows;
  bool rotated_sudec_increasing = false, rotated_sule_increasing = false,
       sudec_plus_increasing = false;
  double rotated_sudec_ratio = 0, rotated_sule_ratio = 0, sudec_plus_ratio = 0;
  bool c_delta_nondecreasing = false;
  double c_delta_growth = 0, c_delta_growth_required = 0;
  bool blockwise_constant = false;  // SULE fit identical across D
  bool blockwise_pass = false;
  bool spectra_identical = false;
  bool rotation_invariant = false;     // SUDEC+ unchanged by random rotations
  bool sudec_basis_dependent = false;  // plain SUDEC verdicts differ for some D
  bool verdict = false;  // every item above holds
  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json to_json() const;
};

ClusterReport cluster_suleplus_violation(const ClusterSpec& spec);

}  // namespace loclab
