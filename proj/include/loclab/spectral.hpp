// Full eigendecomposition, degeneracy grouping, alpha weights and projector
// kernel norms evaluated through eigenvector columns.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "loclab/geometry.hpp"
#include "loclab/operators.hpp"

namespace loclab {

inline constexpr std::size_t kMaxDiagonalizeDimension = 5000;

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double worst_residual)
      : std::runtime_error(what), worst_residual_(worst_residual) {}
  double worst_residual() const { return worst_residual_; }

 private:
  double worst_residual_;
};

struct ProjectorGroup {
  double energy = 0;                 // mean of the member eigenvalues
  std::vector<std::size_t> indices;  // eigenvector columns, consecutive
  std::size_t multiplicity = 0;
  double alpha_E = 0;                // tr{T^-1 P_E T^-1}, set by assign_alpha
  std::vector<double> alpha_phi;     // ||T^-1 phi||^2 per member
};

struct SpectralData {
  SpacePtr space;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns
  std::vector<ProjectorGroup> groups;
  std::vector<std::size_t> group_of;  // eigenvector index -> group index
  double residual = 0;                // max |Hv - Ev|
  double orthonormality_error = 0;    // max |<v_i,v_j> - delta_ij|
  double operator_norm = 0;           // Gershgorin proxy
  double degeneracy_tol = 0;
  nlohmann::json provenance;
  std::optional<Eigen::VectorXd> weight;  // T values used for alpha

  std::size_t dimension() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double width() const {
    return eigenvalues.size() ? eigenvalues[eigenvalues.size() - 1] - eigenvalues[0] : 0.0;
  }
  // Columns of one group as an n x m block.
  Eigen::MatrixXd group_vectors(std::size_t g) const;
};

// Blockwise over connected components of the hopping graph; eigenvectors are
// sign-normalized so their largest-magnitude entry (smallest index) is positive.
// Groups are formed with default_degeneracy_tol().
SpectralData diagonalize(const Hamiltonian& h);

double default_degeneracy_tol(const SpectralData& sd);

// Consecutive eigenvalues within tol merge into one group.
SpectralData group_projectors(SpectralData sd, double tol);

// Fills alpha_phi / alpha_E for every group.
void assign_alpha(SpectralData& sd, const WeightOperator& weight);

// Sum of alpha_E over the listed groups.
double alpha_total(const SpectralData& sd, const std::vector<std::size_t>& groups);

// ||chi_X P_E chi_U||_2 (Hilbert-Schmidt) from the group's Gram blocks.
double projector_kernel(const SpectralData& sd, std::size_t group, const SiteSet& x,
                        const SiteSet& u);
// ||chi_x P_E||_2 for a single site: sqrt(sum_j phi_j(x)^2).
double projector_site_norm(const SpectralData& sd, std::size_t group, Site x);
// P_E(x, u) = sum_j phi_j(x) phi_j(u).
double projector_entry(const SpectralData& sd, std::size_t group, Site x, Site u);

// Replace the basis of one group by (group columns) * q; alpha values are
// recomputed when a weight was assigned.
SpectralData rotate_group(const SpectralData& sd, std::size_t group, const Eigen::MatrixXd& q);
// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
Eigen::MatrixXd random_orthogonal(std::size_t m, std::uint64_t seed);
// Pairs (e_{2i} +- e_{2i+1})/sqrt(2); an odd last column is kept as is.
Eigen::MatrixXd pairwise_symmetric(std::size_t m);

// JSON cache with eigenpairs, group table and provenance.
void write_spectral_cache(const SpectralData& sd, const std::filesystem::path& path);
SpectralData read_spectral_cache(const std::filesystem::path& path);

}  // namespace loclab
