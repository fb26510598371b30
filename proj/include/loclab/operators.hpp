// Tight-binding Hamiltonians and weight operators on a SiteSpace.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "loclab/geometry.hpp"

namespace loclab {

// Below this dimension the matrix is stored densely.
inline constexpr std::size_t kDenseLimit = 4000;

// Off-diagonal entry H(i,j) = H(j,i) = value, stored once with i < j.
struct Hopping {
  Site i = 0;
  Site j = 0;
  double value = 0;
};

struct HamiltonianLabel {
  std::string kind;       // laplacian | anderson | cluster | imported
  nlohmann::json params;  // construction parameters, enough to rebuild
};

class Hamiltonian {
 public:
  Hamiltonian(SpacePtr space, Eigen::VectorXd diagonal, std::vector<Hopping> hoppings,
              HamiltonianLabel label);

  const SiteSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  std::size_t dimension() const { return space_->size(); }
  const HamiltonianLabel& label() const { return label_; }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  const std::vector<Hopping>& hoppings() const { return hoppings_; }

  bool is_dense() const { return std::holds_alternative<Eigen::MatrixXd>(matrix_); }
  Eigen::MatrixXd dense() const;
  Eigen::SparseMatrix<double> sparse() const;
  double entry(Site i, Site j) const;

  // Gershgorin interval [min diag - max radius, max diag + max radius].
  std::pair<double, double> gershgorin_interval() const;
  // Largest absolute row sum; the spectral-norm proxy used for residual checks.
  double gershgorin_norm() const;

 private:
  SpacePtr space_;
  Eigen::VectorXd diagonal_;
  std::vector<Hopping> hoppings_;
  HamiltonianLabel label_;
  std::variant<Eigen::MatrixXd, Eigen::SparseMatrix<double>> matrix_;
};

// (-Delta psi)(x) = sum_{y~x} (psi(x) - psi(y)).
Hamiltonian build_laplacian(SpacePtr space);

// Lattice Laplacian with zero boundary values outside the box: diagonal 2*dim.
Hamiltonian build_dirichlet_laplacian(SpacePtr space);

// -Delta + V with V(x) uniform on [-W/2, W/2]; see anderson_potential().
Hamiltonian build_anderson(SpacePtr space, double width, std::uint64_t seed);

// Deterministic per-site draw: SplitMix64 keyed by (seed, site key). Lattice
// sites are keyed by coordinate so nested boxes share their potential.
double anderson_potential(const SiteSpace& space, Site x, double width, std::uint64_t seed);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct ClusterLayout {
  SpacePtr space;
  int copies = 0;
  int separation = 0;
  std::size_t copy_size = 0;
  // Site range [c * copy_size, (c+1) * copy_size) belongs to copy c.
  int copy_of(Site x) const { return static_cast<int>(x / copy_size); }
};

// J translated copies of a lattice cluster along the first axis with
// sup-norm gap `separation` between consecutive copies.
ClusterLayout layout_clusters(const SiteSpace& base, int copies, int separation);
Hamiltonian build_cluster_laplacian(const SiteSpace& base, int copies, int separation);

class WeightOperator {
 public:
  enum class Kind { LatticePolynomial, GraphExponential };

  // T(x) = <x>^kappa with <x> = sqrt(1 + |x|^2); requires kappa > d/2.
  static WeightOperator lattice_polynomial(const SiteSpace& space, double kappa);
  // T(u) = exp(|u|^alpha), alpha in (0,1).
  static WeightOperator graph_exponential(const SiteSpace& space, double alpha);

  Kind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return values_.cwiseProduct(v); }
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& v) const {
    return v.cwiseQuotient(values_);
  }
  // sum_x T(x)^-2, the trace of T^-2 (equals alpha_{H,E} for the full window).
  double inverse_square_trace() const;

 private:
  Kind kind_ = Kind::LatticePolynomial;
  double parameter_ = 0;
  Eigen::VectorXd values_;
};

double japanese_bracket(double r);

// Export: line 1 is a compact JSON header, then "row,col,value" CSV triplets
// for the upper-triangular nonzeros (including the diagonal).
void write_hamiltonian(const Hamiltonian& h, const std::filesystem::path& path);
Hamiltonian read_hamiltonian(const std::filesystem::path& path);

nlohmann::json space_to_json(const SiteSpace& space);
SiteSpace space_from_json(const nlohmann::json& j);

}  // namespace loclab
