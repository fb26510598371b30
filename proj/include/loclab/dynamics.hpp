// Smooth energy cutoffs, exact spectral time evolution and weighted transport
// moments with their Cesaro/Abel time averages.
#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "loclab/spectral.hpp"

namespace loclab {

// sigma >= 0, zeta in (0,1], epsilon >= 0, zeta' in (zeta,1], gamma in (0,1).
// sigma = 0 and epsilon = 0 are accepted as boundary cases.
struct DecayParams {
  double sigma = 0.1;
  double zeta = 1.0;
  double epsilon = 0.01;
  std::optional<double> zeta_prime;
  std::optional<double> gamma;

  void validate() const;
  nlohmann::json to_json() const;
};

// C-infinity cutoff: 0 outside [a,b], 1 on [a+w, b-w] with w = margin*(b-a)/2,
// and joined by the integrated bump exp(-1/(1-s^2)) across each ramp.
class EnergyWindow {
 public:
  EnergyWindow() = default;
  EnergyWindow(double a, double b, double margin);

  double a() const { return a_; }
  double b() const { return b_; }
  double margin() const { return margin_; }
  double operator()(double energy) const;

  // Values at every eigenvalue and at every group energy.
  std::vector<double> sampled;
  std::vector<double> group_values;
  bool degenerate = false;  // no eigenvalue with a positive cutoff value
  std::string label;

  nlohmann::json to_json() const;

 private:
  double a_ = 0, b_ = 1, margin_ = 0.02;
};

// Normalized integral of the standard bump: ramp(0)=0, ramp(1)=1, ramp(1/2)=1/2.
double smooth_ramp(double s);

EnergyWindow make_window(const SpectralData& sd, double a, double b, double margin);
// Interval [min E - pad, max E + pad], pad = 0.05*width + 0.05, margin 0.02, so
// the cutoff equals 1 on every eigenvalue.
EnergyWindow full_window(const SpectralData& sd);
// Same construction from an a priori spectral interval (for example Gershgorin).
EnergyWindow full_window(const SpectralData& sd, double lo, double hi);

// Energy-filtered state e^{-itH} X(H) delta_u, evaluated for many times at once.
class Propagator {
 public:
  Propagator(const SpectralData& sd, const EnergyWindow& window, Site u);
  // psi_t(x) for every site; one column per time.
  Eigen::MatrixXcd evolve(const std::vector<double>& times) const;
  const Eigen::VectorXd& coefficients() const { return coeff_; }

 private:
  const SpectralData* sd_;
  Eigen::VectorXd coeff_;  // X(E_k) v_k(u)
};

// ||chi_X e^{-itH} X(H) chi_U||_2.
double evolved_kernel(const SpectralData& sd, const EnergyWindow& window, const SiteSet& x,
                      const SiteSet& u, double t);

// log M_u(sigma, zeta, X, t); accumulated as a log-sum-exp.
double log_moment(const SpectralData& sd, const EnergyWindow& window, Site u,
                  const DecayParams& params, double t);
// exp(log_moment); throws std::overflow_error instead of returning inf.
double moment(const SpectralData& sd, const EnergyWindow& window, Site u,
              const DecayParams& params, double t);

// e^{sigma |x-u|^zeta} in log form for every site.
Eigen::VectorXd log_moment_weights(const SiteSpace& space, Site u, const DecayParams& params);

std::vector<double> default_time_grid();  // 0 plus 200 log-spaced points in [0.1, 1e4]
std::vector<double> log_time_grid(double t_min, double t_max, std::size_t count);
std::vector<double> uniform_time_grid(double t_max, double step);
// Largest step that resolves the fastest phase e^{i(E_k - E_k')t}: pi / (2 * width).
double resolving_time_step(const SpectralData& sd);

// Trapezoidal (1/T) int_0^T f dt at every grid time T > 0 (NaN at T = 0).
std::vector<double> cesaro_average(const std::vector<double>& times,
                                   const std::vector<double>& values);
// (1/T) int_0^{40T} e^{-t/T} f dt; NaN where 40T exceeds the grid.
std::vector<double> abel_average(const std::vector<double>& times,
                                 const std::vector<double>& values);
inline constexpr double kAbelHorizon = 40.0;

// Exact time averages of the moment from the spectral expansion
// M(t) = sum_{k,k'} B_kk' cos((E_k - E_k') t).
class ExactMomentAverages {
 public:
  ExactMomentAverages(const SpectralData& sd, const EnergyWindow& window, Site u,
                      const DecayParams& params);
  double cesaro(double T) const;
  double abel(double T) const;
  double at(double t) const;
  double limit() const;  // T -> infinity: pairs inside one degeneracy group

 private:
  Eigen::MatrixXd b_;
  Eigen::VectorXd energies_;
  std::vector<std::size_t> group_of_;
};

struct MomentSeries {
  DecayParams params;
  Site u = 0;
  EnergyWindow window;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> cesaro;
  std::vector<double> abel;
  std::vector<double> cesaro_exact;
  std::vector<double> abel_exact;
  double sup_over_grid = 0;
  double grid_step_bound = 0;  // resolving_time_step of the spectrum

  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json sidecar() const;
};

MomentSeries moment_series(const SpectralData& sd, const EnergyWindow& window, Site u,
                           const DecayParams& params, const std::vector<double>& times,
                           bool with_exact = true);

// sum_groups X_g^2 sum_x e^{sigma|x-u|^zeta} ||chi_x P_g chi_u||^2.
double liminf_cesaro(const SpectralData& sd, const EnergyWindow& window, Site u,
                     const DecayParams& params);

// sup over the grid of |psi_t(x)| for every site x (kernel with single sites).
Eigen::VectorXd sup_kernel_profile(const SpectralData& sd, const EnergyWindow& window, Site u,
                                   const std::vector<double>& times);

// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      c_ += (sum_ - t) + v;
    else
      c_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0, c_ = 0;
};

}  // namespace loclab
