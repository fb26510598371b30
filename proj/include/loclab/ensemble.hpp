// Disorder-ensemble averages of moments and kernels. Realizations run in
// parallel and are reduced in index order, so results do not depend on the
// thread count.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "loclab/dynamics.hpp"
#include "loclab/envelope.hpp"
#include "loclab/geometry.hpp"

namespace loclab {

struct WindowSpec {
  double a = 0, b = 0;
  double margin = 0.02;
};

struct EnsembleSpec {
  SpaceSpec space;
  double width = 4.0;  // Anderson disorder strength W
  int realizations = 20;
  std::uint64_t master_seed = 1;
  // Fixed interval; defaults to the full window over the Gershgorin interval,
  // which is the same for every realization.
  std::optional<WindowSpec> window;
  DecayParams params;
  std::vector<double> times = default_time_grid();
  double c_cap = 10.0;
  unsigned threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

// Seed of realization r: derive_seed(master_seed, r).
std::uint64_t realization_seed(const EnsembleSpec& spec, int r);

// out[i] = f(i) for i < count on up to `threads` workers; the first exception
// thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& f);

// FNV-1a over the bytes of the values; hex string.
std::string digest(const std::vector<double>& values);
std::string digest(const Eigen::VectorXd& values);

struct RealizationDigest {
  int index = 0;
  std::uint64_t seed = 0;
  double sup_over_grid = 0;
  double liminf = 0;
  std::string series_digest;
};

struct EnsembleMoments {
  Site u = 0;
  std::vector<double> times;
  std::vector<double> mean, stddev, stderr_;
  std::vector<double> cesaro_of_mean, abel_of_mean;
  double mean_of_sup = 0;  // E sup_t M, from per-realization grid suprema
  double sup_of_mean = 0;  // sup_t E M
  double sup_stderr = 0;
  double sup_cesaro_of_mean = 0;  // sup over the grid of the Cesaro average of the mean
  bool ordering_holds = false;    // mean_of_sup >= sup_of_mean
  std::vector<RealizationDigest> realizations;

  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json to_json() const;
};

EnsembleMoments ensemble_moments(const EnsembleSpec& spec, Site u);

struct KernelDecayAt {
  Site u = 0;
  Eigen::VectorXd mean_sup_kernel;      // E sup_t |<x|e^{-itH} X(H)|u>|
  Eigen::VectorXd mean_projector;       // E sup_g X_g |P_g(x,u)|
  DecayFit kernel_fit;                  // no allowance factor (eps = 0)
  DecayFit projector_fit;
  std::vector<double> realization_sigma;  // kernel fit per realization
  double realization_sigma_std = 0;
};

struct EnsembleKernel {
  std::vector<KernelDecayAt> sites;
  double translation_spread = 0;  // max relative gap of the kernel sigma_hat across sites
  double tolerance = 0.2;
  bool translation_holds = false;
  bool verdict = false;           // every kernel fit certifies sigma_hat > 0

  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json to_json() const;
};

EnsembleKernel ensemble_kernel_decay(const EnsembleSpec& spec, const std::vector<Site>& us,
                                     double tolerance = 0.2);

}  // namespace loclab
