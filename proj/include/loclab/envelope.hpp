// Certified envelope fits: the fitted bound is a majorant of every point,
//   value <= C * prefactor * exp(eps * a^zeta_a) * exp(-sigma * r^zeta),
// with sigma maximized at each zeta of a fixed grid and eps minimized last.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace loclab {

struct EnvelopePoint {
  double value = 0;          // nonnegative; zero values impose nothing
  double log_prefactor = 0;  // log of alpha, f(alpha), sqrt(alpha) or 0
  double r = 0;              // decay coordinate
  double a = 0;              // allowance coordinate
  std::size_t i = 0, j = 0;  // labels reported for the binding point
  std::size_t vector = 0;
};

using PointVisitor = std::function<void(const EnvelopePoint&)>;
// Streams every point to the visitor; a fit calls it twice: once to summarize
// the points per (r, a) cell and once to re-check every point.
using PointSource = std::function<void(const PointVisitor&)>;

PointSource points_from(const std::vector<EnvelopePoint>& points);

struct EnvelopeRequest {
  std::string inequality;  // name reported with the verdict
  double sigma = 0.1;      // required decay rate
  double zeta = 1.0;       // required decay exponent
  double epsilon = 0.0;    // allowance rate (upper bound for the fit)
  double c_cap = 10.0;     // largest constant accepted by the verdict
  std::optional<double> allowance_zeta;  // exponent on a; defaults to zeta
  std::vector<double> zeta_grid{0.25, 0.5, 0.75, 1.0};
};

struct ZetaFit {
  double zeta = 1;
  bool feasible = false;       // some sigma satisfies the cap
  double sigma_hat = 0;        // largest sigma with C <= c_cap (may be +inf)
  double epsilon_hat = 0;      // smallest eps in [0, eps_req] keeping the fit
  double c_hat = 0;            // smallest C at (sigma_hat, epsilon_hat)
  double r2 = 0;               // least-squares R^2 of log-values against r^zeta
  EnvelopePoint binding;       // point that fixes sigma_hat
};

struct DecayFit {
  std::string inequality;
  EnvelopeRequest request;
  std::vector<ZetaFit> per_zeta;
  double zeta_hat = 1, sigma_hat = 0, epsilon_hat = 0, c_hat = 0, r2 = 0;
  double sigma_at_required_zeta = 0;
  bool verdict = false;
  std::size_t points = 0;
  std::size_t violations = 0;  // re-check of the reported envelope
  EnvelopePoint worst;          // binding point of the reported envelope

  nlohmann::json to_json() const;
};

DecayFit fit_envelope(const PointSource& source, const EnvelopeRequest& request);

// Smallest C making the envelope hold at fixed (sigma, zeta, eps).
double required_constant(const PointSource& source, double sigma, double zeta, double epsilon,
                         std::optional<double> allowance_zeta = std::nullopt);

std::size_t count_violations(const PointSource& source, double sigma, double zeta,
                             double epsilon, double c, std::optional<double> allowance_zeta = std::nullopt);

// Largest sigma with C <= c_cap at fixed (zeta, eps); -inf when infeasible.
double max_sigma(const PointSource& source, double zeta, double epsilon, double c_cap,
                 std::optional<double> allowance_zeta = std::nullopt);

}  // namespace loclab
