#include "loclab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "loclab/report.hpp"

namespace loclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMaxLogDouble = 709.78;
constexpr std::size_t kTimeChunk = 256;

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

double bump_integral(double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(bump, lo, hi, 15, 1e-15);
}

double log_sum_exp(const std::vector<double>& terms) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : terms) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  CompensatedSum s;
  for (double v : terms) s.add(std::exp(v - mx));
  return mx + std::log(s.value());
}

}  // namespace

void DecayParams::validate() const {
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw ParameterError("sigma must be >= 0");
  if (!(zeta > 0 && zeta <= 1)) throw ParameterError("zeta must lie in (0,1]");
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw ParameterError("epsilon must be >= 0");
  if (zeta_prime && !(*zeta_prime > zeta && *zeta_prime <= 1))
    throw ParameterError("zeta' must lie in (zeta,1]");
  if (gamma && !(*gamma > 0 && *gamma < 1)) throw ParameterError("gamma must lie in (0,1)");
}

nlohmann::json DecayParams::to_json() const {
  nlohmann::json j{{"sigma", sigma}, {"zeta", zeta}, {"epsilon", epsilon}};
  if (zeta_prime) j["zeta_prime"] = *zeta_prime;
  if (gamma) j["gamma"] = *gamma;
  return j;
}

double smooth_ramp(double s) {
  if (s <= 0) return 0.0;
  if (s >= 1) return 1.0;
  static const double total = bump_integral(-1.0, 1.0);
  if (s > 0.5) return 1.0 - smooth_ramp(1.0 - s);
  return bump_integral(-1.0, 2.0 * s - 1.0) / total;
}

EnergyWindow::EnergyWindow(double a, double b, double margin) : a_(a), b_(b), margin_(margin) {
  if (!(a < b)) throw ParameterError("energy window needs a < b");
  if (!(margin > 0 && margin < 1)) throw ParameterError("window margin must lie in (0,1)");
}

double EnergyWindow::operator()(double e) const {
  if (e <= a_ || e >= b_) return 0.0;
  const double w = margin_ * (b_ - a_) / 2.0;
  if (e < a_ + w) return smooth_ramp((e - a_) / w);
  if (e > b_ - w) return smooth_ramp((b_ - e) / w);
  return 1.0;
}

nlohmann::json EnergyWindow::to_json() const {
  return {{"a", a_}, {"b", b_}, {"margin", margin_}, {"degenerate", degenerate}, {"label", label}};
}

EnergyWindow make_window(const SpectralData& sd, double a, double b, double margin) {
  EnergyWindow w(a, b, margin);
  w.label = "interval";
  w.sampled.resize(sd.dimension());
  bool any = false;
  for (std::size_t k = 0; k < sd.dimension(); ++k) {
    w.sampled[k] = w(sd.eigenvalues[static_cast<Eigen::Index>(k)]);
    any = any || w.sampled[k] > 0;
  }
  for (const auto& g : sd.groups) w.group_values.push_back(w(g.energy));
  w.degenerate = !any;
  return w;
}

EnergyWindow full_window(const SpectralData& sd, double lo, double hi) {
  const double pad = 0.05 * (hi - lo) + 0.05;
  auto w = make_window(sd, lo - pad, hi + pad, 0.02);
  w.label = "full";
  return w;
}

EnergyWindow full_window(const SpectralData& sd) {
  const auto n = sd.eigenvalues.size();
  return full_window(sd, n ? sd.eigenvalues[0] : 0.0, n ? sd.eigenvalues[n - 1] : 0.0);
}

Propagator::Propagator(const SpectralData& sd, const EnergyWindow& window, Site u) : sd_(&sd) {
  sd.space->require_site(u);
  const auto n = static_cast<Eigen::Index>(sd.dimension());
  coeff_.resize(n);
  for (Eigen::Index k = 0; k < n; ++k)
    coeff_[k] = window.sampled[static_cast<std::size_t>(k)] *
                sd.eigenvectors(static_cast<Eigen::Index>(u), k);
}

Eigen::MatrixXcd Propagator::evolve(const std::vector<double>& times) const {
  const auto n = static_cast<Eigen::Index>(sd_->dimension());
  const auto m = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd c(n, m), s(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const double ph = times[static_cast<std::size_t>(j)] * sd_->eigenvalues[k];
      c(k, j) = coeff_[k] * std::cos(ph);
      s(k, j) = -coeff_[k] * std::sin(ph);
    }
  Eigen::MatrixXcd out(n, m);
  out.real() = sd_->eigenvectors * c;
  out.imag() = sd_->eigenvectors * s;
  return out;
}

double evolved_kernel(const SpectralData& sd, const EnergyWindow& window, const SiteSet& x,
                      const SiteSet& u, double t) {
  if (x.empty() || u.empty()) return 0.0;
  const auto n = static_cast<Eigen::Index>(sd.dimension());
  Eigen::VectorXcd phase(n);
  for (Eigen::Index k = 0; k < n; ++k)
    phase[k] = window.sampled[static_cast<std::size_t>(k)] *
               std::exp(std::complex<double>(0.0, -t * sd.eigenvalues[k]));
  auto rows = [&](const SiteSet& s) {
    Eigen::MatrixXd r(static_cast<Eigen::Index>(s.size()), n);
    for (std::size_t a = 0; a < s.size(); ++a)
      r.row(static_cast<Eigen::Index>(a)) = sd.eigenvectors.row(static_cast<Eigen::Index>(s[a]));
    return r;
  };
  const Eigen::MatrixXd vx = rows(x), vu = rows(u);
  const Eigen::MatrixXcd block = vx.cast<std::complex<double>>() * phase.asDiagonal() *
                                 vu.transpose().cast<std::complex<double>>();
  return block.norm();
}

Eigen::VectorXd log_moment_weights(const SiteSpace& space, Site u, const DecayParams& params) {
  Eigen::VectorXd lw(static_cast<Eigen::Index>(space.size()));
  for (Site x = 0; x < space.size(); ++x)
    lw[static_cast<Eigen::Index>(x)] =
        params.sigma * std::pow(static_cast<double>(space.distance(x, u)), params.zeta);
  return lw;
}

namespace {

double log_moment_of(const Eigen::VectorXcd& psi, const Eigen::VectorXd& lw) {
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(psi.size()));
  for (Eigen::Index x = 0; x < psi.size(); ++x) {
    const double p = std::norm(psi[x]);
    if (p > 0) terms.push_back(lw[x] + std::log(p));
  }
  return log_sum_exp(terms);
}

double checked_exp(double lm, const char* what) {
  if (lm > kMaxLogDouble)
    throw std::overflow_error(std::string(what) + " overflows double (log value " +
                              std::to_string(lm) + "); use the log form");
  return std::exp(lm);
}

}  // namespace

double log_moment(const SpectralData& sd, const EnergyWindow& window, Site u,
                  const DecayParams& params, double t) {
  params.validate();
  const Propagator prop(sd, window, u);
  const auto lw = log_moment_weights(*sd.space, u, params);
  return log_moment_of(prop.evolve({t}).col(0), lw);
}

double moment(const SpectralData& sd, const EnergyWindow& window, Site u,
              const DecayParams& params, double t) {
  return checked_exp(log_moment(sd, window, u, params, t), "moment");
}

std::vector<double> log_time_grid(double t_min, double t_max, std::size_t count) {
  if (!(t_min > 0 && t_max > t_min) || count < 2)
    throw ParameterError("log time grid needs 0 < t_min < t_max and count >= 2");
  std::vector<double> t{0.0};
  const double l0 = std::log10(t_min), l1 = std::log10(t_max);
  for (std::size_t i = 0; i < count; ++i)
    t.push_back(std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(count - 1)));
  return t;
}

std::vector<double> default_time_grid() { return log_time_grid(0.1, 1e4, 200); }

std::vector<double> uniform_time_grid(double t_max, double step) {
  if (!(t_max > 0 && step > 0)) throw ParameterError("uniform grid needs t_max > 0 and step > 0");
  const auto n = static_cast<std::size_t>(std::ceil(t_max / step - 1e-9));
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = t_max * static_cast<double>(i) / static_cast<double>(n);
  return t;
}

double resolving_time_step(const SpectralData& sd) {
  const double w = sd.width();
  return w > 0 ? M_PI / (2.0 * w) : std::numeric_limits<double>::infinity();
}

std::vector<double> cesaro_average(const std::vector<double>& times,
                                   const std::vector<double>& values) {
  if (times.size() != values.size()) throw ParameterError("times/values length mismatch");
  std::vector<double> out(times.size(), kNaN);
  if (times.empty()) return out;
  if (times[0] != 0.0) throw ParameterError("time averages need a grid starting at t = 0");
  CompensatedSum integral;
  for (std::size_t i = 1; i < times.size(); ++i) {
    integral.add(0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]));
    out[i] = integral.value() / times[i];
  }
  return out;
}

std::vector<double> abel_average(const std::vector<double>& times,
                                 const std::vector<double>& values) {
  if (times.size() != values.size()) throw ParameterError("times/values length mismatch");
  std::vector<double> out(times.size(), kNaN);
  if (times.empty()) return out;
  if (times[0] != 0.0) throw ParameterError("time averages need a grid starting at t = 0");
  const double t_max = times.back();
  // Exact integral of e^{-t/T} against the piecewise-linear interpolant.
  auto piece = [](double T, double t0, double h, double f0, double f1) {
    const double g0 = std::exp(-t0 / T);
    const double q = h / T;
    const double e1 = -std::expm1(-q);
    const double first = f0 * T * g0 * e1;
    const double second = (f1 - f0) / h * T * T * g0 * (e1 - q + q * e1);
    return first + second;
  };
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double T = times[i];
    const double horizon = kAbelHorizon * T;
    if (horizon > t_max * (1 + 1e-12)) continue;
    CompensatedSum s;
    for (std::size_t j = 1; j < times.size(); ++j) {
      const double t0 = times[j - 1];
      if (t0 >= horizon) break;
      double t1 = times[j], f1 = values[j];
      if (t1 > horizon) {
        f1 = values[j - 1] + (values[j] - values[j - 1]) * (horizon - t0) / (t1 - t0);
        t1 = horizon;
      }
      if (t1 > t0) s.add(piece(T, t0, t1 - t0, values[j - 1], f1));
    }
    out[i] = s.value() / T;
  }
  return out;
}

ExactMomentAverages::ExactMomentAverages(const SpectralData& sd, const EnergyWindow& window,
                                         Site u, const DecayParams& params) {
  params.validate();
  const Propagator prop(sd, window, u);
  const auto lw = log_moment_weights(*sd.space, u, params);
  if (lw.maxCoeff() > kMaxLogDouble)
    throw std::overflow_error("moment weights overflow; exact averages need sigma*diam^zeta < 709");
  const Eigen::VectorXd w = lw.array().exp();
  const auto& c = prop.coefficients();
  b_ = c.asDiagonal() * (sd.eigenvectors.transpose() * w.asDiagonal() * sd.eigenvectors) *
       c.asDiagonal();
  energies_ = sd.eigenvalues;
  group_of_ = sd.group_of;
}

double ExactMomentAverages::at(double t) const {
  CompensatedSum s;
  for (Eigen::Index k = 0; k < b_.rows(); ++k)
    for (Eigen::Index l = 0; l < b_.cols(); ++l)
      s.add(b_(k, l) * std::cos((energies_[k] - energies_[l]) * t));
  return s.value();
}

double ExactMomentAverages::cesaro(double T) const {
  CompensatedSum s;
  for (Eigen::Index k = 0; k < b_.rows(); ++k)
    for (Eigen::Index l = 0; l < b_.cols(); ++l) {
      const double x = (energies_[k] - energies_[l]) * T;
      s.add(b_(k, l) * (x == 0.0 ? 1.0 : std::sin(x) / x));
    }
  return s.value();
}

double ExactMomentAverages::abel(double T) const {
  CompensatedSum s;
  for (Eigen::Index k = 0; k < b_.rows(); ++k)
    for (Eigen::Index l = 0; l < b_.cols(); ++l) {
      const double x = (energies_[k] - energies_[l]) * T;
      s.add(b_(k, l) / (1.0 + x * x));
    }
  return s.value();
}

double ExactMomentAverages::limit() const {
  CompensatedSum s;
  for (Eigen::Index k = 0; k < b_.rows(); ++k)
    for (Eigen::Index l = 0; l < b_.cols(); ++l)
      if (group_of_[static_cast<std::size_t>(k)] == group_of_[static_cast<std::size_t>(l)])
        s.add(b_(k, l));
  return s.value();
}

MomentSeries moment_series(const SpectralData& sd, const EnergyWindow& window, Site u,
                           const DecayParams& params, const std::vector<double>& times,
                           bool with_exact) {
  params.validate();
  MomentSeries ms;
  ms.params = params;
  ms.u = u;
  ms.window = window;
  ms.times = times;
  ms.grid_step_bound = resolving_time_step(sd);
  const Propagator prop(sd, window, u);
  const auto lw = log_moment_weights(*sd.space, u, params);
  ms.values.reserve(times.size());
  for (std::size_t start = 0; start < times.size(); start += kTimeChunk) {
    const std::vector<double> chunk(times.begin() + static_cast<std::ptrdiff_t>(start),
                                    times.begin() + static_cast<std::ptrdiff_t>(std::min(times.size(), start + kTimeChunk)));
    const auto psi = prop.evolve(chunk);
    for (Eigen::Index j = 0; j < psi.cols(); ++j)
      ms.values.push_back(checked_exp(log_moment_of(psi.col(j), lw), "moment"));
  }
  for (double v : ms.values) ms.sup_over_grid = std::max(ms.sup_over_grid, v);
  ms.cesaro = cesaro_average(times, ms.values);
  ms.abel = abel_average(times, ms.values);
  if (with_exact) {
    const ExactMomentAverages ex(sd, window, u, params);
    for (double T : times) {
      ms.cesaro_exact.push_back(T > 0 ? ex.cesaro(T) : kNaN);
      ms.abel_exact.push_back(T > 0 ? ex.abel(T) : kNaN);
    }
  }
  return ms;
}

void MomentSeries::write_csv(const std::filesystem::path& path) const {
  const bool exact = !cesaro_exact.empty();
  std::vector<std::string> header{"t", "M", "cesaro_T", "abel_T"};
  if (exact) header.insert(header.end(), {"cesaro_exact_T", "abel_exact_T"});
  CsvTable t(header);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i], values[i], cesaro[i], abel[i]};
    if (exact) row.insert(row.end(), {cesaro_exact[i], abel_exact[i]});
    t.add_row(row);
  }
  t.write(path);
}

nlohmann::json MomentSeries::sidecar() const {
  return {{"params", params.to_json()},
          {"u", u},
          {"window", window.to_json()},
          {"points", times.size()},
          {"t_max", times.empty() ? 0.0 : times.back()},
          {"sup_over_grid", sup_over_grid},
          {"grid_step_bound", grid_step_bound},
          {"abel_horizon", kAbelHorizon},
          {"averaging", "trapezoid on the grid; exact columns from the spectral expansion"}};
}

double liminf_cesaro(const SpectralData& sd, const EnergyWindow& window, Site u,
                     const DecayParams& params) {
  params.validate();
  sd.space->require_site(u);
  const auto lw = log_moment_weights(*sd.space, u, params);
  std::vector<double> terms;
  for (std::size_t g = 0; g < sd.groups.size(); ++g) {
    const double chi = window.group_values[g];
    if (chi <= 0) continue;
    const Eigen::MatrixXd phi = sd.group_vectors(g);
    const Eigen::VectorXd col = phi * phi.row(static_cast<Eigen::Index>(u)).transpose();
    for (Eigen::Index x = 0; x < col.size(); ++x) {
      const double p = chi * col[x];
      if (p != 0) terms.push_back(lw[x] + 2.0 * std::log(std::abs(p)));
    }
  }
  return checked_exp(log_sum_exp(terms), "liminf Cesaro limit");
}

Eigen::VectorXd sup_kernel_profile(const SpectralData& sd, const EnergyWindow& window, Site u,
                                   const std::vector<double>& times) {
  const Propagator prop(sd, window, u);
  Eigen::VectorXd best = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sd.dimension()));
  for (std::size_t start = 0; start < times.size(); start += kTimeChunk) {
    const std::vector<double> chunk(times.begin() + static_cast<std::ptrdiff_t>(start),
                                    times.begin() + static_cast<std::ptrdiff_t>(std::min(times.size(), start + kTimeChunk)));
    const Eigen::MatrixXd mag = prop.evolve(chunk).cwiseAbs();
    best = best.cwiseMax(mag.rowwise().maxCoeff());
  }
  return best;
}

}  // namespace loclab
