#include "loclab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "loclab/operators.hpp"
#include "loclab/report.hpp"

namespace loclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Realization {
  SpectralData sd;
  EnergyWindow window;
};

Realization realize(const EnsembleSpec& spec, const SpacePtr& space, int r) {
  const auto h = build_anderson(space, spec.width, realization_seed(spec, r));
  Realization out{diagonalize(h), {}};
  if (spec.window) {
    out.window = make_window(out.sd, spec.window->a, spec.window->b, spec.window->margin);
  } else {
    // Gershgorin bound shared by every realization: V in [-W/2, W/2].
    std::size_t max_degree = 0;
    for (Site x = 0; x < space->size(); ++x) max_degree = std::max(max_degree, space->degree(x));
    const double reach = 2.0 * static_cast<double>(max_degree);
    out.window = full_window(out.sd, -0.5 * spec.width, reach + 0.5 * spec.width);
  }
  return out;
}

// sup_g X_g |P_g(x,u)| for every x.
Eigen::VectorXd projector_profile(const SpectralData& sd, const EnergyWindow& window, Site u) {
  Eigen::VectorXd best = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sd.dimension()));
  for (std::size_t g = 0; g < sd.groups.size(); ++g) {
    const double xg = window.group_values[g];
    if (!(xg > 0)) continue;
    const Eigen::MatrixXd phi = sd.group_vectors(g);
    const Eigen::VectorXd col = phi * phi.row(static_cast<Eigen::Index>(u)).transpose();
    best = best.cwiseMax(xg * col.cwiseAbs());
  }
  return best;
}

std::vector<EnvelopePoint> decay_points(const SiteSpace& space, const Eigen::VectorXd& v, Site u) {
  std::vector<EnvelopePoint> pts;
  pts.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index x = 0; x < v.size(); ++x) {
    EnvelopePoint p;
    p.value = v[x];
    p.r = space.distance(static_cast<Site>(x), u);
    p.i = static_cast<Site>(x);
    p.j = u;
    pts.push_back(p);
  }
  return pts;
}

EnvelopeRequest uniform_request(const std::string& name, const EnsembleSpec& spec) {
  EnvelopeRequest r;
  r.inequality = name;
  r.sigma = spec.params.sigma;
  r.zeta = spec.params.zeta;
  r.epsilon = 0.0;
  r.c_cap = spec.c_cap;
  return r;
}

template <class Get>
double ordered_mean(std::size_t count, Get get) {
  CompensatedSum s;
  for (std::size_t i = 0; i < count; ++i) s.add(get(i));
  return s.value() / static_cast<double>(count);
}

}  // namespace

void EnsembleSpec::validate() const {
  if (realizations < 1) throw ParameterError("ensemble needs at least one realization");
  if (realizations > 1000) throw ParameterError("ensemble realization count is limited to 1000");
  if (!(width >= 0) || !std::isfinite(width)) throw ParameterError("disorder width must be >= 0");
  if (!(c_cap > 0)) throw ParameterError("envelope cap must be positive");
  if (times.empty() || times.front() != 0.0) throw ParameterError("time grid must start at t = 0");
  if (!std::is_sorted(times.begin(), times.end())) throw ParameterError("time grid must be sorted");
  if (window && !(window->b > window->a)) throw ParameterError("window needs a < b");
  params.validate();
}

nlohmann::json EnsembleSpec::to_json() const {
  nlohmann::json j{{"space", {{"kind", to_string(space.kind)}, {"dim", space.dim}, {"side", space.side}}},
                   {"W", width},
                   {"distribution", "uniform[-W/2,W/2]"},
                   {"prng", "splitmix64"},
                   {"realizations", realizations},
                   {"master_seed", master_seed},
                   {"params", params.to_json()},
                   {"time_points", times.size()},
                   {"t_max", times.back()},
                   {"C_cap", c_cap}};
  if (window)
    j["window"] = {{"a", window->a}, {"b", window->b}, {"margin", window->margin}};
  else
    j["window"] = "full (Gershgorin interval)";
  return j;
}

std::uint64_t realization_seed(const EnsembleSpec& spec, int r) {
  return derive_seed(spec.master_seed, static_cast<std::uint64_t>(r));
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& f) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(m);
            if (next >= count) return;
            i = next++;
          }
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string digest(const std::vector<double>& values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    unsigned char b[sizeof(double)];
    std::memcpy(b, &v, sizeof v);
    for (auto c : b) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest(const Eigen::VectorXd& values) {
  return digest(std::vector<double>(values.data(), values.data() + values.size()));
}

EnsembleMoments ensemble_moments(const EnsembleSpec& spec, Site u) {
  spec.validate();
  const auto space = std::make_shared<const SiteSpace>(build_site_space(spec.space));
  space->require_site(u);
  const auto R = static_cast<std::size_t>(spec.realizations);
  std::vector<MomentSeries> series(R);
  std::vector<double> liminf(R);
  parallel_for(R, spec.threads, [&](std::size_t r) {
    const auto real = realize(spec, space, static_cast<int>(r));
    series[r] = moment_series(real.sd, real.window, u, spec.params, spec.times, false);
    liminf[r] = liminf_cesaro(real.sd, real.window, u, spec.params);
  });

  EnsembleMoments out;
  out.u = u;
  out.times = spec.times;
  const std::size_t m = spec.times.size();
  out.mean.resize(m);
  out.stddev.resize(m);
  out.stderr_.resize(m);
  for (std::size_t t = 0; t < m; ++t) {
    const double mu = ordered_mean(R, [&](std::size_t r) { return series[r].values[t]; });
    double var = 0;
    if (R > 1) {
      CompensatedSum s;
      for (std::size_t r = 0; r < R; ++r) s.add((series[r].values[t] - mu) * (series[r].values[t] - mu));
      var = s.value() / static_cast<double>(R - 1);
    }
    out.mean[t] = mu;
    out.stddev[t] = std::sqrt(var);
    out.stderr_[t] = std::sqrt(var / static_cast<double>(R));
  }
  out.cesaro_of_mean = cesaro_average(out.times, out.mean);
  out.abel_of_mean = abel_average(out.times, out.mean);
  out.mean_of_sup = ordered_mean(R, [&](std::size_t r) { return series[r].sup_over_grid; });
  if (R > 1) {
    CompensatedSum s;
    for (std::size_t r = 0; r < R; ++r)
      s.add((series[r].sup_over_grid - out.mean_of_sup) * (series[r].sup_over_grid - out.mean_of_sup));
    out.sup_stderr = std::sqrt(s.value() / static_cast<double>(R - 1) / static_cast<double>(R));
  }
  out.sup_of_mean = *std::max_element(out.mean.begin(), out.mean.end());
  out.sup_cesaro_of_mean = 0;
  for (double c : out.cesaro_of_mean)
    if (std::isfinite(c)) out.sup_cesaro_of_mean = std::max(out.sup_cesaro_of_mean, c);
  out.ordering_holds = out.mean_of_sup >= out.sup_of_mean;
  for (std::size_t r = 0; r < R; ++r)
    out.realizations.push_back({static_cast<int>(r), realization_seed(spec, static_cast<int>(r)),
                                series[r].sup_over_grid, liminf[r], digest(series[r].values)});
  return out;
}

void EnsembleMoments::write_csv(const std::filesystem::path& path) const {
  CsvTable t({"t", "mean_M", "std_M", "stderr_M", "cesaro_mean", "abel_mean"});
  for (std::size_t i = 0; i < times.size(); ++i)
    t.add_row(std::vector<double>{times[i], mean[i], stddev[i], stderr_[i], cesaro_of_mean[i], abel_of_mean[i]});
  t.write(path);
}

nlohmann::json EnsembleMoments::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : realizations)
    rs.push_back({{"index", r.index},
                  {"seed", r.seed},
                  {"sup_over_grid", json_number(r.sup_over_grid)},
                  {"liminf_cesaro", json_number(r.liminf)},
                  {"series_digest", r.series_digest}});
  return {{"u", u},
          {"mean_of_sup", json_number(mean_of_sup)},
          {"mean_of_sup_stderr", json_number(sup_stderr)},
          {"sup_of_mean", json_number(sup_of_mean)},
          {"sup_cesaro_of_mean", json_number(sup_cesaro_of_mean)},
          {"mean_of_sup_ge_sup_of_mean", ordering_holds},
          {"mean_digest", digest(mean)},
          {"realizations", rs}};
}

EnsembleKernel ensemble_kernel_decay(const EnsembleSpec& spec, const std::vector<Site>& us,
                                     double tolerance) {
  spec.validate();
  if (us.empty()) throw ParameterError("kernel decay needs at least one base site");
  const auto space = std::make_shared<const SiteSpace>(build_site_space(spec.space));
  for (auto u : us) space->require_site(u);
  const auto R = static_cast<std::size_t>(spec.realizations);
  const auto n = static_cast<Eigen::Index>(space->size());
  // kernels[r][k], projectors[r][k] for base site us[k].
  std::vector<std::vector<Eigen::VectorXd>> kernels(R), projectors(R);
  parallel_for(R, spec.threads, [&](std::size_t r) {
    const auto real = realize(spec, space, static_cast<int>(r));
    for (auto u : us) {
      kernels[r].push_back(sup_kernel_profile(real.sd, real.window, u, spec.times));
      projectors[r].push_back(projector_profile(real.sd, real.window, u));
    }
  });

  EnsembleKernel out;
  out.tolerance = tolerance;
  out.verdict = true;
  for (std::size_t k = 0; k < us.size(); ++k) {
    KernelDecayAt at;
    at.u = us[k];
    at.mean_sup_kernel.resize(n);
    at.mean_projector.resize(n);
    for (Eigen::Index x = 0; x < n; ++x) {
      at.mean_sup_kernel[x] = ordered_mean(R, [&](std::size_t r) { return kernels[r][k][x]; });
      at.mean_projector[x] = ordered_mean(R, [&](std::size_t r) { return projectors[r][k][x]; });
    }
    const auto kp = decay_points(*space, at.mean_sup_kernel, at.u);
    const auto pp = decay_points(*space, at.mean_projector, at.u);
    at.kernel_fit = fit_envelope(points_from(kp), uniform_request("E-SUDL", spec));
    at.projector_fit = fit_envelope(points_from(pp), uniform_request("E-SULP", spec));
    double mu = 0;
    for (std::size_t r = 0; r < R; ++r) {
      const auto pts = decay_points(*space, kernels[r][k], at.u);
      at.realization_sigma.push_back(max_sigma(points_from(pts), spec.params.zeta, 0.0, spec.c_cap));
      mu += at.realization_sigma.back();
    }
    mu /= static_cast<double>(R);
    double var = 0;
    for (double s : at.realization_sigma) var += (s - mu) * (s - mu);
    at.realization_sigma_std = R > 1 ? std::sqrt(var / static_cast<double>(R - 1)) : 0.0;
    const double s = at.kernel_fit.sigma_at_required_zeta;
    out.verdict = out.verdict && s > 0 && std::isfinite(s);
    out.sites.push_back(std::move(at));
  }
  const double ref = out.sites.front().kernel_fit.sigma_at_required_zeta;
  for (const auto& at : out.sites) {
    const double s = at.kernel_fit.sigma_at_required_zeta;
    const double gap = ref > 0 && std::isfinite(ref) ? std::abs(s - ref) / ref : kInf;
    out.translation_spread = std::max(out.translation_spread, gap);
  }
  out.translation_holds = out.translation_spread <= tolerance;
  out.verdict = out.verdict && out.translation_holds;
  return out;
}

void EnsembleKernel::write_csv(const std::filesystem::path& path) const {
  CsvTable t({"u", "x", "mean_sup_kernel", "mean_projector"});
  for (const auto& at : sites)
    for (Eigen::Index x = 0; x < at.mean_sup_kernel.size(); ++x)
      t.add_row(std::vector<double>{static_cast<double>(at.u), static_cast<double>(x),
                                    at.mean_sup_kernel[x], at.mean_projector[x]});
  t.write(path);
}

nlohmann::json EnsembleKernel::to_json() const {
  nlohmann::json ss = nlohmann::json::array();
  for (const auto& at : sites) {
    nlohmann::json sig = nlohmann::json::array();
    for (double s : at.realization_sigma) sig.push_back(json_number(s));
    ss.push_back({{"u", at.u},
                  {"kernel_fit", at.kernel_fit.to_json()},
                  {"projector_fit", at.projector_fit.to_json()},
                  {"realization_sigma", sig},
                  {"realization_sigma_std", json_number(at.realization_sigma_std)},
                  {"kernel_digest", digest(at.mean_sup_kernel)}});
  }
  return {{"sites", ss},
          {"translation_spread", json_number(translation_spread)},
          {"translation_tolerance", tolerance},
          {"translation_holds", translation_holds},
          {"verdict", verdict ? "pass" : "fail"}};
}

}  // namespace loclab
