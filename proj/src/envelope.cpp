#include "loclab/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "loclab/geometry.hpp"

namespace loclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSafety = 1e-12;

// r^zeta with a table for small integer r, which covers every lattice metric.
class PowTable {
 public:
  explicit PowTable(double zeta) : zeta_(zeta), table_(4096) {
    for (std::size_t r = 0; r < table_.size(); ++r)
      table_[r] = std::pow(static_cast<double>(r), zeta);
  }
  double operator()(double r) const {
    if (r >= 0 && r < static_cast<double>(table_.size()) && r == std::floor(r))
      return table_[static_cast<std::size_t>(r)];
    return std::pow(r, zeta_);
  }

 private:
  double zeta_;
  std::vector<double> table_;
};

struct Exponents {
  PowTable decay;
  PowTable allowance;
  Exponents(double zeta, std::optional<double> zeta_a)
      : decay(zeta), allowance(zeta_a.value_or(zeta)) {}
};

// Log-size of a point relative to the envelope at (sigma, eps) with C = 1.
double excess(const EnvelopePoint& p, const Exponents& e, double sigma, double eps) {
  double v = std::log(p.value) - p.log_prefactor - eps * e.allowance(p.a);
  if (p.r > 0) v += sigma * e.decay(p.r);
  return v;
}

// Points sharing (r, a): every fitting pass needs only the largest log-value
// of a cell, and R^2 only its first two moments.
struct Cell {
  double r = 0, a = 0;
  double count = 0, sum_l = 0, sum_l2 = 0;
  double max_l = -kInf;
  EnvelopePoint top;
};

std::vector<Cell> summarize(const PointSource& src) {
  std::map<std::pair<double, double>, Cell> cells;
  src([&](const EnvelopePoint& p) {
    if (!(p.value > 0)) return;
    const double l = std::log(p.value) - p.log_prefactor;
    auto& c = cells[{p.r, p.a}];
    c.r = p.r;
    c.a = p.a;
    c.count += 1;
    c.sum_l += l;
    c.sum_l2 += l * l;
    if (l > c.max_l) {
      c.max_l = l;
      c.top = p;
    }
  });
  std::vector<Cell> out;
  out.reserve(cells.size());
  for (auto& [key, c] : cells) out.push_back(c);
  return out;
}

double max_sigma_impl(const std::vector<Cell>& cells, const Exponents& e, double eps, double log_cap,
                      EnvelopePoint* binding) {
  double best = kInf;
  bool infeasible = false;
  for (const auto& c : cells) {
    const double l = c.max_l - eps * e.allowance(c.a);
    if (c.r <= 0) {
      if (l > log_cap) infeasible = true;
      continue;
    }
    const double s = (log_cap - l) / e.decay(c.r);
    if (s < best) {
      best = s;
      if (binding) *binding = c.top;
    }
  }
  return infeasible ? -kInf : best;
}

double cell_excess(const Cell& c, const Exponents& e, double sigma, double eps) {
  double v = c.max_l - eps * e.allowance(c.a);
  if (c.r > 0) v += sigma * e.decay(c.r);
  return v;
}

double min_epsilon(const std::vector<Cell>& cells, const Exponents& e, double sigma, double eps_req,
                   double log_cap) {
  double need = 0;
  for (const auto& c : cells) {
    const double aa = e.allowance(c.a);
    if (aa <= 0) continue;
    need = std::max(need, (cell_excess(c, e, sigma, 0.0) - log_cap) / aa);
  }
  return std::min(need, eps_req);
}

double log_required(const std::vector<Cell>& cells, const Exponents& e, double sigma, double eps,
                    EnvelopePoint* worst) {
  double mx = -kInf;
  for (const auto& c : cells) {
    const double v = cell_excess(c, e, sigma, eps);
    if (v > mx) {
      mx = v;
      if (worst) *worst = c.top;
    }
  }
  return mx;
}

double r_squared(const std::vector<Cell>& cells, const Exponents& e, double eps) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& c : cells) {
    const double x = e.decay(c.r);
    const double shift = eps * e.allowance(c.a);
    const double ly = c.sum_l - c.count * shift;
    n += c.count;
    sx += c.count * x;
    sy += ly;
    sxx += c.count * x * x;
    sxy += x * ly;
    syy += c.sum_l2 - 2 * shift * c.sum_l + c.count * shift * shift;
  }
  if (n < 2) return 1.0;
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  if (vy <= 1e-300) return 1.0;
  if (vx <= 1e-300) return 0.0;
  return std::clamp(cxy * cxy / (vx * vy), 0.0, 1.0);
}

ZetaFit fit_at(const std::vector<Cell>& cells, const EnvelopeRequest& req, double zeta) {
  const Exponents e(zeta, req.allowance_zeta);
  const double log_cap = std::log(req.c_cap);
  ZetaFit f;
  f.zeta = zeta;
  f.sigma_hat = max_sigma_impl(cells, e, req.epsilon, log_cap, &f.binding);
  f.feasible = f.sigma_hat > -kInf;
  if (!f.feasible) {
    f.epsilon_hat = req.epsilon;
    f.c_hat = std::exp(log_required(cells, e, 0.0, req.epsilon, &f.binding)) * (1 + kSafety);
  } else {
    f.epsilon_hat = min_epsilon(cells, e, f.sigma_hat, req.epsilon, log_cap);
    const double lr = log_required(cells, e, f.sigma_hat, f.epsilon_hat, nullptr);
    f.c_hat = lr == -kInf ? 0.0 : std::exp(lr) * (1 + kSafety);
  }
  f.r2 = r_squared(cells, e, f.epsilon_hat);
  return f;
}

}  // namespace

PointSource points_from(const std::vector<EnvelopePoint>& points) {
  return [&points](const PointVisitor& visit) {
    for (const auto& p : points) visit(p);
  };
}

DecayFit fit_envelope(const PointSource& source, const EnvelopeRequest& request) {
  if (!(request.c_cap > 0)) throw ParameterError("envelope cap must be positive");
  if (!(request.zeta > 0 && request.zeta <= 1)) throw ParameterError("zeta must lie in (0,1]");
  DecayFit fit;
  fit.inequality = request.inequality;
  fit.request = request;
  std::vector<double> grid = request.zeta_grid;
  if (std::find(grid.begin(), grid.end(), request.zeta) == grid.end()) grid.push_back(request.zeta);
  std::sort(grid.begin(), grid.end());
  const auto cells = summarize(source);
  for (double z : grid) fit.per_zeta.push_back(fit_at(cells, request, z));

  const ZetaFit* required = nullptr;
  for (const auto& f : fit.per_zeta)
    if (f.zeta == request.zeta) required = &f;
  fit.sigma_at_required_zeta = required->sigma_hat;
  fit.verdict = required->feasible && required->sigma_hat >= request.sigma;

  auto passes = [&](const ZetaFit& f) { return f.feasible && f.sigma_hat >= request.sigma; };
  const ZetaFit* best = nullptr;
  for (const auto& f : fit.per_zeta) {
    if (!passes(f)) continue;
    if (!best || f.zeta > best->zeta ||
        (f.zeta == best->zeta &&
         std::tie(f.sigma_hat, best->epsilon_hat, best->c_hat) >
             std::tie(best->sigma_hat, f.epsilon_hat, f.c_hat)))
      best = &f;
  }
  if (!best) {
    for (const auto& f : fit.per_zeta)
      if (f.feasible && (!best || f.sigma_hat > best->sigma_hat)) best = &f;
  }
  if (!best) best = required;

  fit.zeta_hat = best->zeta;
  fit.sigma_hat = best->feasible ? best->sigma_hat : 0.0;
  fit.epsilon_hat = best->epsilon_hat;
  fit.c_hat = best->c_hat;
  fit.r2 = best->r2;

  const Exponents e(fit.zeta_hat, request.allowance_zeta);
  const double sig = std::isfinite(fit.sigma_hat) ? fit.sigma_hat : 0.0;
  std::size_t count = 0, bad = 0;
  const double log_c = std::log(fit.c_hat);
  double worst = -kInf;
  source([&](const EnvelopePoint& p) {
    ++count;
    if (!(p.value > 0) || (p.r > 0 && std::isinf(fit.sigma_hat))) return;
    const double v = excess(p, e, sig, fit.epsilon_hat);
    if (v > log_c) ++bad;
    if (v > worst) {
      worst = v;
      fit.worst = p;
    }
  });
  fit.points = count;
  fit.violations = bad;
  return fit;
}

double required_constant(const PointSource& source, double sigma, double zeta, double epsilon,
                         std::optional<double> allowance_zeta) {
  const Exponents e(zeta, allowance_zeta);
  const double lr = log_required(summarize(source), e, sigma, epsilon, nullptr);
  return lr == -kInf ? 0.0 : std::exp(lr);
}

std::size_t count_violations(const PointSource& source, double sigma, double zeta,
                             double epsilon, double c, std::optional<double> allowance_zeta) {
  const Exponents e(zeta, allowance_zeta);
  const double log_c = std::log(c);
  std::size_t bad = 0;
  source([&](const EnvelopePoint& p) {
    if (!(p.value > 0)) return;
    if (excess(p, e, sigma, epsilon) > log_c) ++bad;
  });
  return bad;
}

double max_sigma(const PointSource& source, double zeta, double epsilon, double c_cap,
                 std::optional<double> allowance_zeta) {
  const Exponents e(zeta, allowance_zeta);
  return max_sigma_impl(summarize(source), e, epsilon, std::log(c_cap), nullptr);
}

namespace {

nlohmann::json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json point_json(const EnvelopePoint& p) {
  return {{"value", num(p.value)}, {"r", p.r}, {"a", p.a}, {"i", p.i}, {"j", p.j}, {"vector", p.vector}};
}

}  // namespace

nlohmann::json DecayFit::to_json() const {
  nlohmann::json zs = nlohmann::json::array();
  for (const auto& f : per_zeta)
    zs.push_back({{"zeta", f.zeta},
                  {"feasible", f.feasible},
                  {"sigma_hat", num(f.sigma_hat)},
                  {"epsilon_hat", num(f.epsilon_hat)},
                  {"C_hat", num(f.c_hat)},
                  {"r2", num(f.r2)}});
  nlohmann::json req{{"sigma", request.sigma},
                     {"zeta", request.zeta},
                     {"epsilon", request.epsilon},
                     {"C_cap", request.c_cap}};
  if (request.allowance_zeta) req["allowance_zeta"] = *request.allowance_zeta;
  return {{"inequality", inequality},
          {"requested", req},
          {"zeta_hat", zeta_hat},
          {"sigma_hat", num(sigma_hat)},
          {"epsilon_hat", num(epsilon_hat)},
          {"C_hat", num(c_hat)},
          {"r2", num(r2)},
          {"sigma_at_required_zeta", num(sigma_at_required_zeta)},
          {"verdict", verdict ? "pass" : "fail"},
          {"points", points},
          {"violations", violations},
          {"worst_point", point_json(worst)},
          {"per_zeta", zs}};
}

}  // namespace loclab
