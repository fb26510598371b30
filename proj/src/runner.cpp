#include "loclab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "loclab/diagnostics.hpp"
#include "loclab/ensemble.hpp"
#include "loclab/operators.hpp"
#include "loclab/report.hpp"

namespace loclab {

ConfigError::ConfigError(const std::string& message, std::string key, int line)
    : std::runtime_error(message), key_(std::move(key)), line_(line) {}

namespace {

constexpr const char* kReportSchema = "loclab-report/1";
constexpr const char* kVersion = "0.1.0";

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

// Strict object reader: every key must be consumed, types are checked.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path, const std::string& text)
      : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  const nlohmann::json& at(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  double number(const std::string& k, double def) {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_number()) fail(k, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& k) {
    require(k);
    return number(k, 0.0);
  }
  std::optional<double> optional_number(const std::string& k) {
    if (!has(k)) return std::nullopt;
    return number(k, 0.0);
  }
  long long integer(const std::string& k, long long def) {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_number_integer()) fail(k, "expected an integer");
    return v.get<long long>();
  }
  std::uint64_t unsigned_integer(const std::string& k, std::uint64_t def) {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(k, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::string string(const std::string& k, const std::string& def) {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_string()) fail(k, "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& k, std::vector<double> def) {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_array()) fail(k, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(k, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<long long> integers(const std::string& k, std::vector<long long> def) {
    if (!has(k)) return def;
    const auto& v = at(k);
    if (!v.is_array()) fail(k, "expected an array of integers");
    std::vector<long long> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) fail(k, "expected an array of integers");
      out.push_back(e.get<long long>());
    }
    return out;
  }
  Reader child(const std::string& k) {
    const auto& v = at(k);
    if (!v.is_object()) fail(k, "expected an object");
    return Reader(v, full(k), text_);
  }
  void require(const std::string& k) const {
    if (!has(k)) fail(k, "missing required key");
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) fail(k, "unknown key");
  }
  [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
    const auto key = full(k);
    throw ConfigError(msg, key, line_of_key(text_, k));
  }
  std::string full(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const std::string& text() const { return text_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> used_;
};

struct SiteRef {
  enum class Kind { Auto, Origin, Root, Coords, Index } kind = Kind::Auto;
  Coord coords{0, 0, 0};
  Site index = 0;
};

SiteRef parse_site(const nlohmann::json& v, const std::string& key, const Reader& r) {
  SiteRef s;
  if (v.is_string()) {
    const auto str = v.get<std::string>();
    if (str == "origin") s.kind = SiteRef::Kind::Origin;
    else if (str == "root") s.kind = SiteRef::Kind::Root;
    else r.fail(key, "site must be \"origin\", \"root\", a coordinate array or {\"index\": n}");
  } else if (v.is_array()) {
    if (v.empty() || v.size() > 3) r.fail(key, "coordinate array needs 1 to 3 entries");
    s.kind = SiteRef::Kind::Coords;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) r.fail(key, "coordinates must be integers");
      s.coords[i] = v[i].get<int>();
    }
  } else if (v.is_object()) {
    if (v.size() != 1 || !v.contains("index") || !v["index"].is_number_unsigned())
      r.fail(key, "site object must be {\"index\": n}");
    s.kind = SiteRef::Kind::Index;
    s.index = v["index"].get<Site>();
  } else {
    r.fail(key, "invalid site");
  }
  return s;
}

Site resolve_site(const SiteRef& s, const SiteSpace& space) {
  switch (s.kind) {
    case SiteRef::Kind::Auto:
      if (auto o = space.origin()) return *o;
      return space.root();
    case SiteRef::Kind::Origin:
      if (auto o = space.origin()) return *o;
      throw ParameterError("space has no origin site");
    case SiteRef::Kind::Root:
      return space.root();
    case SiteRef::Kind::Coords:
      if (auto f = space.find(s.coords)) return *f;
      throw ParameterError("coordinate is not a site of the space");
    case SiteRef::Kind::Index:
      space.require_site(s.index);
      return s.index;
  }
  return 0;
}

struct ModelBlock {
  bool present = false;
  std::string space = "lattice";  // lattice | graph | binary_tree | layered_tree
  int dim = 1;
  int side = 0;
  std::string edges;
  Site root = 0;
  int depth = 0;
  std::vector<std::size_t> levels;
  std::string hamiltonian = "laplacian";  // laplacian | anderson | cluster
  double W = 0;
  std::uint64_t seed = 1;
  int copies = 2;
  int separation = 10;
  int base_side = 4;
};

struct WindowBlock {
  std::string kind = "full";  // full | gershgorin | interval
  double a = 0, b = 0, margin = 0.02;
};

struct ParamsBlock {
  DecayParams p;
  double kappa = 1.0;
  double alpha = 0.5;
  double delta = 0.1;
  double c_cap = 10.0;
  std::vector<double> zeta_grid{0.25, 0.5, 0.75, 1.0};
};

struct TimeBlock {
  std::string grid = "log";
  double t_min = 0.1, t_max = 1e4;
  long long points = 200;
  std::optional<double> step;  // uniform grid; default resolves the spectrum
};

struct EnsembleBlock {
  bool present = false;
  int realizations = 20;
  std::vector<SiteRef> sites;
  double tolerance = 0.2;
};

struct Blocks {
  ModelBlock model;
  WindowBlock window;
  ParamsBlock params;
  TimeBlock time;
  SiteRef u;
  EnsembleBlock ensemble;
  LandauRun landau;
  ClusterSpec cluster;
  int cluster_base_side = 4;
  std::filesystem::path base_dir;
};

const std::set<std::string>& model_checks() {
  static const std::set<std::string> s{"growth", "moments", "sulp", "ledger", "kernel", "sule", "sudec",
                                       "sudec_f1", "sudec_plus", "alpha_center", "center_cluster",
                                       "census", "mixed"};
  return s;
}

const std::set<std::string>& ensemble_checks() {
  static const std::set<std::string> s{"ensemble_moments", "ensemble_kernel"};
  return s;
}

Blocks parse_blocks(const nlohmann::json& raw, const std::string& text, const std::string& source,
                    std::vector<CheckRequest>* checks, std::optional<std::string>* out_dir,
                    std::vector<std::string>* formats) {
  Blocks b;
  b.base_dir = std::filesystem::path(source).parent_path();
  Reader top(raw, "", text);
  top.require("schema");
  if (top.string("schema", "") != kConfigSchema)
    top.fail("schema", std::string("unsupported schema; expected \"") + kConfigSchema + "\"");
  top.string("description", "");

  if (top.has("model")) {
    auto m = top.child("model");
    b.model.present = true;
    b.model.hamiltonian = m.string("hamiltonian", "laplacian");
    b.model.W = m.number("W", 0.0);
    b.model.seed = m.unsigned_integer("seed", 1);
    if (m.has("space")) {
      auto s = m.child("space");
      b.model.space = s.string("kind", "lattice");
      if (b.model.space == "lattice") {
        b.model.dim = static_cast<int>(s.integer("dim", 1));
        b.model.side = static_cast<int>(s.integer("side", 0));
        if (b.model.hamiltonian != "cluster" && b.model.side < 1) s.fail("side", "lattice side must be >= 1");
      } else if (b.model.space == "graph") {
        s.require("edges");
        b.model.edges = s.string("edges", "");
        b.model.root = static_cast<Site>(s.integer("root", 0));
      } else if (b.model.space == "binary_tree") {
        b.model.depth = static_cast<int>(s.integer("depth", 0));
        if (b.model.depth < 0) s.fail("depth", "depth must be >= 0");
      } else if (b.model.space == "layered_tree") {
        if (s.has("levels")) {
          for (auto v : s.integers("levels", {})) {
            if (v < 1) s.fail("levels", "level sizes must be >= 1");
            b.model.levels.push_back(static_cast<std::size_t>(v));
          }
        } else {
          const auto rule = s.string("rule", "square");
          if (rule != "square") s.fail("rule", "only the \"square\" rule is supported");
          const auto depth = s.integer("depth", 0);
          if (depth < 1) s.fail("depth", "depth must be >= 1");
          b.model.levels.push_back(1);
          for (long long L = 1; L <= depth; ++L) b.model.levels.push_back(static_cast<std::size_t>(L * L));
        }
      } else {
        s.fail("kind", "space kind must be lattice, graph, binary_tree or layered_tree");
      }
      s.finish();
    } else if (b.model.hamiltonian != "cluster") {
      m.fail("space", "missing required key");
    }
    if (b.model.hamiltonian == "cluster") {
      if (b.model.space != "lattice") m.fail("hamiltonian", "cluster copies need a lattice base");
      b.model.copies = static_cast<int>(m.integer("copies", 2));
      b.model.separation = static_cast<int>(m.integer("separation", 10));
      b.model.base_side = static_cast<int>(m.integer("base_side", 4));
    } else if (b.model.hamiltonian != "laplacian" && b.model.hamiltonian != "anderson") {
      m.fail("hamiltonian", "hamiltonian must be laplacian, anderson or cluster");
    }
    if (!(b.model.W >= 0)) m.fail("W", "disorder width must be >= 0");
    m.finish();
  }

  if (top.has("window")) {
    auto w = top.child("window");
    b.window.kind = w.string("kind", "full");
    if (b.window.kind == "interval") {
      b.window.a = w.number("a");
      b.window.b = w.number("b");
      b.window.margin = w.number("margin", 0.02);
      if (!(b.window.b > b.window.a)) w.fail("b", "window needs a < b");
      if (!(b.window.margin >= 0 && b.window.margin < 1)) w.fail("margin", "margin must lie in [0,1)");
    } else if (b.window.kind != "full" && b.window.kind != "gershgorin") {
      w.fail("kind", "window kind must be full, gershgorin or interval");
    }
    w.finish();
  }

  if (top.has("params")) {
    auto p = top.child("params");
    auto& d = b.params.p;
    d.sigma = p.number("sigma", d.sigma);
    d.zeta = p.number("zeta", d.zeta);
    d.epsilon = p.number("epsilon", d.epsilon);
    d.zeta_prime = p.optional_number("zeta_prime");
    d.gamma = p.optional_number("gamma");
    b.params.kappa = p.number("kappa", b.params.kappa);
    b.params.alpha = p.number("alpha", b.params.alpha);
    b.params.delta = p.number("delta", b.params.delta);
    b.params.c_cap = p.number("C_cap", b.params.c_cap);
    b.params.zeta_grid = p.numbers("zeta_grid", b.params.zeta_grid);
    try {
      d.validate();
    } catch (const ParameterError& e) {
      p.fail("sigma", e.what());
    }
    if (!(b.params.c_cap > 0)) p.fail("C_cap", "C_cap must be positive");
    for (double z : b.params.zeta_grid)
      if (!(z > 0 && z <= 1)) p.fail("zeta_grid", "grid exponents must lie in (0,1]");
    p.finish();
  }

  if (top.has("time")) {
    auto t = top.child("time");
    b.time.grid = t.string("grid", "log");
    if (b.time.grid == "log") {
      b.time.t_min = t.number("t_min", b.time.t_min);
      b.time.t_max = t.number("t_max", b.time.t_max);
      b.time.points = t.integer("points", b.time.points);
      if (!(b.time.t_min > 0 && b.time.t_max > b.time.t_min) || b.time.points < 2)
        t.fail("t_max", "log grid needs 0 < t_min < t_max and points >= 2");
    } else if (b.time.grid == "uniform") {
      b.time.t_max = t.number("t_max", b.time.t_max);
      b.time.step = t.optional_number("step");
      if (!(b.time.t_max > 0)) t.fail("t_max", "t_max must be positive");
      if (b.time.step && !(*b.time.step > 0)) t.fail("step", "step must be positive");
    } else {
      t.fail("grid", "time grid must be log or uniform");
    }
    t.finish();
  }

  if (top.has("u")) b.u = parse_site(top.at("u"), "u", top);

  if (top.has("ensemble")) {
    auto e = top.child("ensemble");
    b.ensemble.present = true;
    b.ensemble.realizations = static_cast<int>(e.integer("realizations", 20));
    b.ensemble.tolerance = e.number("tolerance", 0.2);
    if (e.has("sites")) {
      const auto& arr = e.at("sites");
      if (!arr.is_array() || arr.empty()) e.fail("sites", "expected a nonempty array of sites");
      for (const auto& s : arr) b.ensemble.sites.push_back(parse_site(s, "sites", e));
    }
    if (b.ensemble.realizations < 1 || b.ensemble.realizations > 1000)
      e.fail("realizations", "realizations must lie in [1, 1000]");
    e.finish();
  }

  if (top.has("counterexample")) {
    auto c = top.child("counterexample");
    if (c.has("landau")) {
      auto l = c.child("landau");
      auto& L = b.landau;
      L.spec.B = l.number("B", 1.0);
      L.n_min = static_cast<int>(l.integer("n_min", 1));
      L.n_max = static_cast<int>(l.integer("n_max", 10000));
      L.spec.n_max = std::max(L.n_max, 10000);
      L.sigmas = l.numbers("sigma", L.sigmas);
      L.zeta = l.number("zeta", 1.0);
      L.threshold = l.number("threshold", 1e6);
      std::vector<int> ns;
      for (auto v : l.integers("product_n", {1, 5, 10, 20, 50, 200})) ns.push_back(static_cast<int>(v));
      L.product_n = ns;
      if (!(L.spec.B > 0)) l.fail("B", "B must be positive");
      if (L.n_min < 1 || L.n_max < L.n_min) l.fail("n_max", "need 1 <= n_min <= n_max");
      if (!(L.zeta > 0 && L.zeta <= 1)) l.fail("zeta", "zeta must lie in (0,1]");
      for (double s : L.sigmas)
        if (!(s >= 0)) l.fail("sigma", "sigma must be >= 0");
      for (int n : L.product_n)
        if (n < 1 || n > L.spec.n_max) l.fail("product_n", "product indices must lie in [1, n_max]");
      l.finish();
    }
    if (c.has("cluster")) {
      auto k = c.child("cluster");
      auto& C = b.cluster;
      C.copies = static_cast<int>(k.integer("copies", 2));
      std::vector<int> seps;
      for (auto v : k.integers("separations", {10, 20, 40, 80})) seps.push_back(static_cast<int>(v));
      C.separations = seps;
      b.cluster_base_side = static_cast<int>(k.integer("base_side", 4));
      C.kappa = k.number("kappa", 1.0);
      C.delta = k.number("delta", 0.1);
      C.c_cap = k.number("C_cap", 10.0);
      C.rotations = static_cast<int>(k.integer("rotations", 5));
      C.seed = k.unsigned_integer("seed", 7);
      C.params.sigma = k.number("sigma", 0.05);
      C.params.zeta = k.number("zeta", 1.0);
      C.params.epsilon = k.number("epsilon", 0.1);
      if (b.cluster_base_side < 1) k.fail("base_side", "base side must be >= 1");
      try {
        C.params.validate();
      } catch (const ParameterError& e) {
        k.fail("sigma", e.what());
      }
      k.finish();
    }
    c.finish();
  }

  if (top.has("checks")) {
    const auto& arr = top.at("checks");
    if (!arr.is_array()) top.fail("checks", "expected an array");
    const auto& known = known_checks();
    for (const auto& item : arr) {
      CheckRequest cr;
      if (item.is_string()) {
        cr.name = item.get<std::string>();
      } else if (item.is_object()) {
        Reader r(item, "checks", text);
        r.require("name");
        cr.name = r.string("name", "");
        cr.expect = r.string("expect", "pass");
        if (cr.expect != "pass" && cr.expect != "fail" && cr.expect != "report")
          r.fail("expect", "expect must be pass, fail or report");
        r.finish();
      } else {
        top.fail("checks", "each check is a name or {\"name\", \"expect\"}");
      }
      if (std::find(known.begin(), known.end(), cr.name) == known.end())
        throw ConfigError("unknown check \"" + cr.name + "\"", "checks", line_of_key(text, cr.name));
      if (checks) checks->push_back(cr);
      if (model_checks().count(cr.name) && !b.model.present)
        top.fail("checks", "check \"" + cr.name + "\" needs a model block");
      if (ensemble_checks().count(cr.name) && (!b.model.present || b.model.hamiltonian != "anderson" ||
                                               b.model.space != "lattice"))
        top.fail("checks", "ensemble checks need an anderson lattice model");
      if (cr.name == "kernel" && !b.params.p.gamma) top.fail("checks", "check \"kernel\" needs params.gamma");
      if (cr.name == "mixed" && !b.params.p.zeta_prime)
        top.fail("checks", "check \"mixed\" needs params.zeta_prime");
    }
  }

  if (top.has("output")) {
    auto o = top.child("output");
    if (o.has("dir") && out_dir) *out_dir = o.string("dir", "");
    else o.string("dir", "");
    if (o.has("formats")) {
      const auto& f = o.at("formats");
      if (!f.is_array()) o.fail("formats", "expected an array");
      std::vector<std::string> fs;
      for (const auto& e : f) {
        if (!e.is_string() || (e != "json" && e != "csv")) o.fail("formats", "formats are \"json\" and \"csv\"");
        fs.push_back(e.get<std::string>());
      }
      if (formats) *formats = fs;
    }
    o.finish();
  }
  top.finish();
  return b;
}

// ---- model --------------------------------------------------------------------

struct Model {
  SpacePtr space;
  std::unique_ptr<Hamiltonian> h;
  std::unique_ptr<SpectralData> sd;
  EnergyWindow window;
  Site u = 0;
  std::vector<double> times;
};

SiteSpace build_space(const ModelBlock& m, const std::filesystem::path& base_dir) {
  if (m.space == "lattice") return SiteSpace::lattice_box(m.dim, m.side);
  if (m.space == "binary_tree") return binary_tree(m.depth);
  if (m.space == "layered_tree") return layered_tree(m.levels);
  std::filesystem::path p(m.edges);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  std::size_t vertices = 0;
  auto edges = read_edge_list(p, &vertices);
  return SiteSpace::graph(vertices, std::move(edges), m.root);
}

std::vector<double> build_times(const TimeBlock& t, const SpectralData* sd) {
  if (t.grid == "log") return log_time_grid(t.t_min, t.t_max, static_cast<std::size_t>(t.points));
  double step = t.step ? *t.step : (sd ? resolving_time_step(*sd) : t.t_max / 1000);
  if (!std::isfinite(step)) step = t.t_max;
  return uniform_time_grid(t.t_max, step);
}

class ModelCache {
 public:
  ModelCache(const Blocks& b, std::uint64_t seed) : b_(b), seed_(seed) {}

  Model& get() {
    if (m_) return *m_;
    m_ = std::make_unique<Model>();
    const auto& mb = b_.model;
    if (mb.hamiltonian == "cluster") {
      const auto base = SiteSpace::lattice_box(mb.dim, mb.base_side);
      m_->h = std::make_unique<Hamiltonian>(build_cluster_laplacian(base, mb.copies, mb.separation));
      m_->space = m_->h->space_ptr();
    } else {
      m_->space = std::make_shared<const SiteSpace>(build_space(mb, b_.base_dir));
      m_->h = std::make_unique<Hamiltonian>(mb.hamiltonian == "anderson" ? build_anderson(m_->space, mb.W, seed_)
                                                                         : build_laplacian(m_->space));
    }
    m_->u = resolve_site(b_.u, *m_->space);
    return *m_;
  }

  Model& spectral() {
    auto& m = get();
    if (m.sd) return m;
    m.sd = std::make_unique<SpectralData>(diagonalize(*m.h));
    if (m.space->kind() == SpaceKind::Graph)
      assign_alpha(*m.sd, WeightOperator::graph_exponential(*m.space, b_.params.alpha));
    else
      assign_alpha(*m.sd, WeightOperator::lattice_polynomial(*m.space, b_.params.kappa));
    const auto& w = b_.window;
    if (w.kind == "interval") {
      m.window = make_window(*m.sd, w.a, w.b, w.margin);
    } else if (w.kind == "gershgorin") {
      const auto [lo, hi] = m.h->gershgorin_interval();
      m.window = full_window(*m.sd, lo, hi);
    } else {
      m.window = full_window(*m.sd);
    }
    m.times = build_times(b_.time, m.sd.get());
    return m;
  }

 private:
  const Blocks& b_;
  std::uint64_t seed_;
  std::unique_ptr<Model> m_;
};

// ---- outputs ------------------------------------------------------------------

struct Outputs {
  std::map<std::string, std::function<void(const std::filesystem::path&)>> csv;
  void table(const std::string& name, CsvTable t) {
    auto shared = std::make_shared<CsvTable>(std::move(t));
    csv[name] = [shared](const std::filesystem::path& p) { shared->write(p); };
  }
};

std::string iso_time(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- checks -------------------------------------------------------------------

struct CheckEval {
  std::string inequality;
  bool holds = false;
  nlohmann::json result;
};

EnvelopeOptions envelope_options(const Blocks& b) { return {b.params.c_cap, b.params.zeta_grid}; }

double envelope_at(const DecayFit& f, double log_pref, double r) {
  const double decay = r > 0 ? f.sigma_hat * std::pow(r, f.zeta_hat) : 0.0;
  return f.c_hat * std::exp(log_pref - decay);
}

struct Runner {
  const Blocks& b;
  const RunOptions& opt;
  ModelCache& models;
  Outputs& out;
  std::uint64_t seed;

  EnsembleSpec ensemble_spec() const {
    EnsembleSpec e;
    e.space.kind = SpaceKind::Lattice;
    e.space.dim = b.model.dim;
    e.space.side = b.model.side;
    e.width = b.model.W;
    e.realizations = b.ensemble.realizations;
    e.master_seed = seed;
    if (b.window.kind == "interval") e.window = WindowSpec{b.window.a, b.window.b, b.window.margin};
    e.params = b.params.p;
    e.times = build_times(b.time, nullptr);
    e.c_cap = b.params.c_cap;
    e.threads = std::max(1u, opt.threads);
    return e;
  }

  CheckEval run(const std::string& name) {
    const auto& p = b.params.p;
    const auto env = envelope_options(b);
    CheckEval ev;
    if (name == "growth") {
      auto& m = models.get();
      const int radius = std::max(1, m.space->eccentricity(m.u));
      const auto g = sphere_census(*m.space, m.u, radius);
      ev.inequality = "N_L(u) <= exp(L^beta) with beta < 1";
      ev.holds = g.passes_moderate_growth;
      ev.result = {{"u", m.u}, {"beta_fit", json_number(g.beta_fit)}, {"beta_defined", g.beta_defined},
                   {"beta_envelope", json_number(g.beta_envelope)},
                   {"max_radius", radius}, {"passes_moderate_growth", g.passes_moderate_growth}};
      CsvTable t({"L", "N_L"});
      for (std::size_t i = 0; i < g.radii.size(); ++i)
        t.add_row(std::vector<double>{static_cast<double>(g.radii[i]), static_cast<double>(g.sphere_counts[i])});
      out.table("growth.csv", std::move(t));
      return ev;
    }
    if (name == "moments") {
      auto& m = models.spectral();
      auto ms = std::make_shared<MomentSeries>(moment_series(*m.sd, m.window, m.u, p, m.times, true));
      ev.inequality = "sup_t M_u(sigma,zeta,X,t) < inf";
      ev.holds = std::isfinite(ms->sup_over_grid);
      ev.result = ms->sidecar();
      ev.result["liminf_cesaro"] = json_number(liminf_cesaro(*m.sd, m.window, m.u, p));
      out.csv["moments.csv"] = [ms](const std::filesystem::path& path) { ms->write_csv(path); };
      return ev;
    }
    if (name == "sulp") {
      auto& m = models.spectral();
      const auto s = sulp_profile(*m.sd, m.window, m.u, p, b.params.c_cap);
      ev.inequality = "P_u(x) <= C sqrt(liminf M) e^{-sigma/2 |x-u|^zeta}";
      ev.holds = s.fit.verdict;
      ev.result = s.to_json();
      CsvTable t({"x", "r", "value", "envelope"});
      const double lp = 0.5 * std::log(s.liminf);
      for (Eigen::Index x = 0; x < s.profile.size(); ++x) {
        const double r = m.space->distance(static_cast<Site>(x), m.u);
        t.add_row(std::vector<double>{static_cast<double>(x), r, s.profile[x], envelope_at(s.fit, lp, r)});
      }
      out.table("sulp_profile.csv", std::move(t));
      return ev;
    }
    if (name == "ledger") {
      auto& m = models.spectral();
      const auto l = ak_ledger(*m.sd, m.window, m.u, p);
      ev.inequality = "sum_x a_kx = 1, sum_k a_kx <= 1";
      ev.holds = !l.degenerate && l.row_sum_error <= 1e-12 && l.column_sum_max <= 1 + 1e-12;
      ev.result = l.to_json();
      CsvTable t({"rank", "A_sorted"});
      for (std::size_t k = 0; k < l.sorted_A.size(); ++k)
        t.add_row(std::vector<double>{static_cast<double>(k + 1), l.sorted_A[k]});
      out.table("ledger.csv", std::move(t));
      return ev;
    }
    if (name == "kernel") {
      auto& m = models.spectral();
      const auto k = kernel_interpolation_check(*m.sd, m.window, m.u, p, m.times);
      ev.inequality = "sup_t ||chi_x e^{-itH} X(H) chi_u|| <= C P_u^{1-gamma} L_u^{gamma/2}";
      ev.holds = k.verdict;
      ev.result = k.to_json();
      CsvTable t({"x", "sup_kernel", "bound_shape", "holder_sum"});
      for (Eigen::Index x = 0; x < k.sup_kernel.size(); ++x)
        t.add_row(std::vector<double>{static_cast<double>(x), k.sup_kernel[x], k.bound_shape[x], k.holder_sum[x]});
      out.table("kernel.csv", std::move(t));
      return ev;
    }
    if (name == "sule" || name == "alpha_center") {
      auto& m = models.spectral();
      const auto basis = basis_view(*m.sd, m.window);
      const auto s = sule_fit(basis, all_columns(basis), p, env);
      if (name == "sule") {
        ev.inequality = "||chi_x phi|| <= C e^{eps |x_phi|^zeta} e^{-sigma |x - x_phi|^zeta}";
        ev.holds = s.fit.verdict;
        ev.result = s.to_json(false);
        CsvTable t({"vector", "x_phi", "peak", "alpha", "R_phi", "sigma_hat"});
        for (std::size_t i = 0; i < s.centers.size(); ++i) {
          const auto& c = s.centers[i];
          t.add_row(std::vector<double>{static_cast<double>(c.vector), static_cast<double>(c.x_phi), c.peak,
                                        c.alpha, c.r_phi, s.sigma_per_vector[i]});
        }
        out.table("sule_centers.csv", std::move(t));
      } else {
        const auto a = alpha_center_bound(*m.space, s.centers, b.params.kappa);
        ev.inequality = "alpha_phi <x_phi>^{2 kappa} >= c > 0";
        ev.holds = a.verdict;
        ev.result = a.to_json();
      }
      return ev;
    }
    if (name == "sudec" || name == "sudec_f1") {
      auto& m = models.spectral();
      const auto basis = basis_view(*m.sd, m.window);
      SudecOptions so;
      so.envelope = env;
      const auto rate = name == "sudec" ? RateFunction::identity() : RateFunction::one();
      const auto s = sudec_check(basis, all_columns(basis), p, rate, so);
      ev.inequality = name == "sudec" ? "||chi_x phi|| ||chi_u phi|| <= C alpha_phi e^{eps|u|^zeta} e^{-sigma|x-u|^zeta}"
                                      : "||chi_x phi|| ||chi_u phi|| <= C e^{eps|u|^zeta} e^{-sigma|x-u|^zeta}";
      ev.holds = s.fit.verdict;
      ev.result = s.to_json();
      return ev;
    }
    if (name == "sudec_plus") {
      auto& m = models.spectral();
      const auto s = sudec_plus_check(*m.sd, window_groups(*m.sd, m.window), p, b.params.kappa, env);
      ev.inequality = "||chi_x P_E|| ||chi_u P_E|| <= C alpha_E e^{eps|u|^zeta} e^{-sigma|x-u|^zeta}";
      ev.holds = s.sudec_plus.verdict;
      ev.result = s.to_json();
      return ev;
    }
    if (name == "center_cluster") {
      auto& m = models.spectral();
      ev.inequality = "|x_phi - x_psi| <= delta |x_phi| + C_delta";
      ev.holds = true;
      double cmax = 0;
      std::size_t checked = 0, skipped = 0;
      nlohmann::json worst;
      for (auto g : window_groups(*m.sd, m.window)) {
        const auto cc = center_cluster_check(*m.space, m.sd->group_vectors(g), b.params.delta, b.params.c_cap);
        if (cc.skipped) {
          ++skipped;
          continue;
        }
        ++checked;
        ev.holds = ev.holds && cc.verdict;
        if (cc.c_delta >= cmax) {
          cmax = cc.c_delta;
          worst = cc.to_json();
          worst["group"] = g;
        }
      }
      ev.result = {{"delta", b.params.delta}, {"C_delta_max", cmax}, {"groups_checked", checked},
                   {"groups_skipped", skipped}, {"cap", b.params.c_cap}, {"worst_group", worst}};
      return ev;
    }
    if (name == "census") {
      auto& m = models.spectral();
      const auto basis = basis_view(*m.sd, m.window);
      const auto groups = window_groups(*m.sd, m.window);
      const auto plus = sudec_plus_check(*m.sd, groups, p, b.params.kappa, env);
      const auto c = center_census(basis, plus.centers, b.params.kappa, alpha_total(*m.sd, groups));
      ev.inequality = "|x_phi_n| >= c n^{1/(2 kappa)} and N_L <= C L^{2 kappa} alpha_total";
      ev.holds = c.order_holds && c.count_violations == 0;
      ev.result = c.to_json();
      CsvTable t({"L", "N_L", "Ntilde_L"});
      for (std::size_t i = 0; i < c.radii.size(); ++i)
        t.add_row(std::vector<double>{static_cast<double>(c.radii[i]), static_cast<double>(c.n_l[i]),
                                      static_cast<double>(c.ntilde_l[i])});
      out.table("census.csv", std::move(t));
      return ev;
    }
    if (name == "mixed") {
      auto& m = models.spectral();
      const auto basis = basis_view(*m.sd, m.window);
      SudecOptions so;
      so.envelope = env;
      const auto r = mixed_exponent_check(basis, all_columns(basis), p, so);
      ev.inequality = "||chi_x phi|| ||chi_u phi|| <= C alpha_phi e^{eps|u|^zeta'} e^{-sigma|x-u|^zeta}";
      ev.holds = r.sudec_prime.fit.verdict;
      ev.result = r.to_json();
      return ev;
    }
    if (name == "landau_product") return landau_product(b.landau);
    if (name == "landau_sudec") return landau_sudec(b.landau);
    if (name == "cluster") {
      auto spec = b.cluster;
      spec.base = std::make_shared<const SiteSpace>(SiteSpace::lattice_box(1, b.cluster_base_side));
      if (opt.seed) spec.seed = *opt.seed;
      return cluster(spec);
    }
    if (name == "ensemble_moments") {
      const auto spec = ensemble_spec();
      const auto space = build_site_space(spec.space);
      const Site u = resolve_site(b.u, space);
      auto em = std::make_shared<EnsembleMoments>(ensemble_moments(spec, u));
      ev.inequality = "E sup_t M_u(sigma,zeta,X,t) < inf";
      ev.holds = std::isfinite(em->mean_of_sup) && em->ordering_holds;
      ev.result = {{"spec", spec.to_json()}, {"moments", em->to_json()}};
      out.csv["ensemble_moments.csv"] = [em](const std::filesystem::path& path) { em->write_csv(path); };
      return ev;
    }
    if (name == "ensemble_kernel") {
      const auto spec = ensemble_spec();
      const auto space = build_site_space(spec.space);
      std::vector<Site> us;
      if (b.ensemble.sites.empty()) {
        us.push_back(resolve_site(b.u, space));
        Coord c = space.coord(us.front());
        c[0] += spec.space.side / 4;
        if (auto f = space.find(c)) us.push_back(*f);
      } else {
        for (const auto& s : b.ensemble.sites) us.push_back(resolve_site(s, space));
      }
      auto ek = std::make_shared<EnsembleKernel>(ensemble_kernel_decay(spec, us, b.ensemble.tolerance));
      ev.inequality = "E sup_t ||chi_x e^{-itH} X(H) chi_u|| <= C e^{-sigma|x-u|^zeta}";
      ev.holds = ek->verdict;
      ev.result = {{"spec", spec.to_json()}, {"kernel", ek->to_json()}};
      out.csv["ensemble_kernel.csv"] = [ek](const std::filesystem::path& path) { ek->write_csv(path); };
      return ev;
    }
    throw ParameterError("unknown check " + name);
  }

  CheckEval landau_product(const LandauRun& L) {
    CheckEval ev;
    ev.inequality = "|phi_n(z1) phi_n(z2)| = n^n e^{-n} / (2 pi n!)";
    ev.holds = true;
    nlohmann::json rows = nlohmann::json::array();
    for (int n : L.product_n) {
      const auto o = landau_opposite_product(L.spec, n);
      const double sum_err = std::abs(o.product_sum - o.closed_form) / o.closed_form;
      ev.holds = ev.holds && o.rel_err <= 1e-10 && sum_err <= 1e-10;
      rows.push_back({{"n", n}, {"radius", o.radius}, {"direct", o.direct}, {"closed_form", o.closed_form},
                      {"product_sum", o.product_sum}, {"rel_err", o.rel_err}, {"product_sum_rel_err", sum_err},
                      {"stirling_ratio", o.stirling_ratio}});
    }
    ev.result = {{"B", L.spec.B}, {"tolerance", 1e-10}, {"rows", rows}};
    return ev;
  }

  CheckEval landau_sudec(const LandauRun& L) {
    CheckEval ev;
    ev.inequality = "|phi_n(z1) phi_n(z2)| <= C e^{-sigma |z1 - z2|^zeta} uniformly in n";
    // Demonstrated when every positive rate in the sweep is exceeded.
    bool all_violated = true;
    bool any_rate = false;
    nlohmann::json per = nlohmann::json::array();
    for (double s : L.sigmas) {
      auto v = std::make_shared<LandauViolation>(
          landau_sudec_violation(L.spec, L.n_min, L.n_max, s, L.zeta, L.threshold));
      if (s > 0) {
        any_rate = true;
        all_violated = all_violated && v->first_exceeding.has_value();
      }
      per.push_back(v->to_json());
      out.csv["landau_sigma_" + format_number(s) + ".csv"] = [v](const std::filesystem::path& path) {
        v->write_csv(path);
      };
    }
    ev.holds = !(any_rate && all_violated);
    ev.result = {{"per_sigma", per}};
    return ev;
  }

  CheckEval cluster(const ClusterSpec& spec) {
    CheckEval ev;
    auto rep = std::make_shared<ClusterReport>(cluster_suleplus_violation(spec));
    ev.inequality = "SUDEC+ and SULE+ with constants independent of the copy separation D";
    ev.holds = !rep->verdict;
    ev.result = rep->to_json();
    out.csv["cluster.csv"] = [rep](const std::filesystem::path& path) { rep->write_csv(path); };
    return ev;
  }
};

CheckOutcome classify(const std::string& name, const std::string& expect, const CheckEval& ev) {
  CheckOutcome o;
  o.name = name;
  o.inequality = ev.inequality;
  o.expected = expect;
  o.observed = ev.holds ? "pass" : "fail";
  if (expect == "report") {
    o.status = "reported";
    o.ok = true;
  } else if (expect == "fail") {
    o.status = ev.holds ? "unexpected-pass" : "expected-fail";
    o.ok = !ev.holds;
  } else {
    o.status = ev.holds ? "pass" : "fail";
    o.ok = ev.holds;
  }
  return o;
}

nlohmann::json outcome_json(const CheckOutcome& o) {
  return {{"name", o.name}, {"inequality", o.inequality}, {"expected", o.expected},
          {"observed", o.observed}, {"status", o.status}, {"ok", o.ok}};
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::Run: return "run";
    case Mode::Spectrum: return "spectrum";
    case Mode::Moments: return "moments";
    case Mode::Diagnose: return "diagnose";
    case Mode::Ensemble: return "ensemble";
  }
  return "run";
}

nlohmann::json spectrum_json(const Model& m) {
  const auto& sd = *m.sd;
  std::size_t max_mult = 0;
  for (const auto& g : sd.groups) max_mult = std::max(max_mult, g.multiplicity);
  std::size_t in_window = 0;
  for (double v : m.window.sampled)
    if (v > 0) ++in_window;
  return {{"label", m.h->label().kind},
          {"parameters", m.h->label().params},
          {"dimension", sd.dimension()},
          {"u", m.u},
          {"eigenvalue_min", sd.eigenvalues.size() ? sd.eigenvalues[0] : 0.0},
          {"eigenvalue_max", sd.eigenvalues.size() ? sd.eigenvalues[sd.eigenvalues.size() - 1] : 0.0},
          {"groups", sd.groups.size()},
          {"max_multiplicity", max_mult},
          {"degeneracy_tol", sd.degeneracy_tol},
          {"residual", sd.residual},
          {"orthonormality_error", sd.orthonormality_error},
          {"window", m.window.to_json()},
          {"eigenvalues_in_window", in_window},
          {"time_points", m.times.size()},
          {"t_max", m.times.empty() ? 0.0 : m.times.back()}};
}

struct Finisher {
  std::vector<CheckOutcome> outcomes;
  nlohmann::json checks = nlohmann::json::object();

  void add(const std::string& name, const std::string& expect, Runner& r) {
    try {
      const auto ev = r.run(name);
      const auto o = classify(name, expect, ev);
      auto block = outcome_json(o);
      block["result"] = ev.result;
      checks[name] = block;
      outcomes.push_back(o);
    } catch (const ConfigError&) {
      throw;
    } catch (const ParameterError& e) {
      throw ConfigError(e.what(), "checks", 0);
    } catch (const std::exception& e) {
      CheckOutcome o;
      o.name = name;
      o.expected = expect;
      o.observed = "error";
      o.status = "error";
      o.ok = false;
      auto block = outcome_json(o);
      block["error"] = e.what();
      checks[name] = block;
      outcomes.push_back(o);
    }
  }
};

RunResult finish(nlohmann::json report, Finisher& fin, const Outputs& out,
                 const std::filesystem::path& dir, const std::vector<std::string>& formats,
                 const RunOptions& opt, std::chrono::system_clock::time_point started) {
  RunResult res;
  res.out_dir = dir;
  res.checks = fin.outcomes;
  report["checks"] = fin.checks;
  nlohmann::json list = nlohmann::json::array();
  nlohmann::json failing = nlohmann::json::array();
  res.exit_code = 0;
  for (const auto& o : fin.outcomes) {
    list.push_back(outcome_json(o));
    if (!o.ok) {
      failing.push_back(o.name + ": " + o.inequality);
      res.exit_code = 1;
    }
  }
  res.summary = {{"schema", "loclab-summary/1"}, {"exit_status", res.exit_code},
                 {"checks", list}, {"failing", failing}};
  res.report = report;
  const bool json = std::find(formats.begin(), formats.end(), "json") != formats.end();
  const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
  std::filesystem::create_directories(dir);
  if (csv)
    for (const auto& [name, write] : out.csv) write(dir / name);
  if (json) write_json_atomic(dir / "report.json", report);
  write_json_atomic(dir / "summary.json", res.summary);
  const auto ended = std::chrono::system_clock::now();
  write_json_atomic(dir / "metadata.json",
                    {{"started", iso_time(started)},
                     {"finished", iso_time(ended)},
                     {"elapsed_seconds", std::chrono::duration<double>(ended - started).count()},
                     {"command", opt.command_line},
                     {"threads", opt.threads},
                     {"output_dir", dir.string()},
                     {"version", kVersion}});
  return res;
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> k{"growth",        "moments",        "sulp",          "ledger",
                                          "kernel",        "sule",           "sudec",         "sudec_f1",
                                          "sudec_plus",    "alpha_center",   "center_cluster", "census",
                                          "mixed",         "landau_product", "landau_sudec",  "cluster",
                                          "ensemble_moments", "ensemble_kernel"};
  return k;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig c;
  c.source = source;
  try {
    c.raw = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "", line_of_offset(text, e.byte ? e.byte - 1 : 0));
  }
  parse_blocks(c.raw, text, source, &c.checks, &c.output_dir, &c.formats);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string(), "", 0);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::filesystem::path resolve_output_dir(const RunOptions& opt, const std::optional<std::string>& config_dir) {
  if (opt.out) return *opt.out;
  if (config_dir && !config_dir->empty()) return *config_dir;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "loclab_out";
}

RunResult run_config(const ExperimentConfig& config, Mode mode, const RunOptions& opt) {
  const auto started = std::chrono::system_clock::now();
  const std::string text = config.raw.dump();
  const Blocks b = parse_blocks(config.raw, text, config.source, nullptr, nullptr, nullptr);
  const std::uint64_t seed = opt.seed.value_or(b.model.seed);
  ModelCache models(b, seed);
  Outputs out;
  Runner runner{b, opt, models, out, seed};
  Finisher fin;

  nlohmann::json report{{"schema", kReportSchema}, {"mode", mode_name(mode)}, {"config", config.raw},
                        {"seed", seed}};
  report["constants_note"] = "verdicts use fitted constants capped at C_cap";

  // run without a model block evaluates the counterexample checks only.
  const bool wants_model =
      mode == Mode::Spectrum || mode == Mode::Moments || (mode == Mode::Run && b.model.present);
  if ((mode == Mode::Spectrum || mode == Mode::Moments || mode == Mode::Ensemble) && !b.model.present)
    throw ConfigError("mode " + mode_name(mode) + " needs a model block", "model", 0);

  try {
    if (wants_model) {
      auto& m = models.spectral();
      report["model"] = spectrum_json(m);
      if (mode == Mode::Spectrum) {
        auto sd = m.sd.get();
        out.csv["spectrum.json"] = [sd](const std::filesystem::path& p) { write_spectral_cache(*sd, p); };
        CsvTable t({"k", "energy", "group", "multiplicity", "window_value"});
        for (std::size_t k = 0; k < sd->dimension(); ++k) {
          const auto g = sd->group_of[k];
          t.add_row(std::vector<double>{static_cast<double>(k), sd->eigenvalues[static_cast<Eigen::Index>(k)],
                                        static_cast<double>(g), static_cast<double>(sd->groups[g].multiplicity),
                                        m.window.sampled[k]});
        }
        out.table("spectrum.csv", std::move(t));
      }
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), "model", 0);
  } catch (const ConstructionError& e) {
    throw ConfigError(e.what(), "model", 0);
  }

  switch (mode) {
    case Mode::Spectrum:
      break;
    case Mode::Moments:
      fin.add("moments", "pass", runner);
      break;
    case Mode::Run: {
      bool listed = false;
      for (const auto& c : config.checks) listed = listed || c.name == "moments";
      if (!listed && b.model.present) fin.add("moments", "pass", runner);
      for (const auto& c : config.checks) fin.add(c.name, c.expect, runner);
      break;
    }
    case Mode::Diagnose:
      for (const auto& c : config.checks)
        if (c.name != "moments") fin.add(c.name, c.expect, runner);
      break;
    case Mode::Ensemble: {
      std::map<std::string, std::string> expect{{"ensemble_moments", "pass"}, {"ensemble_kernel", "pass"}};
      for (const auto& c : config.checks)
        if (expect.count(c.name)) expect[c.name] = c.expect;
      for (const auto& name : {"ensemble_moments", "ensemble_kernel"}) fin.add(name, expect[name], runner);
      break;
    }
  }
  return finish(report, fin, out, resolve_output_dir(opt, config.output_dir), config.formats, opt, started);
}

RunResult run_landau(const LandauRun& run, const RunOptions& opt) {
  const auto started = std::chrono::system_clock::now();
  Blocks b;
  b.landau = run;
  ModelCache models(b, 0);
  Outputs out;
  Runner runner{b, opt, models, out, 0};
  Finisher fin;
  fin.add("landau_product", "pass", runner);
  fin.add("landau_sudec", "fail", runner);
  nlohmann::json report{{"schema", kReportSchema},
                        {"mode", "counterexample landau"},
                        {"B", run.spec.B},
                        {"n_min", run.n_min},
                        {"n_max", run.n_max},
                        {"sigma", run.sigmas},
                        {"zeta", run.zeta},
                        {"threshold", run.threshold}};
  return finish(report, fin, out, resolve_output_dir(opt, std::nullopt), {"json", "csv"}, opt, started);
}

RunResult run_cluster(const ClusterSpec& spec, const RunOptions& opt) {
  const auto started = std::chrono::system_clock::now();
  Blocks b;
  b.cluster = spec;
  ModelCache models(b, 0);
  Outputs out;
  Runner runner{b, opt, models, out, 0};
  Finisher fin;
  auto s = spec;
  if (opt.seed) s.seed = *opt.seed;
  CheckEval ev;
  try {
    ev = runner.cluster(s);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), "cluster", 0);
  } catch (const ConstructionError& e) {
    throw ConfigError(e.what(), "cluster", 0);
  }
  const auto o = classify("cluster", "fail", ev);
  auto block = outcome_json(o);
  block["result"] = ev.result;
  fin.checks["cluster"] = block;
  fin.outcomes.push_back(o);
  nlohmann::json report{{"schema", kReportSchema}, {"mode", "counterexample cluster"}};
  return finish(report, fin, out, resolve_output_dir(opt, std::nullopt), {"json", "csv"}, opt, started);
}

}  // namespace loclab
