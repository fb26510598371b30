#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "loclab/runner.hpp"

namespace loclab {

namespace {

void print_result(const RunResult& r) {
  for (const auto& c : r.checks) {
    std::cout << "check " << c.name << ": " << c.status;
    if (!c.ok && !c.inequality.empty()) std::cout << " [" << c.inequality << "]";
    std::cout << "\n";
  }
  std::cout << "output: " << r.out_dir.string() << "\n";
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Localization criteria lab: spectra, moments, envelope checks and counterexamples"};
  app.require_subcommand(1);
  app.fallthrough();

  RunOptions opt;
  std::uint64_t seed = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "Override the model / master seed");
  app.add_option("--threads", opt.threads, "Worker threads for ensembles")->check(CLI::Range(1u, 256u));
  auto* out_opt = app.add_option("--out", out, std::string("Output directory (default: config, then $") + kOutputEnv + ")");

  std::string config_path;
  auto add_config_command = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "Experiment config (JSON)")->required();
    return sub;
  };
  auto* run_cmd = add_config_command("run", "Build, diagonalize, evolve and run every configured check");
  auto* spectrum_cmd = add_config_command("spectrum", "Diagonalize and write the spectral cache");
  auto* moments_cmd = add_config_command("moments", "Compute the moment series and its time averages");
  auto* diagnose_cmd = add_config_command("diagnose", "Run the configured checks only");
  auto* ensemble_cmd = add_config_command("ensemble", "Disorder-ensemble moments and kernel decay");

  auto* ce = app.add_subcommand("counterexample", "Closed-form counterexamples");
  ce->require_subcommand(1);
  LandauRun landau;
  auto* landau_cmd = ce->add_subcommand("landau", "Lowest Landau level product table");
  landau_cmd->add_option("--B", landau.spec.B, "Magnetic field strength")->check(CLI::PositiveNumber);
  landau_cmd->add_option("--n-min", landau.n_min, "Smallest angular index")->check(CLI::Range(1, 10000));
  landau_cmd->add_option("--n-max", landau.n_max, "Largest angular index")->check(CLI::Range(1, 10000));
  landau_cmd->add_option("--sigma", landau.sigmas, "Decay rates")->delimiter(',');
  landau_cmd->add_option("--zeta", landau.zeta, "Decay exponent in (0,1]");
  landau_cmd->add_option("--threshold", landau.threshold, "Violation threshold");

  ClusterSpec cluster;
  int base_side = 4;
  auto* cluster_cmd = ce->add_subcommand("cluster", "Disjoint copies of a finite cluster");
  cluster_cmd->add_option("--copies", cluster.copies, "Number of copies J");
  cluster_cmd->add_option("--separations", cluster.separations, "Increasing separations D")->delimiter(',');
  cluster_cmd->add_option("--base-side", base_side, "Sites of the base path")->check(CLI::Range(1, 1000));
  cluster_cmd->add_option("--kappa", cluster.kappa, "Weight exponent");
  cluster_cmd->add_option("--delta", cluster.delta, "Center-cluster delta");
  cluster_cmd->add_option("--sigma", cluster.params.sigma, "Decay rate");
  cluster_cmd->add_option("--zeta", cluster.params.zeta, "Decay exponent");
  cluster_cmd->add_option("--epsilon", cluster.params.epsilon, "Allowance rate");
  cluster_cmd->add_option("--rotations", cluster.rotations, "Random rotations per degenerate group");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*seed_opt) opt.seed = seed;
  if (*out_opt) opt.out = out;
  for (int i = 0; i < argc; ++i) opt.command_line += (i ? " " : "") + std::string(argv[i]);

  try {
    RunResult res;
    if (*landau_cmd) {
      landau.spec.n_max = std::max(landau.n_max, 10000);
      if (landau.n_max < landau.n_min) throw ConfigError("need n_min <= n_max", "--n-max", 0);
      res = run_landau(landau, opt);
    } else if (*cluster_cmd) {
      cluster.base = std::make_shared<const SiteSpace>(SiteSpace::lattice_box(1, base_side));
      res = run_cluster(cluster, opt);
    } else {
      Mode mode = Mode::Run;
      if (*spectrum_cmd) mode = Mode::Spectrum;
      else if (*moments_cmd) mode = Mode::Moments;
      else if (*diagnose_cmd) mode = Mode::Diagnose;
      else if (*ensemble_cmd) mode = Mode::Ensemble;
      else if (!*run_cmd) return 2;
      res = run_config(load_config(config_path), mode, opt);
    }
    print_result(res);
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error";
    if (!config_path.empty()) std::cerr << " in " << config_path;
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    if (!e.key().empty()) std::cerr << " at key '" << e.key() << "'";
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace loclab
