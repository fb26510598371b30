// File-driven experiment pipelines: strict JSON configs, named checks with
// expected verdicts, and report/summary/metadata outputs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "loclab/counterexamples.hpp"

namespace loclab {

inline constexpr const char* kConfigSchema = "loclab-config/1";
inline constexpr const char* kOutputEnv = "LOCLAB_OUT";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string key, int line);
  const std::string& key() const { return key_; }
  int line() const { return line_; }  // 0 when unknown

 private:
  std::string key_;
  int line_;
};

struct CheckRequest {
  std::string name;
  std::string expect = "pass";  // pass | fail | report
};

// Parsed and validated config; `raw` keeps the document for the report.
struct ExperimentConfig {
  nlohmann::json raw;
  std::string source;
  std::vector<CheckRequest> checks;
  std::optional<std::string> output_dir;
  std::vector<std::string> formats{"json", "csv"};
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Check names understood by the runner.
const std::vector<std::string>& known_checks();

struct RunOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::optional<std::filesystem::path> out;
  std::string command_line;
};

struct CheckOutcome {
  std::string name;
  std::string inequality;
  std::string expected;
  std::string observed;  // pass | fail | error
  std::string status;    // pass | fail | expected-fail | unexpected-pass | reported | error
  bool ok = false;
};

struct RunResult {
  nlohmann::json report;
  nlohmann::json summary;
  std::vector<CheckOutcome> checks;
  std::filesystem::path out_dir;
  int exit_code = 0;  // 0 all checks as expected, 1 otherwise
};

enum class Mode { Run, Spectrum, Moments, Diagnose, Ensemble };

// Output directory: --out, then the config, then $LOCLAB_OUT, then ./loclab_out.
std::filesystem::path resolve_output_dir(const RunOptions& opt,
                                         const std::optional<std::string>& config_dir);

RunResult run_config(const ExperimentConfig& config, Mode mode, const RunOptions& opt);

struct LandauRun {
  LandauSpec spec;
  int n_min = 1;
  int n_max = 10000;
  std::vector<double> sigmas{0.1, 0.5, 1.0};
  double zeta = 1.0;
  double threshold = 1e6;
  std::vector<int> product_n{1, 5, 10, 20, 50, 200};
};

RunResult run_landau(const LandauRun& run, const RunOptions& opt);
RunResult run_cluster(const ClusterSpec& spec, const RunOptions& opt);

// Command-line entry point; returns the process exit status (2 on config errors).
int cli_main(int argc, char** argv);

}  // namespace loclab
