#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tnoise {

enum class ExperimentKind { corrector_convergence, dissipation_2d, blowup_3d, identity_suite };

std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::identity_suite;
  int dim = 2;
  int max_mode = 32;
  double dt = 0.01;
  double horizon = 0.5;
  double viscosity = 1e-3;
  std::vector<double> kappa{0.0, 0.25, 1.0};
  std::vector<int> N{32};
  double gamma = 1.0;
  double alpha = 0.25;  // H^{-alpha} index of the cut-off norm
  double L = 1.0;
  double R = 0.0;  // 0 selects R = 2L
  double r0 = 1.0;
  int ensemble = 1;
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 0;  // 0: hardware concurrency

  std::string scheme = "isometric";
  std::string truncation;  // empty: stratonovich in 2D, ito in 3D
  double init_radius = 4.0;
  int sample_every = 1;
  double ceiling_factor = 1e3;
  double early_exit_fraction = 0.1;  // stop once ||xi|| <= fraction * r0

  // checks
  double confidence = 0.95;
  double min_enhancement = 5.0;
  double enhancement_kappa = 1.0;
  double energy_tolerance = 0.05;
  double decay_slack = 1.01;

  // corrector-convergence
  std::vector<double> alphas{1.0};
  std::vector<int> lattice_N{32, 64, 128, 256};
  double lattice_tolerance = 0.02;
  double slope_lo = -1.3, slope_hi = -0.7;
  double ratio_lo = 1.4, ratio_hi = 3.0;
  int field_modes = 8;

  // identity-suite
  int random_fields = 20;

  double cutoff_radius() const { return R > 0.0 ? R : 2.0 * L; }
  std::string effective_truncation() const {
    return truncation.empty() ? (dim == 2 ? "stratonovich" : "ito") : truncation;
  }
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::vector<std::string>& problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

ExperimentConfig default_config(ExperimentKind kind);
// Applies `key = value` pairs of a TOML document; unknown keys are errors.
void apply_toml(ExperimentConfig& c, const std::string& toml_text, const std::string& origin);
// One `key=value` override; the value uses TOML syntax.
void apply_override(ExperimentConfig& c, const std::string& assignment);
// Every problem of the configuration, empty when valid.
std::vector<std::string> validate(const ExperimentConfig& c);
// Echo of every parameter.
nlohmann::json config_to_json(const ExperimentConfig& c);

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentReport {
  nlohmann::json summary;
  std::vector<Check> checks;
  std::vector<std::string> tables;  // CSV paths relative to the output directory
  double runtime_seconds = 0.0;
  bool all_pass() const;
  nlohmann::json to_json(const ExperimentConfig& c) const;  // without the runtime
};

using ProgressFn = std::function<void(const std::string&)>;

// Validates, runs and writes CSV tables, summary.json and runtime.json into c.out.
ExperimentReport run_experiment(const ExperimentConfig& c, const ProgressFn& progress = {});

// Runs fn(i, worker) for i in [0, n) on `threads` workers; results must be stored by index.
void parallel_for(int n, int threads, const std::function<void(int, int)>& fn);

}  // namespace tnoise
