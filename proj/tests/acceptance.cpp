#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tnoise/calibration.hpp"
#include "tnoise/experiment.hpp"

using namespace tnoise;
namespace fs = std::filesystem;

namespace {

// Empirical constants of the 3D experiments, reproducible with `tnoise calibrate`.
constexpr double kSmallDataRadius = 1282.07;  // calibrate r0 --max-mode 5
constexpr double kLimitConstant = 7.78198e-15;  // calibrate limit --max-mode 10 --horizon 1 --family 12 --sizes 2000 4000 8000
constexpr double kCutoffConstant = 7.00058e7;     // calibrate cutoff --size 3e4 --L 1e4 --horizon 0.2 --kappa 0.1 --trajectories 8

struct Outcome {
  bool pass = false;
  std::vector<std::string> lines;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_work = "acceptance_work";
int g_threads = 0;

// Runs the experiment or reuses an earlier run with an identical configuration echo.
std::vector<Check> run_cached(ExperimentConfig c, const std::string& name) {
  c.out = (g_work / name).string();
  c.threads = g_threads;
  const fs::path summary = fs::path(c.out) / "summary.json";
  if (fs::exists(summary)) {
    std::ifstream is(summary);
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (!j.is_discarded() && j.value("config", nlohmann::json()) == config_to_json(c)) {
      std::vector<Check> out;
      for (const auto& k : j.at("checks"))
        out.push_back({k.at("name"), k.at("pass"), k.at("value"), k.at("threshold"), k.at("detail")});
      return out;
    }
  }
  return run_experiment(c).checks;
}

Outcome select(const std::vector<Check>& checks, const std::vector<std::string>& prefixes) {
  Outcome o;
  o.pass = true;
  int n = 0;
  for (const Check& k : checks)
    for (const auto& p : prefixes)
      if (k.name.rfind(p, 0) == 0) {
        ++n;
        o.pass = o.pass && k.pass;
        o.lines.push_back(std::string(k.pass ? "pass " : "FAIL ") + k.name + ": " + fmt("%.6g", k.value) + " (" + k.detail + ")");
        break;
      }
  if (n == 0) {
    o.pass = false;
    o.lines.push_back("no matching checks");
  }
  return o;
}

Outcome merge(Outcome a, const Outcome& b) {
  a.pass = a.pass && b.pass;
  a.lines.insert(a.lines.end(), b.lines.begin(), b.lines.end());
  return a;
}

ExperimentConfig identities() { return default_config(ExperimentKind::identity_suite); }

ExperimentConfig corrector(int dim) {
  ExperimentConfig c = default_config(ExperimentKind::corrector_convergence);
  c.dim = dim;
  c.N = {8, 16, 32, 64};
  c.alphas = {1.0};
  c.field_modes = 8;
  c.lattice_N = dim == 2 ? std::vector<int>{32, 64, 128, 256} : std::vector<int>{32, 64, 128};
  c.lattice_tolerance = dim == 2 ? 0.02 : 0.04;
  c.slope_lo = -1.3;
  c.slope_hi = -0.7;
  c.ratio_lo = 1.4;
  c.ratio_hi = 3.0;
  return c;
}

ExperimentConfig dissipation() {
  ExperimentConfig c = default_config(ExperimentKind::dissipation_2d);
  c.max_mode = 32;
  c.viscosity = 1e-3;
  c.kappa = {0.0, 0.25, 1.0};
  c.N = {32};
  c.gamma = 1.0;
  c.ensemble = 50;
  c.dt = 0.01;
  c.horizon = 0.5;
  c.init_radius = 4.0;
  c.min_enhancement = 5.0;
  c.enhancement_kappa = 1.0;
  c.energy_tolerance = 0.05;
  c.confidence = 0.95;
  return c;
}

ExperimentConfig baseline() {
  ExperimentConfig c = default_config(ExperimentKind::dissipation_2d);
  c.max_mode = 32;
  c.viscosity = 1e-3;
  c.kappa = {0.0};
  c.N = {32};
  c.ensemble = 2;
  c.dt = 0.05;
  c.horizon = 50.0;
  c.sample_every = 10;
  c.decay_slack = 1.01;
  return c;
}

ExperimentConfig blowup() {
  ExperimentConfig c = default_config(ExperimentKind::blowup_3d);
  c.max_mode = 5;
  c.dt = 5e-4;
  c.kappa = {0.1, 0.4};
  c.N = {8, 16};
  c.L = 1e5;
  c.r0 = kSmallDataRadius;
  c.alpha = 0.25;
  c.ensemble = 100;
  c.init_radius = 2.0;
  c.confidence = 0.95;
  c.sample_every = 20;
  return c;
}

Outcome limit_decay() {
  Outcome o;
  o.pass = true;
  const double L0 = 4000.0;
  for (int i = 0; i < 3; ++i) {
    const double size = (0.5 * (1 << i)) * L0;
    const double kappa = kLimitConstant * std::pow(size, 4) + 1.0;
    const SpectralField xi0 = random_vorticity(10, derive_seed(2, i), 2.0, size);
    const LimitRun r = run_limit(10, xi0, 1.0 + 0.6 * kappa, 5.0, 1e-3);
    const bool ok = r.max_decay_ratio <= 1.02;
    o.pass = o.pass && ok;
    o.lines.push_back(std::string(ok ? "pass " : "FAIL ") + "||xi_0|| = " + fmt("%g", size) + ", kappa = " + fmt("%.4g", kappa) +
                      ": sup ||xi_t|| / (e^{-t} ||xi_0||) = " + fmt("%.6f", r.max_decay_ratio) + " (<= 1.02)");
  }
  return o;
}

Outcome cutoff_bound() {
  Outcome o;
  o.pass = true;
  SolverOptions s;
  s.dim = 3;
  s.max_mode = 5;
  s.viscosity = 1.0;
  s.kappa = 0.1;
  s.dt = 5e-4;
  s.truncation = Truncation::ito;
  s.theta = ThetaSequence::annulus(8, 1.0, 3);
  s.cutoff = CutoffFunction{2e4};
  s.alpha = 0.25;
  s.dissipation_resolution = 0.0;
  Solver solver(s);
  int engaged = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const SpectralField xi0 = random_vorticity(5, derive_seed(2, i), 2.0, 3e4);
    BrownianDriver drv(3, derive_seed(2, (std::uint64_t{1} << 20) | static_cast<std::uint64_t>(i)));
    const CutoffEnergySample e = cutoff_energy_sample(solver, xi0, drv, 0.2);
    const double ratio = (e.lhs - e.initial) / (kCutoffConstant * e.scale);
    worst = std::max(worst, ratio);
    engaged += e.engaged;
    if (ratio > 1.0) {
      o.pass = false;
      o.lines.push_back("FAIL trajectory " + std::to_string(i) + ": lhs = " + fmt("%.6e", e.lhs) + " exceeds the bound");
    }
  }
  o.lines.push_back("max (lhs - ||xi_0||^2) / (C_alpha (R+1)^{2/(3+2alpha)} T) = " + fmt("%.4f", worst) + " with C_alpha = " +
                    fmt("%.4g", kCutoffConstant) + ", cut-off engaged on " + std::to_string(engaged) + "/20");
  return o;
}

std::vector<std::pair<std::string, std::string>> csv_files(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") {
      std::ifstream is(e.path(), std::ios::binary);
      std::ostringstream ss;
      ss << is.rdbuf();
      out.push_back({e.path().filename().string(), ss.str()});
    }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome reproducibility() {
  Outcome o;
  o.pass = true;
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
  ExperimentConfig id = identities();
  id.random_fields = 4;
  runs.push_back({"identities", id});
  ExperimentConfig co = corrector(2);
  co.lattice_N = {16, 32};
  co.N = {4, 8};
  runs.push_back({"corrector", co});
  ExperimentConfig di = dissipation();
  di.max_mode = 8;
  di.ensemble = 4;
  di.horizon = 0.2;
  runs.push_back({"dissipation", di});
  ExperimentConfig bl = blowup();
  bl.ensemble = 3;
  bl.horizon = 1.0;
  bl.L = 1e3;
  bl.r0 = 100.0;
  bl.kappa = {0.1};
  bl.N = {8};
  runs.push_back({"blowup", bl});
  for (auto& [name, c] : runs) {
    std::vector<std::vector<std::pair<std::string, std::string>>> files;
    for (int rep = 0; rep < 2; ++rep) {
      c.out = (g_work / ("repro_" + name + "_" + std::to_string(rep))).string();
      fs::remove_all(c.out);
      c.threads = 1 + rep;
      run_experiment(c);
      files.push_back(csv_files(c.out));
    }
    const bool same = !files[0].empty() && files[0] == files[1];
    o.pass = o.pass && same;
    o.lines.push_back(std::string(same ? "pass " : "FAIL ") + name + ": " + std::to_string(files[0].size()) +
                      " CSV files " + (same ? "byte-identical" : "differ") + " across two runs");
  }
  return o;
}

const std::map<int, std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<std::string, std::function<Outcome()>>> m = {
      {1, {"covariance identity", [] { return select(run_cached(identities(), "identities"), {"covariance"}); }}},
      {2, {"no-projection corrector", [] { return select(run_cached(identities(), "identities"), {"no_projection"}); }}},
      {3, {"route equivalence", [] { return select(run_cached(identities(), "identities"), {"route_equivalence"}); }}},
      {4, {"corrector energy identity", [] { return select(run_cached(identities(), "identities"), {"energy_identity"}); }}},
      {5, {"lattice-sum limits",
           [] {
             return merge(select(run_cached(corrector(2), "corrector_2d"), {"lattice_"}),
                          select(run_cached(corrector(3), "corrector_3d"), {"lattice_"}));
           }}},
      {6, {"corrector convergence per doubling",
           [] {
             return merge(select(run_cached(corrector(2), "corrector_2d"), {"convergence_ratio"}),
                          select(run_cached(corrector(3), "corrector_3d"), {"convergence_ratio"}));
           }}},
      {7, {"difference-sum bound", [] { return select(run_cached(corrector(2), "corrector_2d"), {"difference_bound"}); }}},
      {8, {"Riemann-sum constant stability",
           [] { return select(run_cached(corrector(2), "corrector_2d"), {"normalization_constant"}); }}},
      {9, {"2D baseline decay", [] { return select(run_cached(baseline(), "baseline_2d"), {"baseline_decay", "fits"}); }}},
      {10, {"2D enhanced dissipation",
            [] { return select(run_cached(dissipation(), "dissipation_2d"), {"enhancement", "rate_increase", "fits"}); }}},
      {11, {"2D energy balance", [] { return select(run_cached(dissipation(), "dissipation_2d"), {"energy_balance"}); }}},
      {12, {"3D enhanced-viscosity limit decay", limit_decay}},
      {13, {"3D cut-off energy bound", cutoff_bound}},
      {14, {"3D blow-up frequency trends",
            [] { return select(run_cached(blowup(), "blowup_3d"), {"non_increasing_in_kappa", "non_increasing_in_N"}); }}},
      {15, {"reproducibility", reproducibility}},
  };
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria, one PASS/FAIL line each"};
  std::vector<int> selected;
  std::string work = g_work.string();
  bool verbose = true;
  app.add_option("-c,--criterion", selected, "criteria to run (default all)")->check(CLI::Range(1, 15));
  app.add_option("--work", work, "scratch directory for experiment outputs");
  app.add_option("--threads", g_threads, "worker threads, 0 for all cores");
  app.add_flag("!--brief", verbose, "omit the per-check lines");
  CLI11_PARSE(app, argc, argv);
  g_work = work;
  fs::create_directories(g_work);
  if (selected.empty())
    for (const auto& [k, v] : criteria()) selected.push_back(k);
  bool all = true;
  for (int k : selected) {
    const auto& [name, fn] = criteria().at(k);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("CRITERION %2d %s  %s  (%.1f s)\n", k, o.pass ? "PASS" : "FAIL", name.c_str(), secs);
    if (verbose)
      for (const auto& l : o.lines) std::printf("    %s\n", l.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
