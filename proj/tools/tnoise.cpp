#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tnoise/calibration.hpp"
#include "tnoise/experiment.hpp"
#include "tnoise/plot.hpp"

using namespace tnoise;

namespace {

struct RunFlags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::vector<std::string> sets;
  int threads = -1;
  bool plots = false;
  bool quiet = false;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config, "TOML configuration file")->check(CLI::ExistingFile);
  app->add_option_function<std::uint64_t>(
      "--seed", [&f](const std::uint64_t& s) { f.seed = s, f.seed_set = true; }, "master seed");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--set", f.sets, "override, key=value (TOML value syntax)")->take_all();
  app->add_option("--threads", f.threads, "worker threads, 0 for all cores");
  app->add_flag("--plots", f.plots, "write SVG plots into <out>/plots");
  app->add_flag("-q,--quiet", f.quiet, "no progress output");
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError({"cannot read " + path});
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run(ExperimentKind kind, const RunFlags& f) {
  ExperimentConfig c = default_config(kind);
  try {
    if (!f.config.empty()) apply_toml(c, read_file(f.config), f.config);
    for (const auto& s : f.sets) apply_override(c, s);
    if (f.seed_set) c.seed = f.seed;
    if (!f.out.empty()) c.out = f.out;
    if (f.threads >= 0) c.threads = f.threads;
    if (c.kind != kind) throw ConfigError({"config kind '" + to_string(c.kind) + "' does not match the subcommand"});
    const auto problems = validate(c);
    if (!problems.empty()) throw ConfigError(problems);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  ProgressFn progress;
  if (!f.quiet) progress = [](const std::string& s) { std::cerr << "[progress] " << s << '\n'; };
  ExperimentReport r;
  try {
    r = run_experiment(c, progress);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  for (const Check& k : r.checks)
    std::printf("%s  %s  value=%.6g threshold=%.6g  %s\n", k.pass ? "PASS" : "FAIL", k.name.c_str(), k.value, k.threshold,
                k.detail.c_str());
  std::printf("%s: %zu checks, %s, %.1f s, output in %s\n", to_string(c.kind).c_str(), r.checks.size(),
              r.all_pass() ? "all pass" : "some FAIL", r.runtime_seconds, c.out.c_str());
  if (f.plots) {
    PlotOutcome p = plot_all(c.out, c.out + "/plots");
    for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& w : p.written) std::printf("plot %s\n", w.c_str());
  }
  return r.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport-noise Navier-Stokes experiments"};
  app.require_subcommand(1);

  RunFlags corr, diss, blow, iden;
  add_run_flags(app.add_subcommand("corrector", "corrector and lattice-sum convergence tables"), corr);
  add_run_flags(app.add_subcommand("dissipate2d", "2D enhanced dissipation ensemble"), diss);
  add_run_flags(app.add_subcommand("blowup3d", "3D surrogate blow-up frequencies"), blow);
  add_run_flags(app.add_subcommand("identities", "exact noise and corrector identities"), iden);

  std::string plot_in, plot_out;
  auto* plot = app.add_subcommand("plot", "SVG plots from a finished run");
  plot->add_option("--in", plot_in, "run directory")->required();
  plot->add_option("--out", plot_out, "plot directory (default <in>/plots)");

  auto* cal = app.add_subcommand("calibrate", "empirical constants of the 3D experiments");
  cal->require_subcommand(1);
  CalibrationOptions co;
  double lo = 100, hi = 1e5;
  auto* cal_r0 = cal->add_subcommand("r0", "largest size with monotone unit-viscosity decay");
  cal_r0->add_option("--max-mode", co.max_mode);
  cal_r0->add_option("--lo", lo);
  cal_r0->add_option("--hi", hi);
  std::vector<double> sizes{2000, 4000, 8000};
  auto* cal_c1 = cal->add_subcommand("limit", "constant of the enhanced-viscosity limit");
  cal_c1->add_option("--max-mode", co.max_mode);
  cal_c1->add_option("--sizes", sizes);
  for (auto* s : {cal_r0, cal_c1}) {
    s->add_option("--family", co.family);
    s->add_option("--seed", co.seed);
    s->add_option("--radius", co.radius);
    s->add_option("--dt", co.dt);
    s->add_option("--horizon", co.horizon);
  }
  int pilots = 20;
  double pilot_size = 1.0, pilot_horizon = 0.5, pilot_kappa = 0.0;
  int pilot_N = 8;
  ExperimentConfig pc = default_config(ExperimentKind::blowup_3d);
  auto* cal_ca = cal->add_subcommand("cutoff", "constant of the cut-off energy bound");
  cal_ca->add_option("--trajectories", pilots);
  cal_ca->add_option("--size", pilot_size, "||xi_0||");
  cal_ca->add_option("--horizon", pilot_horizon);
  cal_ca->add_option("--kappa", pilot_kappa);
  cal_ca->add_option("--N", pilot_N);
  cal_ca->add_option("--L", pc.L);
  cal_ca->add_option("--max-mode", pc.max_mode);
  cal_ca->add_option("--dt", pc.dt);
  cal_ca->add_option("--seed", pc.seed);

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("corrector")) return run(ExperimentKind::corrector_convergence, corr);
  if (app.got_subcommand("dissipate2d")) return run(ExperimentKind::dissipation_2d, diss);
  if (app.got_subcommand("blowup3d")) return run(ExperimentKind::blowup_3d, blow);
  if (app.got_subcommand("identities")) return run(ExperimentKind::identity_suite, iden);
  if (plot->parsed()) {
    PlotOutcome p = plot_all(plot_in, plot_out.empty() ? plot_in + "/plots" : plot_out);
    for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& w : p.written) std::printf("plot %s\n", w.c_str());
    return p.written.empty() ? 1 : 0;
  }
  try {
    if (cal_r0->parsed()) {
      std::printf("r0 = %.6g\n", calibrate_small_data_radius(co, lo, hi));
    } else if (cal_c1->parsed()) {
      LimitCalibration c = calibrate_limit_constant(co, sizes);
      for (std::size_t i = 0; i < c.sizes.size(); ++i) std::printf("size %g kappa_min %.6g\n", c.sizes[i], c.kappa_min[i]);
      std::printf("C1 = %.6g\n", c.C1);
    } else if (cal_ca->parsed()) {
      pc.kappa = {pilot_kappa};
      pc.N = {pilot_N};
      pc.out = "-";
      ExperimentConfig x = pc;
      SolverOptions o;
      o.dim = 3;
      o.max_mode = x.max_mode;
      o.viscosity = x.viscosity;
      o.kappa = pilot_kappa;
      o.dt = x.dt;
      o.truncation = Truncation::ito;
      o.theta = ThetaSequence::annulus(pilot_N, x.gamma, 3);
      o.cutoff = CutoffFunction{x.cutoff_radius()};
      o.alpha = x.alpha;
      o.dissipation_resolution = 0.0;
      CutoffConstantFit fit = fit_cutoff_constant(o, x.seed, pilots, x.init_radius, pilot_size, pilot_horizon);
      for (const auto& s : fit.samples)
        std::printf("lhs %.6e initial %.6e scale %.6e fitted %.6e engaged %d\n", s.lhs, s.initial, s.scale, s.fitted(),
                    s.engaged ? 1 : 0);
      std::printf("C_alpha = %.6g\n", fit.C_alpha);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
