#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tnoise/experiment.hpp"
#include "tnoise/plot.hpp"

using namespace tnoise;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tnoise_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  for (auto k : {ExperimentKind::corrector_convergence, ExperimentKind::dissipation_2d, ExperimentKind::blowup_3d,
                 ExperimentKind::identity_suite}) {
    EXPECT_TRUE(validate(default_config(k)).empty()) << to_string(k);
    EXPECT_EQ(parse_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_kind("nope"), std::invalid_argument);
}

TEST(Config, TomlAndOverrides) {
  ExperimentConfig c = default_config(ExperimentKind::dissipation_2d);
  apply_toml(c, "max_mode = 16\nkappa = [0.0, 0.5]\nscheme = \"eem\"\nseed = 9\n", "cfg");
  EXPECT_EQ(c.max_mode, 16);
  EXPECT_EQ(c.kappa, (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(c.scheme, "eem");
  EXPECT_EQ(c.seed, 9u);
  apply_override(c, "N=[8,16]");
  apply_override(c, "truncation=ito");
  apply_override(c, "dt = 0.002");
  apply_override(c, "kappa=2");
  EXPECT_EQ(c.N, (std::vector<int>{8, 16}));
  EXPECT_EQ(c.truncation, "ito");
  EXPECT_DOUBLE_EQ(c.dt, 0.002);
  EXPECT_EQ(c.kappa, (std::vector<double>{2.0}));
}

TEST(Config, ErrorsAreCollected) {
  ExperimentConfig c = default_config(ExperimentKind::dissipation_2d);
  try {
    apply_toml(c, "bogus = 1\nmax_mode = \"x\"\n", "cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 2u);
  }
  EXPECT_THROW(apply_toml(c, "max_mode = = 3", "cfg"), ConfigError);
  EXPECT_THROW(apply_override(c, "max_mode"), ConfigError);
  EXPECT_THROW(apply_override(c, "seed=-1"), ConfigError);

  c.dim = 4;
  c.ensemble = 0;
  c.dt = -1.0;
  c.scheme = "rk4";
  EXPECT_GE(validate(c).size(), 4u);
  c.out = scratch("invalid").string();
  EXPECT_THROW(run_experiment(c), ConfigError);
  EXPECT_FALSE(fs::exists(c.out));
}

TEST(Config, BlowupValidation) {
  ExperimentConfig c = default_config(ExperimentKind::blowup_3d);
  c.r0 = 10 * c.L;
  c.alpha = 0.7;
  c.horizon = 0.5;
  EXPECT_EQ(validate(c).size(), 3u);
}

TEST(Config, EchoCoversEveryKey) {
  const ExperimentConfig c = default_config(ExperimentKind::blowup_3d);
  const nlohmann::json j = config_to_json(c);
  for (const char* key :
       {"kind", "dim", "max_mode", "dt", "horizon", "viscosity", "kappa", "N", "gamma", "alpha", "L", "R", "r0", "ensemble",
        "seed", "scheme", "truncation", "init_radius", "sample_every", "ceiling_factor", "early_exit_fraction",
        "confidence", "min_enhancement", "enhancement_kappa", "energy_tolerance", "decay_slack", "alphas", "lattice_N",
        "lattice_tolerance", "slope_band", "ratio_band", "field_modes", "random_fields"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["R"], 2 * c.L);
  EXPECT_EQ(j["truncation"], "ito");
}

TEST(ParallelFor, CoversIndicesAndRethrows) {
  std::vector<std::atomic<int>> hits(37);
  parallel_for(37, 4, [&](int i, int w) {
    EXPECT_LT(w, 4);
    ++hits[i];
  });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(5, 2, [](int i, int) {
                 if (i == 3) throw std::runtime_error("x");
               }),
               std::runtime_error);
}

TEST(Experiment, IdentitySuiteSmall) {
  ExperimentConfig c = default_config(ExperimentKind::identity_suite);
  c.random_fields = 2;
  c.max_mode = 3;
  c.out = scratch("identities").string();
  ExperimentReport r = run_experiment(c);
  EXPECT_TRUE(r.all_pass());
  EXPECT_EQ(r.checks.size(), 4u);
  const auto summary = nlohmann::json::parse(slurp(fs::path(c.out) / "summary.json"));
  EXPECT_FALSE(summary.contains("runtime_seconds"));
  EXPECT_TRUE(summary["pass"].get<bool>());
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "runtime.json"));
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "identities.csv"));
}

TEST(Experiment, DissipationReproducibleAcrossThreads) {
  ExperimentConfig c = default_config(ExperimentKind::dissipation_2d);
  c.max_mode = 6;
  c.ensemble = 3;
  c.kappa = {0.0, 1.0};
  c.N = {4};
  c.horizon = 0.1;
  std::vector<std::string> out;
  for (int threads : {1, 3}) {
    c.threads = threads;
    c.out = scratch("repro" + std::to_string(threads)).string();
    ExperimentReport r = run_experiment(c);
    ASSERT_FALSE(r.tables.empty());
    std::string all;
    for (const auto& t : r.tables) all += slurp(fs::path(c.out) / t);
    all += slurp(fs::path(c.out) / "summary.json");
    out.push_back(all);
  }
  EXPECT_EQ(out[0], out[1]);
  const std::string traj = slurp(fs::path(c.out) / "traj_kappa1_N4.csv");
  EXPECT_EQ(traj.substr(0, traj.find('\n')), "traj,t,l2,grad_l2,h_minus_alpha,flags");
}

TEST(Experiment, BlowupReportsCaveatAndIntervals) {
  ExperimentConfig c = default_config(ExperimentKind::blowup_3d);
  c.max_mode = 3;
  c.ensemble = 2;
  c.kappa = {0.1, 0.4};
  c.N = {2};
  c.L = 1.0;
  c.r0 = 0.5;
  c.horizon = 1.0;
  c.dt = 0.02;
  c.out = scratch("blowup").string();
  ExperimentReport r = run_experiment(c);
  EXPECT_TRUE(r.summary.contains("caveat"));
  const CsvTable f = read_csv((fs::path(c.out) / "frequencies.csv").string());
  ASSERT_EQ(f.rows.size(), 2u);
  EXPECT_GE(f.column("wilson_lo"), 0);
  EXPECT_EQ(f.rows[0][f.column("ensemble")], "2");
  int trends = 0;
  for (const auto& k : r.checks) trends += k.name.rfind("non_increasing_in_kappa", 0) == 0;
  EXPECT_EQ(trends, 1);
}

TEST(Plot, SyntheticInverseRate) {
  const fs::path dir = scratch("plot");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "convergence.csv");
    os << "d,field_id,N,gamma,alpha,value,target,deviation,fitted_rate\n";
    for (int N : {8, 16, 32, 64, 128}) os << "2,v," << N << ",1,1," << 1.0 / N << ",0," << 1.0 / N << ",1\n";
  }
  PlotOutcome p = plot_corrector(dir.string(), (dir / "plots").string());
  ASSERT_EQ(p.written.size(), 1u);
  ASSERT_EQ(p.fitted_slopes.size(), 1u);
  EXPECT_NEAR(p.fitted_slopes[0], -1.0, 0.01);
  EXPECT_NE(slurp(p.written[0]).find("fitted slope -1.00"), std::string::npos);
  EXPECT_NE(slurp(p.written[0]).find("reference slope -1.00"), std::string::npos);
}

TEST(Plot, MissingAndEmptyTablesWarn) {
  const fs::path dir = scratch("plot_empty");
  fs::create_directories(dir);
  PlotOutcome missing = plot_blowup(dir.string(), (dir / "plots").string());
  EXPECT_TRUE(missing.written.empty());
  EXPECT_EQ(missing.warnings.size(), 1u);
  std::ofstream(dir / "frequencies.csv") << "kappa,N,ensemble,events,frequency,wilson_lo,wilson_hi\n";
  PlotOutcome empty = plot_blowup(dir.string(), (dir / "plots").string());
  EXPECT_TRUE(empty.written.empty());
  ASSERT_EQ(empty.warnings.size(), 1u);
  EXPECT_NE(empty.warnings[0].find("empty"), std::string::npos);
}

TEST(Plot, DissipationCurvePerKappa) {
  ExperimentConfig c = default_config(ExperimentKind::dissipation_2d);
  c.max_mode = 6;
  c.ensemble = 2;
  c.kappa = {0.0, 0.5, 1.0};
  c.N = {4};
  c.horizon = 0.1;
  c.out = scratch("plot_diss").string();
  run_experiment(c);
  PlotOutcome p = plot_all(c.out, c.out + "/plots");
  ASSERT_EQ(p.written.size(), 1u);
  const std::string svg = slurp(p.written[0]);
  std::size_t curves = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++curves;
  EXPECT_EQ(curves, 3u);
}

TEST(Csv, QuotedCells) {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  std::ofstream(dir / "t.csv") << "a,b\n1,\"x, y\"\n";
  CsvTable t = read_csv((dir / "t.csv").string());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][1], "x, y");
  EXPECT_EQ(t.numbers("a")[0], 1.0);
  EXPECT_EQ(t.column("zz"), -1);
}

TEST(Config, ShippedConfigsValidate) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(TNOISE_CONFIG_DIR)) {
    if (e.path().extension() != ".toml") continue;
    const std::string text = slurp(e.path());
    ExperimentConfig probe;
    apply_toml(probe, text, e.path().string());
    ExperimentConfig c = default_config(probe.kind);
    apply_toml(c, text, e.path().string());
    EXPECT_TRUE(validate(c).empty()) << e.path();
    ++n;
  }
  EXPECT_GE(n, 6);
}
