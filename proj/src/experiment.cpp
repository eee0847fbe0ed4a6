#include "tnoise/experiment.hpp"

#include <toml.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "tnoise/calibration.hpp"
#include "tnoise/corrector.hpp"
#include "tnoise/io.hpp"
#include "tnoise/operators.hpp"
#include "tnoise/random_fields.hpp"
#include "tnoise/solver.hpp"
#include "tnoise/statistics.hpp"

namespace tnoise {

namespace fs = std::filesystem;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::corrector_convergence: return "corrector-convergence";
    case ExperimentKind::dissipation_2d: return "dissipation-2d";
    case ExperimentKind::blowup_3d: return "blowup-3d";
    case ExperimentKind::identity_suite: return "identity-suite";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::corrector_convergence, ExperimentKind::dissipation_2d, ExperimentKind::blowup_3d,
                 ExperimentKind::identity_suite})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown kind '" + s + "'");
}

namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::runtime_error("invalid configuration:\n  " + join(problems, "\n  ")), problems_(problems) {}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::identity_suite:
      c.dim = 2;
      c.max_mode = 4;
      c.kappa = {0.5, 1.0, 3.0};
      c.N = {1, 2, 4, 8};
      c.alphas = {};
      break;
    case ExperimentKind::corrector_convergence:
      c.dim = 2;
      c.kappa = {1.0};
      c.N = {8, 16, 32, 64};
      break;
    case ExperimentKind::dissipation_2d:
      c.dim = 2;
      c.max_mode = 32;
      c.ensemble = 50;
      break;
    case ExperimentKind::blowup_3d:
      c.dim = 3;
      c.max_mode = 5;
      c.dt = 5e-4;
      c.viscosity = 1.0;
      c.kappa = {0.1, 0.4};
      c.N = {8, 16};
      c.L = 1e5;
      c.r0 = 1282.0;
      c.horizon = 0.0;
      c.ensemble = 100;
      c.init_radius = 2.0;
      break;
  }
  return c;
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const toml::node&)>;

double as_double(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) return *v;
  throw std::invalid_argument(key + ": expected a number");
}

long long as_int(const toml::node& n, const std::string& key) {
  if (n.is_integer()) return *n.value<long long>();
  if (auto v = n.value<double>(); v && std::floor(*v) == *v) return static_cast<long long>(*v);
  throw std::invalid_argument(key + ": expected an integer");
}

std::string as_string(const toml::node& n, const std::string& key) {
  if (auto v = n.value<std::string>()) return *v;
  throw std::invalid_argument(key + ": expected a string");
}

template <class T, class F>
std::vector<T> as_list(const toml::node& n, const std::string& key, F conv) {
  std::vector<T> out;
  if (const toml::array* a = n.as_array()) {
    for (const toml::node& e : *a) out.push_back(static_cast<T>(conv(e, key)));
  } else {
    out.push_back(static_cast<T>(conv(n, key)));
  }
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"kind", [](ExperimentConfig& c, const toml::node& n) { c.kind = parse_kind(as_string(n, "kind")); }},
      {"dim", [](ExperimentConfig& c, const toml::node& n) { c.dim = static_cast<int>(as_int(n, "dim")); }},
      {"max_mode", [](ExperimentConfig& c, const toml::node& n) { c.max_mode = static_cast<int>(as_int(n, "max_mode")); }},
      {"dt", [](ExperimentConfig& c, const toml::node& n) { c.dt = as_double(n, "dt"); }},
      {"horizon", [](ExperimentConfig& c, const toml::node& n) { c.horizon = as_double(n, "horizon"); }},
      {"viscosity", [](ExperimentConfig& c, const toml::node& n) { c.viscosity = as_double(n, "viscosity"); }},
      {"kappa", [](ExperimentConfig& c, const toml::node& n) { c.kappa = as_list<double>(n, "kappa", as_double); }},
      {"N", [](ExperimentConfig& c, const toml::node& n) { c.N = as_list<int>(n, "N", as_int); }},
      {"gamma", [](ExperimentConfig& c, const toml::node& n) { c.gamma = as_double(n, "gamma"); }},
      {"alpha", [](ExperimentConfig& c, const toml::node& n) { c.alpha = as_double(n, "alpha"); }},
      {"L", [](ExperimentConfig& c, const toml::node& n) { c.L = as_double(n, "L"); }},
      {"R", [](ExperimentConfig& c, const toml::node& n) { c.R = as_double(n, "R"); }},
      {"r0", [](ExperimentConfig& c, const toml::node& n) { c.r0 = as_double(n, "r0"); }},
      {"ensemble", [](ExperimentConfig& c, const toml::node& n) { c.ensemble = static_cast<int>(as_int(n, "ensemble")); }},
      {"seed", [](ExperimentConfig& c, const toml::node& n) {
         const long long s = as_int(n, "seed");
         if (s < 0) throw std::invalid_argument("seed: must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"out", [](ExperimentConfig& c, const toml::node& n) { c.out = as_string(n, "out"); }},
      {"threads", [](ExperimentConfig& c, const toml::node& n) { c.threads = static_cast<int>(as_int(n, "threads")); }},
      {"scheme", [](ExperimentConfig& c, const toml::node& n) { c.scheme = as_string(n, "scheme"); }},
      {"truncation", [](ExperimentConfig& c, const toml::node& n) { c.truncation = as_string(n, "truncation"); }},
      {"init_radius", [](ExperimentConfig& c, const toml::node& n) { c.init_radius = as_double(n, "init_radius"); }},
      {"sample_every", [](ExperimentConfig& c, const toml::node& n) { c.sample_every = static_cast<int>(as_int(n, "sample_every")); }},
      {"ceiling_factor", [](ExperimentConfig& c, const toml::node& n) { c.ceiling_factor = as_double(n, "ceiling_factor"); }},
      {"early_exit_fraction", [](ExperimentConfig& c, const toml::node& n) { c.early_exit_fraction = as_double(n, "early_exit_fraction"); }},
      {"confidence", [](ExperimentConfig& c, const toml::node& n) { c.confidence = as_double(n, "confidence"); }},
      {"min_enhancement", [](ExperimentConfig& c, const toml::node& n) { c.min_enhancement = as_double(n, "min_enhancement"); }},
      {"enhancement_kappa", [](ExperimentConfig& c, const toml::node& n) { c.enhancement_kappa = as_double(n, "enhancement_kappa"); }},
      {"energy_tolerance", [](ExperimentConfig& c, const toml::node& n) { c.energy_tolerance = as_double(n, "energy_tolerance"); }},
      {"decay_slack", [](ExperimentConfig& c, const toml::node& n) { c.decay_slack = as_double(n, "decay_slack"); }},
      {"alphas", [](ExperimentConfig& c, const toml::node& n) { c.alphas = as_list<double>(n, "alphas", as_double); }},
      {"lattice_N", [](ExperimentConfig& c, const toml::node& n) { c.lattice_N = as_list<int>(n, "lattice_N", as_int); }},
      {"lattice_tolerance", [](ExperimentConfig& c, const toml::node& n) { c.lattice_tolerance = as_double(n, "lattice_tolerance"); }},
      {"slope_lo", [](ExperimentConfig& c, const toml::node& n) { c.slope_lo = as_double(n, "slope_lo"); }},
      {"slope_hi", [](ExperimentConfig& c, const toml::node& n) { c.slope_hi = as_double(n, "slope_hi"); }},
      {"ratio_lo", [](ExperimentConfig& c, const toml::node& n) { c.ratio_lo = as_double(n, "ratio_lo"); }},
      {"ratio_hi", [](ExperimentConfig& c, const toml::node& n) { c.ratio_hi = as_double(n, "ratio_hi"); }},
      {"field_modes", [](ExperimentConfig& c, const toml::node& n) { c.field_modes = static_cast<int>(as_int(n, "field_modes")); }},
      {"random_fields", [](ExperimentConfig& c, const toml::node& n) { c.random_fields = static_cast<int>(as_int(n, "random_fields")); }},
  };
  return m;
}

}  // namespace

void apply_toml(ExperimentConfig& c, const std::string& toml_text, const std::string& origin) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError({os.str()});
  }
  std::vector<std::string> problems;
  // kind first so later keys see the right dimension defaults
  for (auto&& [k, v] : tbl) {
    const std::string key(k.str());
    auto it = setters().find(key);
    if (it == setters().end()) {
      problems.push_back(origin + ": unknown key '" + key + "'");
      continue;
    }
    try {
      it->second(c, v);
    } catch (const std::exception& e) {
      problems.push_back(origin + ": " + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
}

void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError({"--set '" + assignment + "': expected key=value"});
  std::string key = assignment.substr(0, eq), value = assignment.substr(eq + 1);
  key.erase(key.find_last_not_of(" \t") + 1);
  // bare words are taken as strings
  toml::table probe;
  try {
    probe = toml::parse(key + " = " + value);
  } catch (const toml::parse_error&) {
    value = "\"" + value + "\"";
  }
  apply_toml(c, key + " = " + value, "--set " + key);
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> p;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) p.push_back(std::string(name) + " must be positive");
  };
  if (c.dim != 2 && c.dim != 3) p.push_back("dim must be 2 or 3");
  if (c.max_mode < 1) p.push_back("max_mode must be >= 1");
  if (c.kind != ExperimentKind::identity_suite) {
    if (c.kappa.empty()) p.push_back("kappa grid is empty");
    if (c.N.empty()) p.push_back("N grid is empty");
  }
  for (double k : c.kappa)
    if (!(k >= 0.0) || !std::isfinite(k)) p.push_back("kappa values must be >= 0");
  for (int n : c.N)
    if (n < 1) p.push_back("N values must be >= 1");
  positive(c.gamma, "gamma");
  if (c.ensemble < 1) p.push_back("ensemble must be >= 1");
  if (c.threads < 0) p.push_back("threads must be >= 0");
  if (!(c.confidence > 0.5 && c.confidence < 1.0)) p.push_back("confidence must lie in (0.5, 1)");
  try {
    parse_scheme(c.scheme);
  } catch (const std::exception& e) {
    p.push_back(e.what());
  }
  try {
    parse_truncation(c.effective_truncation());
  } catch (const std::exception& e) {
    p.push_back(e.what());
  }
  switch (c.kind) {
    case ExperimentKind::dissipation_2d:
      if (c.dim != 2) p.push_back("dissipation-2d needs dim = 2");
      positive(c.dt, "dt");
      positive(c.horizon, "horizon");
      positive(c.viscosity, "viscosity");
      positive(c.init_radius, "init_radius");
      if (c.sample_every < 1) p.push_back("sample_every must be >= 1");
      if (c.horizon > 0.0 && c.dt > 0.0 && c.horizon / (c.dt * std::max(1, c.sample_every)) < 9.5)
        p.push_back("horizon / (dt * sample_every) must give at least 10 samples for the decay fit");
      positive(c.decay_slack, "decay_slack");
      positive(c.energy_tolerance, "energy_tolerance");
      break;
    case ExperimentKind::blowup_3d:
      if (c.dim != 3) p.push_back("blowup-3d needs dim = 3");
      positive(c.dt, "dt");
      positive(c.viscosity, "viscosity");
      positive(c.L, "L");
      positive(c.r0, "r0");
      positive(c.init_radius, "init_radius");
      if (!(c.alpha > 0.0 && c.alpha < 0.5)) p.push_back("alpha must lie in (0, 1/2)");
      if (c.R < 0.0) p.push_back("R must be >= 0 (0 selects 2L)");
      if (c.L > 0.0 && c.r0 > 0.0 && 1.0 + std::log(2.0 * c.L / c.r0) < 1.0)
        p.push_back("horizon 1 + log(2L/r0) is shorter than 1; need r0 <= 2L");
      if (c.horizon < 0.0 || (c.horizon > 0.0 && c.horizon < 1.0))
        p.push_back("horizon must be 0 (selects 1 + log(2L/r0)) or at least 1");
      if (!(c.ceiling_factor > 1.0)) p.push_back("ceiling_factor must exceed 1");
      if (!(c.early_exit_fraction >= 0.0 && c.early_exit_fraction < 1.0))
        p.push_back("early_exit_fraction must lie in [0, 1)");
      if (c.sample_every < 1) p.push_back("sample_every must be >= 1");
      break;
    case ExperimentKind::corrector_convergence:
      if (c.alphas.empty()) p.push_back("alphas is empty");
      for (double a : c.alphas)
        if (!(a >= 0.0 && a <= 1.0)) p.push_back("alphas must lie in [0, 1]");
      if (!std::is_sorted(c.N.begin(), c.N.end()) || std::adjacent_find(c.N.begin(), c.N.end()) != c.N.end())
        p.push_back("N grid must be strictly increasing");
      if (c.lattice_N.empty()) p.push_back("lattice_N is empty");
      for (int n : c.lattice_N)
        if (n < 1) p.push_back("lattice_N values must be >= 1");
      if (c.field_modes < 1) p.push_back("field_modes must be >= 1");
      if (c.kappa.size() != 1) p.push_back("corrector-convergence takes a single kappa");
      break;
    case ExperimentKind::identity_suite:
      if (c.random_fields < 1) p.push_back("random_fields must be >= 1");
      if (c.kappa.empty()) p.push_back("kappa grid is empty");
      if (c.N.empty()) p.push_back("N grid is empty");
      break;
  }
  if (c.out.empty()) p.push_back("out must name a directory");
  return p;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"dim", c.dim},
          {"max_mode", c.max_mode},
          {"dt", c.dt},
          {"horizon", c.horizon},
          {"viscosity", c.viscosity},
          {"kappa", c.kappa},
          {"N", c.N},
          {"gamma", c.gamma},
          {"alpha", c.alpha},
          {"L", c.L},
          {"R", c.cutoff_radius()},
          {"r0", c.r0},
          {"ensemble", c.ensemble},
          {"seed", c.seed},
          {"scheme", c.scheme},
          {"truncation", c.effective_truncation()},
          {"init_radius", c.init_radius},
          {"sample_every", c.sample_every},
          {"ceiling_factor", c.ceiling_factor},
          {"early_exit_fraction", c.early_exit_fraction},
          {"confidence", c.confidence},
          {"min_enhancement", c.min_enhancement},
          {"enhancement_kappa", c.enhancement_kappa},
          {"energy_tolerance", c.energy_tolerance},
          {"decay_slack", c.decay_slack},
          {"alphas", c.alphas},
          {"lattice_N", c.lattice_N},
          {"lattice_tolerance", c.lattice_tolerance},
          {"slope_band", {c.slope_lo, c.slope_hi}},
          {"ratio_band", {c.ratio_lo, c.ratio_hi}},
          {"field_modes", c.field_modes},
          {"random_fields", c.random_fields}};
}

bool ExperimentReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::json ExperimentReport::to_json(const ExperimentConfig& c) const {
  nlohmann::json checks_json = nlohmann::json::array();
  for (const Check& k : checks)
    checks_json.push_back(
        {{"name", k.name}, {"pass", k.pass}, {"value", k.value}, {"threshold", k.threshold}, {"detail", k.detail}});
  return {{"config", config_to_json(c)}, {"tables", tables}, {"summary", summary},
          {"checks", checks_json},       {"pass", all_pass()}, {"seed", c.seed}};
}

void parallel_for(int n, int threads, const std::function<void(int, int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i, w);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string num_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const fs::path& dir, const std::string& name, const std::string& header, std::vector<std::string>& tables)
      : os_(dir / name) {
    if (!os_) throw std::runtime_error("cannot write " + (dir / name).string());
    os_ << header << '\n';
    tables.push_back(name);
  }
  void row(const std::vector<std::string>& cells) { os_ << join(cells, ",") << '\n'; }
  void raw(const std::string& line) { os_ << line << '\n'; }

 private:
  std::ofstream os_;
};

struct Context {
  const ExperimentConfig& c;
  fs::path dir;
  ExperimentReport& r;
  const ProgressFn& progress;
  std::mutex mu;
  void say(const std::string& s) {
    std::lock_guard<std::mutex> lock(mu);
    if (progress) progress(s);
  }
  void check(std::string name, bool pass, double value, double threshold, std::string detail = {}) {
    r.checks.push_back({std::move(name), pass, value, threshold, std::move(detail)});
  }
};

double rel(double a, double b) { return std::abs(a) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------- identity suite

void run_identities(Context& x) {
  const ExperimentConfig& c = x.c;
  CsvFile csv(x.dir, "identities.csv", "check,d,N,gamma,kappa,field,residual,tolerance,pass", x.r.tables);
  std::map<std::string, double> worst;
  std::map<std::string, bool> ok;
  auto record = [&](const std::string& name, int d, int N, double gamma, double kappa, int field, double res,
                    double tol) {
    const bool pass = res <= tol;
    csv.row({name, std::to_string(d), std::to_string(N), num_g(gamma), num_g(kappa), std::to_string(field), num(res),
             num_g(tol), pass ? "1" : "0"});
    worst[name] = std::max(worst[name], res);
    if (!ok.count(name)) ok[name] = true;
    ok[name] = ok[name] && pass;
  };
  for (int d : {2, 3}) {
    for (int N : c.N)
      for (double gamma : {0.5, 1.0, 2.0})
        for (double kappa : c.kappa) {
          ThetaSequence th = ThetaSequence::annulus(N, gamma, d);
          Mat3 q = covariance_at_origin(th, NoiseBasis(d), kappa);
          double res = 0.0;
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) res = std::max(res, std::abs(q[i][j] - (i == j ? 2 * kappa : 0.0)));
          record("covariance", d, N, gamma, kappa, -1, res / (2 * kappa), 1e-12);
        }
    x.say("identities: covariance d=" + std::to_string(d));
    NoiseBasis basis(d);
    const double kappa = c.kappa.front();
    const int M = c.max_mode;
    for (int f = 0; f < c.random_fields; ++f) {
      SpectralField v = random_solenoidal(d, M, derive_seed(c.seed, 100 * d + f), 0.0, 1.0);
      const int N = 1 << (f % 3);
      ThetaSequence th = ThetaSequence::annulus(N, c.gamma, d);
      SpectralField np = corrector_no_projection(v, th, kappa, basis);
      SpectralField lap = laplacian(v);
      lap *= kappa;
      record("no_projection", d, N, c.gamma, kappa, f, rel(l2_norm(np - lap), l2_norm(lap)), 1e-12);
      const double diss = noise_dissipation(v, th, kappa, basis);
      const double e = inner(v, corrector_closed_form(v, th, kappa, basis)) + diss;
      record("energy_identity", d, N, c.gamma, kappa, f, rel(e, diss), 1e-10);
    }
    for (int N : {1, 2}) {
      SpectralField v = random_solenoidal(d, M, derive_seed(c.seed, 7000 + 10 * d + N), 0.0, 1.0);
      ThetaSequence th = ThetaSequence::annulus(N, c.gamma, d);
      SpectralField comp = corrector_compositional(v, th, kappa, basis);
      SpectralField closed = corrector_closed_form(v, th, kappa, basis);
      record("route_equivalence", d, N, c.gamma, kappa, -1, rel(l2_norm(closed - comp), l2_norm(comp)), 1e-11);
    }
    x.say("identities: operators d=" + std::to_string(d));
  }
  const std::map<std::string, double> tol = {
      {"covariance", 1e-12}, {"no_projection", 1e-12}, {"energy_identity", 1e-10}, {"route_equivalence", 1e-11}};
  for (const auto& [name, w] : worst) {
    x.r.summary["max_residual"][name] = w;
    x.check(name, ok[name], w, tol.at(name), "max relative residual");
  }
}

// ---------------------------------------------------------------- corrector convergence

void run_corrector(Context& x) {
  const ExperimentConfig& c = x.c;
  const int d = c.dim;
  NoiseBasis basis(d);
  const std::string header = "d,field_id,N,gamma,alpha,value,target,deviation,fitted_rate";
  CsvFile lat(x.dir, "lattice_sums.csv", header, x.r.tables);
  const Wave l{1, 0, 0};
  std::vector<std::pair<int, int>> entries{{0, 0}};
  if (d == 3) entries = {{0, 0}, {0, 1}};
  for (auto [i, j] : entries) {
    std::vector<LatticeSumRecord> recs;
    std::vector<double> xs, ys;
    for (int N : c.lattice_N) {
      recs.push_back(lattice_sum(l, N, c.gamma, d, i, j, basis));
      x.say("lattice sum N=" + std::to_string(N) + " entry " + std::to_string(i) + std::to_string(j));
      if (recs.back().deviation > 0.0) {
        xs.push_back(N);
        ys.push_back(recs.back().deviation);
      }
    }
    const double slope = xs.size() >= 2 ? loglog_slope(xs, ys) : std::nan("");
    std::string id = "l=" + to_string(l, d);
    if (d == 3) id += "[" + std::to_string(i) + std::to_string(j) + "]";
    for (const auto& r : recs)
      lat.row({std::to_string(d), id, std::to_string(r.N), num_g(c.gamma), "", num(r.value), num(r.target),
               num(r.deviation), num(slope)});
    const auto& last = recs.back();
    x.r.summary["lattice"][id] = {{"N", last.N}, {"value", last.value}, {"target", last.target},
                                  {"deviation", last.deviation}, {"slope", slope}};
    x.check("lattice_limit " + id, last.deviation <= c.lattice_tolerance, last.deviation, c.lattice_tolerance,
            "|value - target| at N=" + std::to_string(last.N));
    if (i == j)
      x.check("lattice_slope " + id, slope >= c.slope_lo && slope <= c.slope_hi, slope, c.slope_lo,
              "log-log slope of the deviation, band [" + num_g(c.slope_lo) + ", " + num_g(c.slope_hi) + "]");
  }

  if (d == 2) {
    CsvFile diff(x.dir, "difference_bound.csv", "d,l,N,gamma,value,bound,pass", x.r.tables);
    double worst = 0.0;
    for (int N : {16, 64, 256}) {
      ThetaSequence th = ThetaSequence::annulus(N, c.gamma, 2);
      for (int a = 0; a <= 8; ++a)
        for (int b = -8; b <= 8; ++b) {
          const Wave w{a, b, 0};
          if (norm2(w) == 0 || norm2(w) > 64 || !is_canonical(w)) continue;
          const double value = lattice_difference_sum(w, th);
          const double bound = 4.0 * std::sqrt(double(norm2(w))) / N;
          worst = std::max(worst, std::abs(value) / bound);
          diff.row({"2", to_string(w, 2), std::to_string(N), num_g(c.gamma), num(value), num(bound),
                    std::abs(value) <= bound ? "1" : "0"});
        }
      x.say("difference sums N=" + std::to_string(N));
    }
    x.r.summary["difference_bound_max_ratio"] = worst;
    x.check("difference_bound", worst <= 1.0, worst, 1.0, "max over |l| <= 8 of |sum| / (4|l|/N)");

    CsvFile norm(x.dir, "normalization_defect.csv", "gamma,N,defect,N_times_defect", x.r.tables);
    for (double gamma : {1.0, 2.0}) {
      double lo = 1e300, hi = 0.0;
      for (int N = 16; N <= 256; N *= 2) {
        const double defect = annulus_normalization_defect(N, gamma);
        norm.row({num_g(gamma), std::to_string(N), num(defect), num(N * defect)});
        lo = std::min(lo, N * defect);
        hi = std::max(hi, N * defect);
      }
      const double variation = lo > 0.0 ? hi / lo : INFINITY;
      x.r.summary["normalization_constant"]["gamma=" + num_g(gamma)] = {{"min", lo}, {"max", hi}};
      x.check("normalization_constant gamma=" + num_g(gamma), variation < 2.0, variation, 2.0,
              "max / min of N * defect over N in 16..256");
    }
  }

  CsvFile conv(x.dir, "convergence.csv", header, x.r.tables);
  SpectralField v = random_solenoidal(d, c.field_modes, derive_seed(c.seed, 1), 0.0, 1.0);
  v *= 1.0 / sobolev_norm(v, 1.0);
  for (double alpha : c.alphas) {
    ConvergenceTable t = convergence_table(d, alpha, c.gamma, c.kappa.front(), c.N, v, basis);
    x.say("convergence table alpha=" + num_g(alpha));
    double lo = 1e300, hi = 0.0;
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
      const auto& row = t.rows[k];
      conv.row({std::to_string(d), "v", std::to_string(row.N), num_g(row.gamma), num_g(row.alpha), num(row.deviation),
                num(0.0), num(row.deviation), num(t.fitted_rate)});
      if (k > 0) {
        const double ratio = t.rows[k - 1].deviation / row.deviation;
        ratios.push_back(ratio);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
    }
    const std::string key = "alpha=" + num_g(alpha);
    x.r.summary["convergence"][key] = {{"fitted_rate", t.fitted_rate}, {"ratios", ratios}};
    if (alpha > 0.0 && t.rows.size() >= 2) {
      const bool pass = lo >= c.ratio_lo && hi <= c.ratio_hi;
      x.check("convergence_ratio " + key, pass, pass ? lo : (lo < c.ratio_lo ? lo : hi), c.ratio_lo,
              "deviation ratio per doubling in [" + num_g(c.ratio_lo) + ", " + num_g(c.ratio_hi) + "], observed [" +
                  num_g(lo) + ", " + num_g(hi) + "]");
    }
  }
}

// ---------------------------------------------------------------- 2D dissipation

struct Trajectory2D {
  std::vector<TrajectoryRow> rows;
  DecayFit fit;
  bool fit_ok = false;
  double sup_growth = 0.0;
  double baseline_ratio = 0.0;
  double sum_change = 0.0;
  double sum_diss = 0.0;
  long long steps = 0;
  std::string error;
};

SolverOptions solver_options(const ExperimentConfig& c, double kappa, int N) {
  SolverOptions o;
  o.dim = c.dim;
  o.max_mode = c.max_mode;
  o.viscosity = c.viscosity;
  o.kappa = kappa;
  o.dt = c.dt;
  o.scheme = parse_scheme(c.scheme);
  o.truncation = parse_truncation(c.effective_truncation());
  o.alpha = c.alpha;
  o.theta = ThetaSequence::annulus(N, c.gamma, c.dim);
  if (c.dim == 3) {
    o.cutoff = CutoffFunction{c.cutoff_radius()};
    o.dissipation_resolution = 0.0;
  }
  return o;
}

Trajectory2D run_2d(Solver& s, const ExperimentConfig& c, int traj) {
  Trajectory2D out;
  SpectralField u0 = random_solenoidal(2, c.max_mode, derive_seed(c.seed, traj), c.init_radius, 1.0);
  BrownianDriver drv(2, derive_seed(c.seed, (1ULL << 32) + traj));
  SolverState st = s.initial_state(u0);
  const double n0 = l2_norm(st.u);
  const double floor_rate = 4 * kPi * kPi * c.viscosity;
  auto sample = [&] {
    TrajectoryRow r;
    r.t = st.t;
    r.l2 = l2_norm(st.u);
    r.grad = gradient_norm(st.u);
    out.baseline_ratio = std::max(out.baseline_ratio, r.l2 / (std::exp(-floor_rate * st.t) * n0));
    out.rows.push_back(r);
  };
  sample();
  const long long steps = std::llround(c.horizon / c.dt);
  try {
    for (long long n = 0; n < steps; ++n) {
      s.step(st, drv);
      out.sum_change += st.ledger.last_step_change;
      out.sum_diss += st.ledger.last_step_dissipation;
      ++out.steps;
      if ((n + 1) % c.sample_every == 0 || n + 1 == steps) sample();
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    out.rows.back().flags = "aborted";
  }
  std::vector<double> t, y;
  for (const auto& r : out.rows) {
    t.push_back(r.t);
    y.push_back(r.l2);
  }
  try {
    out.fit = decay_rate_fit(t, y);
    out.fit_ok = out.error.empty();
  } catch (const std::exception& e) {
    if (out.error.empty()) out.error = e.what();
  }
  if (out.fit_ok)
    for (const auto& r : out.rows) out.sup_growth = std::max(out.sup_growth, std::exp(out.fit.rate * r.t) * r.l2 / n0);
  return out;
}

void run_dissipation(Context& x) {
  const ExperimentConfig& c = x.c;
  std::vector<double> kappas = c.kappa;
  std::sort(kappas.begin(), kappas.end());
  CsvFile fits(x.dir, "fits.csv", "kappa,N,traj,rate,r2,samples,sup_growth,baseline_ratio,error", x.r.tables);
  CsvFile cells(x.dir, "cells.csv",
                "kappa,N,ensemble,median_rate,q10_rate,q90_rate,mean_step_change,mean_step_dissipation_term,"
                "energy_residual,growth_q50,growth_q90,max_baseline_ratio",
                x.r.tables);
  std::map<std::pair<double, int>, std::vector<double>> rates;
  for (int N : c.N)
    for (double kappa : kappas) {
      const SolverOptions opt = solver_options(c, kappa, N);
      std::vector<Trajectory2D> res(c.ensemble);
      const int threads = c.threads;
      std::vector<std::unique_ptr<Solver>> solvers(
          static_cast<std::size_t>(threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency())));
      std::atomic<int> done{0};
      parallel_for(c.ensemble, threads, [&](int i, int w) {
        if (!solvers[w]) solvers[w] = std::make_unique<Solver>(opt);
        res[i] = run_2d(*solvers[w], c, i);
        const int k = ++done;
        if (k % 10 == 0 || k == c.ensemble)
          x.say("dissipation kappa=" + num_g(kappa) + " N=" + std::to_string(N) + ": " + std::to_string(k) + "/" +
                std::to_string(c.ensemble));
      });
      const std::string cell = "kappa" + num_g(kappa) + "_N" + std::to_string(N);
      CsvFile traj(x.dir, "traj_" + cell + ".csv", "traj," + trajectory_csv_header(), x.r.tables);
      std::vector<double> r, growth;
      double change = 0.0, diss = 0.0, baseline = 0.0;
      long long steps = 0;
      int failures = 0;
      for (int i = 0; i < c.ensemble; ++i) {
        const auto& t = res[i];
        for (const auto& row : t.rows) traj.raw(std::to_string(i) + "," + trajectory_csv_row(row));
        fits.row({num_g(kappa), std::to_string(N), std::to_string(i), t.fit_ok ? num(t.fit.rate) : "nan",
                  t.fit_ok ? num(t.fit.r2) : "nan", std::to_string(t.fit.samples), num(t.sup_growth),
                  num(t.baseline_ratio), "\"" + t.error + "\""});
        if (t.fit_ok) {
          r.push_back(t.fit.rate);
          growth.push_back(t.sup_growth);
        } else {
          ++failures;
          r.push_back(std::nan(""));
        }
        change += t.sum_change;
        diss += t.sum_diss;
        steps += t.steps;
        baseline = std::max(baseline, t.baseline_ratio);
      }
      rates[{kappa, N}] = r;
      std::vector<double> good;
      for (double v : r)
        if (std::isfinite(v)) good.push_back(v);
      const double mean_change = change / std::max<long long>(steps, 1);
      const double mean_diss = 2 * c.viscosity * diss / std::max<long long>(steps, 1);
      const double residual = std::abs(mean_change + mean_diss) / std::max(mean_diss, 1e-300);
      const double med = good.empty() ? std::nan("") : median(good);
      cells.row({num_g(kappa), std::to_string(N), std::to_string(c.ensemble), num(med),
                 good.empty() ? "nan" : num(quantile(good, 0.1)), good.empty() ? "nan" : num(quantile(good, 0.9)),
                 num(mean_change), num(mean_diss), num(residual), growth.empty() ? "nan" : num(quantile(growth, 0.5)),
                 growth.empty() ? "nan" : num(quantile(growth, 0.9)), num(baseline)});
      x.r.summary["cells"][cell] = {{"kappa", kappa},
                                    {"N", N},
                                    {"median_rate", med},
                                    {"fit_failures", failures},
                                    {"energy_residual", residual},
                                    {"max_baseline_ratio", baseline}};
      x.check("fits " + cell, failures == 0, failures, 0, "trajectories without a valid decay fit");
      x.check("energy_balance " + cell, residual <= c.energy_tolerance, residual, c.energy_tolerance,
              "|mean step change + 2 nu mean dissipation| / (2 nu mean dissipation)");
      if (kappa == 0.0)
        x.check("baseline_decay " + cell, baseline <= c.decay_slack, baseline, c.decay_slack,
                "sup_t ||u_t|| / (e^{-4 nu pi^2 t} ||u_0||)");
    }
  for (int N : c.N) {
    for (std::size_t k = 1; k < kappas.size(); ++k) {
      const auto& a = rates[{kappas[k - 1], N}];
      const auto& b = rates[{kappas[k], N}];
      std::vector<double> fa, fb;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (std::isfinite(a[i]) && std::isfinite(b[i])) {
          fa.push_back(a[i]);
          fb.push_back(b[i]);
        }
      const std::string name = "rate_increase kappa " + num_g(kappas[k - 1]) + "->" + num_g(kappas[k]) +
                               " N=" + std::to_string(N);
      if (fa.size() < 2) {
        x.check(name, false, 0.0, 0.0, "fewer than two paired fits");
        continue;
      }
      PairedMeanBound pb = paired_lower_bound(fa, fb, c.confidence);
      x.r.summary["trend"][name] = {{"mean_difference", pb.mean}, {"lower_bound", pb.lower}, {"pairs", pb.n}};
      x.check(name, pb.lower > 0.0, pb.lower, 0.0,
              "one-sided " + num_g(100 * c.confidence) + "% lower bound of the paired rate difference");
    }
    const bool has0 = std::find(kappas.begin(), kappas.end(), 0.0) != kappas.end();
    const bool hasE = std::find(kappas.begin(), kappas.end(), c.enhancement_kappa) != kappas.end();
    if (has0 && hasE && c.enhancement_kappa > 0.0) {
      std::vector<double> a, b;
      for (double v : rates[{0.0, N}])
        if (std::isfinite(v)) a.push_back(v);
      for (double v : rates[{c.enhancement_kappa, N}])
        if (std::isfinite(v)) b.push_back(v);
      const double ratio = (a.empty() || b.empty()) ? 0.0 : median(b) / median(a);
      x.r.summary["enhancement"]["N=" + std::to_string(N)] = ratio;
      x.check("enhancement kappa=" + num_g(c.enhancement_kappa) + " N=" + std::to_string(N),
              ratio >= c.min_enhancement, ratio, c.min_enhancement, "median rate ratio against kappa = 0");
    }
  }
}

// ---------------------------------------------------------------- 3D blow-up

struct Trajectory3D {
  BlowupRecord rec;
  bool aborted = false;
  std::string error;
  bool cutoff_engaged = false;
  long long substeps = 0;
  std::vector<TrajectoryRow> rows;
  bool event() const { return rec.possible_blowup() || aborted; }
};

Trajectory3D run_3d(Solver& s, const ExperimentConfig& c, int traj, double T) {
  Trajectory3D out;
  SpectralField xi0 = random_vorticity(c.max_mode, derive_seed(c.seed, traj), c.init_radius, c.L);
  BrownianDriver drv(3, derive_seed(c.seed, (1ULL << 32) + traj));
  SolverState st = s.initial_state(xi0);
  BlowupMonitor mon(c.L, c.r0, T, c.ceiling_factor * c.L);
  auto sample = [&](bool keep) {
    TrajectoryRow r;
    r.t = st.t;
    r.l2 = l2_norm(st.u);
    r.hmalpha = s.cutoff_norm(st.u);
    const bool go = mon.observe(r.t, r.l2, r.hmalpha);
    if (keep || !go) {
      r.grad = gradient_norm(st.u);
      std::string f;
      if (r.hmalpha > 2 * c.L) f += "sup";
      if (st.cutoff_engaged) f += f.empty() ? "cutoff" : "|cutoff";
      if (!go) f += f.empty() ? "ceiling" : "|ceiling";
      r.flags = f;
      out.rows.push_back(r);
    }
    return go;
  };
  sample(true);
  const long long steps = static_cast<long long>(std::ceil(T / c.dt - 1e-9));
  bool early = false;
  try {
    for (long long n = 0; n < steps; ++n) {
      s.step(st, drv);
      const bool keep = (n + 1) % c.sample_every == 0;
      if (!sample(keep)) break;
      if (l2_norm(st.u) <= c.early_exit_fraction * c.r0 && st.t < T) {
        early = true;
        if (!keep) {
          TrajectoryRow r;
          r.t = st.t;
          r.l2 = l2_norm(st.u);
          r.grad = gradient_norm(st.u);
          r.hmalpha = s.cutoff_norm(st.u);
          out.rows.push_back(r);
        }
        out.rows.back().flags += out.rows.back().flags.empty() ? "early_exit" : "|early_exit";
        break;
      }
    }
  } catch (const std::exception& e) {
    out.aborted = true;
    out.error = e.what();
  }
  out.rec = mon.finish(st.t, l2_norm(st.u), early);
  out.cutoff_engaged = st.cutoff_engaged;
  out.substeps = st.substeps;
  return out;
}

void run_blowup(Context& x) {
  const ExperimentConfig& c = x.c;
  const double T = c.horizon > 0.0 ? c.horizon : blowup_horizon(c.L, c.r0);
  x.r.summary["horizon"] = T;
  x.r.summary["r0"] = c.r0;
  x.r.summary["L"] = c.L;
  x.r.summary["R"] = c.cutoff_radius();
  x.r.summary["caveat"] =
      "frequencies estimate the surrogate event {sup ||xi||_{H^-alpha} > 2L} or {||xi||_{L2(T-1,T;L2)} > r0} of the "
      "truncated system; only monotone trends are tested, not the constants of the probability bound";
  std::vector<double> kappas = c.kappa;
  std::sort(kappas.begin(), kappas.end());
  std::vector<int> Ns = c.N;
  std::sort(Ns.begin(), Ns.end());
  CsvFile recs(x.dir, "trajectories.csv",
               "kappa,N,traj,sup_hma,window_norm,exit_time,early_exit,ceiling,aborted,event_sup,event_window,event,"
               "cutoff_engaged,substeps",
               x.r.tables);
  CsvFile freq(x.dir, "frequencies.csv", "kappa,N,ensemble,events,frequency,wilson_lo,wilson_hi", x.r.tables);
  std::map<std::pair<double, int>, std::vector<bool>> events;
  for (int N : Ns)
    for (double kappa : kappas) {
      const SolverOptions opt = solver_options(c, kappa, N);
      std::vector<Trajectory3D> res(c.ensemble);
      const int threads = c.threads;
      std::vector<std::unique_ptr<Solver>> solvers(
          static_cast<std::size_t>(threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency())));
      std::atomic<int> done{0};
      parallel_for(c.ensemble, threads, [&](int i, int w) {
        if (!solvers[w]) solvers[w] = std::make_unique<Solver>(opt);
        res[i] = run_3d(*solvers[w], c, i, T);
        const int k = ++done;
        if (k % 10 == 0 || k == c.ensemble)
          x.say("blowup kappa=" + num_g(kappa) + " N=" + std::to_string(N) + ": " + std::to_string(k) + "/" +
                std::to_string(c.ensemble));
      });
      const std::string cell = "kappa" + num_g(kappa) + "_N" + std::to_string(N);
      CsvFile traj(x.dir, "traj_" + cell + ".csv", "traj," + trajectory_csv_header(), x.r.tables);
      std::vector<bool> ev;
      for (int i = 0; i < c.ensemble; ++i) {
        const auto& t = res[i];
        for (const auto& row : t.rows) traj.raw(std::to_string(i) + "," + trajectory_csv_row(row));
        recs.row({num_g(kappa), std::to_string(N), std::to_string(i), num(t.rec.sup_norm), num(t.rec.window_norm),
                  num_g(t.rec.exit_time), t.rec.early_exit ? "1" : "0", t.rec.ceiling_hit ? "1" : "0",
                  t.aborted ? "1" : "0", t.rec.sup_exceeded ? "1" : "0", t.rec.window_exceeded ? "1" : "0",
                  t.event() ? "1" : "0", t.cutoff_engaged ? "1" : "0", std::to_string(t.substeps)});
        ev.push_back(t.event());
      }
      const long long k = std::count(ev.begin(), ev.end(), true);
      Interval w = wilson_interval(k, c.ensemble, c.confidence);
      freq.row({num_g(kappa), std::to_string(N), std::to_string(c.ensemble), std::to_string(k),
                num(double(k) / c.ensemble), num(w.lo), num(w.hi)});
      x.r.summary["cells"][cell] = {{"kappa", kappa}, {"N", N},        {"events", k},
                                    {"ensemble", c.ensemble}, {"wilson", {w.lo, w.hi}}};
      events[{kappa, N}] = ev;
    }
  const double level = 1.0 - c.confidence;
  auto trend = [&](const std::string& name, const std::vector<bool>& a, const std::vector<bool>& b) {
    PairedBinaryTest t = mcnemar_exact(a, b);
    x.r.summary["trend"][name] = {{"baseline_events", t.baseline_events},
                                  {"comparison_events", t.comparison_events},
                                  {"baseline_only", t.baseline_only},
                                  {"comparison_only", t.comparison_only},
                                  {"p_increase", t.p_increase},
                                  {"p_decrease", t.p_decrease}};
    x.check(name, t.p_increase >= level, t.p_increase, level,
            "exact one-sided McNemar p-value for an increase; frequencies " + std::to_string(t.baseline_events) +
                " -> " + std::to_string(t.comparison_events) + " of " + std::to_string(t.pairs) +
                ", p(decrease) = " + num_g(t.p_decrease));
  };
  for (int N : Ns)
    for (std::size_t k = 1; k < kappas.size(); ++k)
      trend("non_increasing_in_kappa " + num_g(kappas[k - 1]) + "->" + num_g(kappas[k]) + " N=" + std::to_string(N),
            events[{kappas[k - 1], N}], events[{kappas[k], N}]);
  for (double kappa : kappas)
    for (std::size_t k = 1; k < Ns.size(); ++k)
      trend("non_increasing_in_N " + std::to_string(Ns[k - 1]) + "->" + std::to_string(Ns[k]) +
                " kappa=" + num_g(kappa),
            events[{kappa, Ns[k - 1]}], events[{kappa, Ns[k]}]);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& c, const ProgressFn& progress) {
  std::vector<std::string> problems = validate(c);
  if (!problems.empty()) throw ConfigError(problems);
  const auto t0 = std::chrono::steady_clock::now();
  fs::path dir(c.out);
  fs::create_directories(dir);
  ExperimentReport r;
  r.summary = nlohmann::json::object();
  Context x{c, dir, r, progress, {}};
  switch (c.kind) {
    case ExperimentKind::identity_suite: run_identities(x); break;
    case ExperimentKind::corrector_convergence: run_corrector(x); break;
    case ExperimentKind::dissipation_2d: run_dissipation(x); break;
    case ExperimentKind::blowup_3d: run_blowup(x); break;
  }
  if (c.kind == ExperimentKind::corrector_convergence || c.kind == ExperimentKind::dissipation_2d ||
      c.kind == ExperimentKind::blowup_3d) {
    for (int N : c.N) {
      ThetaSequence th = ThetaSequence::annulus(N, c.gamma, c.dim);
      std::ofstream(dir / ("theta_N" + std::to_string(N) + ".json")) << theta_to_json(th).dump(1) << '\n';
      std::ofstream(dir / ("basis_N" + std::to_string(N) + ".json")) << basis_to_json(th, NoiseBasis(c.dim)).dump() << '\n';
    }
  }
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream(dir / "summary.json") << r.to_json(c).dump(2) << '\n';
  std::ofstream(dir / "runtime.json") << nlohmann::json{{"runtime_seconds", r.runtime_seconds}}.dump() << '\n';
  return r;
}

}  // namespace tnoise
