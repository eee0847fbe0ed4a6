#include "tnoise/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace tnoise {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

struct Record {
  Wave k{};
  std::vector<cplx> v;
};

void check_header(int d, int m, int M) {
  if (d != 2 && d != 3) throw std::runtime_error("field file: dimension must be 2 or 3");
  if (m < 1 || m > 3) throw std::runtime_error("field file: component count must be 1..3");
  if (M < 1 || M > 4096) throw std::runtime_error("field file: max mode out of range");
}

// Validates the records against the reality constraint and builds the field.
SpectralField assemble(int d, int m, int M, const std::vector<Record>& recs) {
  check_header(d, m, M);
  SpectralField x(d, m, M);
  std::map<Wave, const Record*> seen;
  double scale = 0.0;
  for (const Record& r : recs)
    for (const cplx& v : r.v) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * std::max(scale, 1e-300);
  for (const Record& r : recs) {
    if (is_zero(r.k)) {
      for (const cplx& v : r.v)
        if (v != cplx(0.0)) throw std::runtime_error("field file: nonzero mean (k = 0) coefficient");
      continue;
    }
    if (sup_norm(r.k) > M) throw std::runtime_error("field file: wave " + to_string(r.k, d) + " outside the cube");
    if (!seen.emplace(r.k, &r).second) throw std::runtime_error("field file: duplicate wave " + to_string(r.k, d));
    auto partner = seen.find(negate(r.k));
    if (partner != seen.end()) {
      for (int c = 0; c < m; ++c)
        if (std::abs(partner->second->v[c] - std::conj(r.v[c])) > tol)
          throw std::runtime_error("field file: coefficients of " + to_string(r.k, d) + " and its mirror are not conjugate");
      continue;
    }
    x.set(r.k, r.v);
  }
  return x;
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("field file: truncated binary data");
  return v;
}

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

void write_field_binary(std::ostream& os, const SpectralField& x) {
  if (x.empty()) throw std::invalid_argument("write_field_binary: empty field");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::int32_t>(os, x.dim());
  put<std::int32_t>(os, x.components());
  put<std::int32_t>(os, x.max_mode());
  put<std::uint64_t>(os, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int j = 0; j < x.dim(); ++j) put<std::int32_t>(os, x.wave(i)[j]);
    for (int c = 0; c < x.components(); ++c) {
      put<double>(os, x.at(i, c).real());
      put<double>(os, x.at(i, c).imag());
    }
  }
}

SpectralField read_field_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("field file: bad magic");
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("field file: unsupported version");
  const int d = get<std::int32_t>(is), m = get<std::int32_t>(is), M = get<std::int32_t>(is);
  check_header(d, m, M);
  const auto count = get<std::uint64_t>(is);
  const std::uint64_t limit = 2 * static_cast<std::uint64_t>(std::pow(2 * M + 1, d));
  if (count > limit) throw std::runtime_error("field file: record count exceeds the cube");
  std::vector<Record> recs(count);
  for (Record& r : recs) {
    for (int j = 0; j < d; ++j) r.k[j] = get<std::int32_t>(is);
    r.v.resize(m);
    for (int c = 0; c < m; ++c) {
      const double re = get<double>(is), im = get<double>(is);
      r.v[c] = cplx(re, im);
    }
  }
  return assemble(d, m, M, recs);
}

nlohmann::json field_to_json(const SpectralField& x) {
  if (x.empty()) throw std::invalid_argument("field_to_json: empty field");
  nlohmann::json recs = nlohmann::json::array();
  for (std::size_t i = 0; i < x.size(); ++i) {
    nlohmann::json k = nlohmann::json::array();
    for (int j = 0; j < x.dim(); ++j) k.push_back(x.wave(i)[j]);
    nlohmann::json v = nlohmann::json::array();
    for (int c = 0; c < x.components(); ++c) v.push_back({x.at(i, c).real(), x.at(i, c).imag()});
    recs.push_back({{"k", k}, {"c", v}});
  }
  return {{"d", x.dim()}, {"m", x.components()}, {"M", x.max_mode()}, {"modes", recs}};
}

SpectralField field_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("d").get<int>(), m = j.at("m").get<int>(), M = j.at("M").get<int>();
    check_header(d, m, M);
    std::vector<Record> recs;
    for (const auto& r : j.at("modes")) {
      Record rec;
      const auto& k = r.at("k");
      if (static_cast<int>(k.size()) != d) throw std::runtime_error("field file: wave vector length differs from d");
      for (int a = 0; a < d; ++a) rec.k[a] = k[a].get<int>();
      const auto& c = r.at("c");
      if (static_cast<int>(c.size()) != m) throw std::runtime_error("field file: component count differs from m");
      for (const auto& z : c) {
        if (z.size() != 2) throw std::runtime_error("field file: coefficient is not a (re, im) pair");
        rec.v.emplace_back(z[0].get<double>(), z[1].get<double>());
      }
      recs.push_back(std::move(rec));
    }
    return assemble(d, m, M, recs);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("field file: malformed JSON: ") + e.what());
  }
}

void save_field(const std::string& path, const SpectralField& x) {
  if (ends_with(path, ".json")) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << field_to_json(x).dump() << '\n';
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_field_binary(os, x);
}

SpectralField load_field(const std::string& path) {
  if (ends_with(path, ".json")) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("field file: malformed JSON: " + std::string(e.what()));
    }
    return field_from_json(j);
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_field_binary(is);
}

nlohmann::json theta_to_json(const ThetaSequence& theta) {
  nlohmann::json shells = nlohmann::json::array();
  const auto& sq = theta.shell_squares();
  const auto& counts = theta.shell_counts();
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (counts[i] == 0) continue;
    shells.push_back({{"r2", theta.r2_min() + static_cast<int>(i)},
                      {"count", counts[i]},
                      {"theta", std::sqrt(sq[i])}});
  }
  return {{"dim", theta.dim()},
          {"N", theta.annulus_scale()},
          {"gamma", theta.gamma()},
          {"lambda_sq", theta.lambda_sq()},
          {"norm_squared", theta.norm_squared()},
          {"sup", theta.sup()},
          {"support_size", theta.support_size()},
          {"shells", shells}};
}

nlohmann::json basis_to_json(const ThetaSequence& theta, const NoiseBasis& basis) {
  nlohmann::json rows = nlohmann::json::array();
  const int d = theta.dim();
  for (const Wave& k : theta.canonical_support()) {
    auto a = basis.vectors(k);
    nlohmann::json kv = nlohmann::json::array(), av = nlohmann::json::array();
    for (int j = 0; j < d; ++j) kv.push_back(k[j]);
    for (int i = 0; i < basis.count(); ++i) {
      nlohmann::json v = nlohmann::json::array();
      for (int j = 0; j < d; ++j) v.push_back(a[i][j]);
      av.push_back(v);
    }
    rows.push_back({{"k", kv}, {"theta", theta.value(k)}, {"a", av}});
  }
  return {{"dim", d},
          {"variant", basis.variant() == NoiseBasis::Variant::standard ? "standard" : "rotated"},
          {"modes", rows}};
}

nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  return {{"t", c.t}, {"steps", c.steps}, {"field", field_to_json(c.u)}, {"driver", c.driver_state}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  try {
    c.t = j.at("t").get<double>();
    c.steps = j.at("steps").get<long long>();
    c.driver_state = j.at("driver").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  c.u = field_from_json(j.at("field"));
  return c;
}

Checkpoint make_checkpoint(const SolverState& s, const BrownianDriver& driver) {
  return Checkpoint{s.t, s.steps, s.u, driver.save_state()};
}

SolverState resume(const Solver& solver, const Checkpoint& c, BrownianDriver& driver) {
  SolverState s = solver.initial_state(c.u);
  // keep the stored coefficients bit for bit instead of the re-projected copy
  if (c.u.max_mode() == solver.options().max_mode) {
    s.u = c.u;
    s.u.mark_divergence_free(true);
  }
  s.t = c.t;
  s.steps = c.steps;
  driver.load_state(c.driver_state);
  return s;
}

}  // namespace tnoise
