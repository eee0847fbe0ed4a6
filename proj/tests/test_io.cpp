#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "tnoise/io.hpp"
#include "tnoise/random_fields.hpp"

using namespace tnoise;

namespace {

bool same_field(const SpectralField& a, const SpectralField& b) {
  return a.dim() == b.dim() && a.components() == b.components() && a.max_mode() == b.max_mode() &&
         a.data() == b.data();
}

nlohmann::json tiny_json() {
  return {{"d", 2}, {"m", 1}, {"M", 2}, {"modes", nlohmann::json::array({{{"k", {1, 0}}, {"c", {{1.0, 2.0}}}}})}};
}

}  // namespace

TEST(FieldIo, BinaryRoundTrip) {
  for (int d : {2, 3}) {
    SpectralField x = random_field(d, d, 3, 40 + d);
    std::stringstream ss;
    write_field_binary(ss, x);
    EXPECT_TRUE(same_field(read_field_binary(ss), x));
  }
}

TEST(FieldIo, JsonRoundTrip) {
  for (int d : {2, 3}) {
    SpectralField x = random_field(d, 1, 3, 50 + d);
    nlohmann::json j = nlohmann::json::parse(field_to_json(x).dump());
    EXPECT_TRUE(same_field(field_from_json(j), x));
  }
}

TEST(FieldIo, FileRoundTripByExtension) {
  auto dir = std::filesystem::temp_directory_path() / "tnoise_io_test";
  std::filesystem::create_directories(dir);
  SpectralField x = random_solenoidal(3, 2, 9);
  for (const char* name : {"f.json", "f.bin"}) {
    std::string p = (dir / name).string();
    save_field(p, x);
    EXPECT_TRUE(same_field(load_field(p), x));
  }
  std::filesystem::remove_all(dir);
}

TEST(FieldIo, AcceptsConjugateMirrorRecord) {
  nlohmann::json j = tiny_json();
  j["modes"].push_back({{"k", {-1, 0}}, {"c", {{1.0, -2.0}}}});
  SpectralField x = field_from_json(j);
  EXPECT_EQ(x.get(Wave{-1, 0, 0})[0], cplx(1.0, -2.0));
}

TEST(FieldIo, RejectsRealityViolations) {
  nlohmann::json j = tiny_json();
  j["modes"].push_back({{"k", {-1, 0}}, {"c", {{1.0, 2.0}}}});
  EXPECT_THROW(field_from_json(j), std::runtime_error);

  j = tiny_json();
  j["modes"].push_back({{"k", {0, 0}}, {"c", {{0.5, 0.0}}}});
  EXPECT_THROW(field_from_json(j), std::runtime_error);

  j = tiny_json();
  j["modes"].push_back({{"k", {3, 0}}, {"c", {{0.5, 0.0}}}});
  EXPECT_THROW(field_from_json(j), std::runtime_error);

  j = tiny_json();
  j["modes"].push_back({{"k", {1, 0}}, {"c", {{1.0, 2.0}}}});
  EXPECT_THROW(field_from_json(j), std::runtime_error);

  j = tiny_json();
  j["d"] = 4;
  EXPECT_THROW(field_from_json(j), std::runtime_error);

  j = tiny_json();
  j["modes"][0]["c"] = {{1.0, 2.0}, {0.0, 0.0}};
  EXPECT_THROW(field_from_json(j), std::runtime_error);
}

TEST(FieldIo, RejectsCorruptBinary) {
  SpectralField x = random_field(2, 1, 2, 1);
  std::stringstream ss;
  write_field_binary(ss, x);
  std::string s = ss.str();
  std::stringstream bad_magic("XXXX" + s.substr(4));
  EXPECT_THROW(read_field_binary(bad_magic), std::runtime_error);
  std::stringstream truncated(s.substr(0, s.size() - 3));
  EXPECT_THROW(read_field_binary(truncated), std::runtime_error);
}

TEST(AuditJson, ThetaAndBasis) {
  ThetaSequence t = ThetaSequence::annulus(1, 1.0, 2);
  nlohmann::json j = theta_to_json(t);
  EXPECT_EQ(j["shells"].size(), 3u);
  EXPECT_NEAR(j["lambda_sq"].get<double>(), 7.0, 1e-14);
  EXPECT_NEAR(j["norm_squared"].get<double>(), 1.0, 1e-14);
  nlohmann::json b = basis_to_json(t, NoiseBasis(2));
  EXPECT_EQ(b["modes"].size(), 6u);
  auto a = b["modes"][0]["a"][0];
  auto k = b["modes"][0]["k"];
  EXPECT_NEAR(a[0].get<double>() * k[0].get<int>() + a[1].get<double>() * k[1].get<int>(), 0.0, 1e-15);
}

TEST(Checkpoint, ResumeContinuesTrajectoryBitwise) {
  SolverOptions o;
  o.dim = 2;
  o.max_mode = 6;
  o.viscosity = 0.01;
  o.kappa = 0.3;
  o.dt = 0.01;
  o.theta = ThetaSequence::annulus(2, 1.0, 2);
  Solver s(o);
  SolverState st = s.initial_state(random_solenoidal(2, 6, 3, 3.0, 1.0));
  BrownianDriver drv(2, 17);
  for (int n = 0; n < 3; ++n) s.step(st, drv);
  nlohmann::json cp = nlohmann::json::parse(checkpoint_to_json(make_checkpoint(st, drv)).dump());
  for (int n = 0; n < 3; ++n) s.step(st, drv);

  BrownianDriver other(2, 1);
  SolverState r = resume(s, checkpoint_from_json(cp), other);
  EXPECT_EQ(r.steps, 3);
  for (int n = 0; n < 3; ++n) s.step(r, other);
  EXPECT_EQ(r.t, st.t);
  EXPECT_EQ(r.u.data(), st.u.data());
}
