#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "tnoise/noise.hpp"
#include "tnoise/solver.hpp"
#include "tnoise/spectral_field.hpp"

namespace tnoise {

// Field files hold a header (d, m, M) and a list of (k, m complex values)
// records. Writers emit the canonical half; readers accept any records and
// reject a nonzero k = 0 entry, waves outside the cube, duplicates and
// k / -k pairs that are not conjugate.

// Binary layout (native little-endian): "TNSF", u32 version, i32 d, m, M,
// u64 count, then per record i32 k[d] and m pairs of f64 (re, im).
void write_field_binary(std::ostream& os, const SpectralField& x);
SpectralField read_field_binary(std::istream& is);

nlohmann::json field_to_json(const SpectralField& x);
SpectralField field_from_json(const nlohmann::json& j);

void save_field(const std::string& path, const SpectralField& x);  // .json or binary by extension
SpectralField load_field(const std::string& path);

nlohmann::json theta_to_json(const ThetaSequence& theta);
// a_{k,i} for every canonical k in the support of theta.
nlohmann::json basis_to_json(const ThetaSequence& theta, const NoiseBasis& basis);

struct Checkpoint {
  double t = 0.0;
  long long steps = 0;
  SpectralField u;
  std::string driver_state;
};

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
Checkpoint make_checkpoint(const SolverState& s, const BrownianDriver& driver);
// Restores time, step count and driver; the energy ledger restarts at the checkpoint.
SolverState resume(const Solver& solver, const Checkpoint& c, BrownianDriver& driver);

}  // namespace tnoise
