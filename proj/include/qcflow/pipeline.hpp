#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcflow/export.hpp"
#include "qcflow/synth.hpp"

namespace qcflow {

struct CheckResult {
  std::string name;
  bool pass;
  double value;      ///< measured residual
  double tolerance;  ///< pass when value <= tolerance
};

/// Structural invariants on every frame of a sequence: projector identities,
/// pseudoinverse identity, zero cost under rigid motion, zero gradient of
/// constant fields, and exact smoothing of constant fields.
std::vector<CheckResult> run_invariant_checks(const MeshSequence& seq);

/// Loads a sequence from a directory (manifest, frame_*.obj, or topology.obj +
/// positions.bin) or from an explicit list of OBJ files.
MeshSequence load_input(const std::vector<std::filesystem::path>& inputs);

struct RunOutput {
  SolveResult result;
  std::vector<RateField> rates;
  std::vector<std::string> files;
};

/// Preprocess, extract constraints, solve, post-process and export.
/// Config keys: input (string or list), out, model (ModelSpec keys),
/// landmarks, landmark_velocities, normalize, densify, smooth, d_bar_fraction,
/// solver {max_iters, grad_tol, memory, reproject, seed}.
RunOutput run_solve(const nlohmann::json& config);

/// Recomputes rates from a finished run directory and rewrites its rate files.
std::vector<RateField> run_analyze(const nlohmann::json& config);

/// Executes config["command"] (synth | solve | analyze | check). Returns the
/// process exit status; errors are reported on stderr.
int run_pipeline(const nlohmann::json& config);
int run_pipeline(const std::filesystem::path& config_path);

}  // namespace qcflow
