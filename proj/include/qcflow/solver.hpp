#pragma once

#include <array>
#include <string>
#include <vector>

#include "qcflow/lbfgs.hpp"
#include "qcflow/objective.hpp"

namespace qcflow {

enum class SeedVelocity { Data, Zero };

struct SolveOptions {
  LbfgsOptions lbfgs;
  /// Snap integrated vertices onto the input surface of the next frame.
  bool reproject = false;
  SeedVelocity seed = SeedVelocity::Data;
};

struct StepSolution {
  Points velocity;
  std::array<double, 3> lambda{0, 0, 0};
  CostBreakdown cost;
  TensorField growth;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

struct SolveResult {
  std::vector<Points> velocities;
  std::vector<std::array<double, 3>> lambdas;
  std::vector<CostBreakdown> costs;
  std::vector<TensorField> growth;
  std::vector<int> iterations;
  std::vector<char> converged;
  /// Optimized trajectories, one more entry than steps.
  std::vector<Points> positions;
  std::vector<double> times;
  bool planar = false;
  /// Step at which the solve aborted, or -1.
  int failed_step = -1;
  std::string error;

  int n_steps() const { return static_cast<int>(velocities.size()); }
  bool ok() const { return failed_step < 0; }
};

/// Minimizes the step cost over vertex velocities (and the fitted lambdas).
/// Throws NonFiniteCost when the seed already has a non-finite cost.
StepSolution solve_step(const StepGeometry& geometry, const ModelSpec& spec, const StepTargets& targets,
                        const Points& seed, const SolveOptions& opts = {});

/// Solves every step in order, integrating positions forward from frame 0.
/// A non-finite cost stops the run and returns the steps solved so far.
SolveResult solve_sequence(const MeshSequence& seq, const ModelSpec& spec, const LandmarkSet& landmarks = {},
                           const SolveOptions& opts = {});

/// Closest point on a triangle mesh surface to each query point.
Points closest_points(const Points& queries, const Points& vertices, const Faces& faces);

}  // namespace qcflow
