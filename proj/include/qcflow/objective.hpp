#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcflow/curvature.hpp"
#include "qcflow/gradop.hpp"
#include "qcflow/strain.hpp"

namespace qcflow {

/// Moduli and penalty weights of the registration cost.
struct ModelSpec {
  double A1 = 0, B1 = 0, A2 = 0, B2 = 0, A3 = 0;
  double Cg = 0;
  double Cn = 1e5, Cb = 1e5, CL = 1e5;
  std::array<bool, 3> fit_lambda{false, false, false};
  std::string preset_name = "custom";

  bool uses_gradient() const { return A2 != 0.0 || B2 != 0.0; }
  bool fits_any_lambda() const { return fit_lambda[0] || fit_lambda[1] || fit_lambda[2]; }
  /// Human-readable warnings when a rigidity pair is not coercive.
  std::vector<std::string> coercivity_warnings() const;
};

/// Named parameter sets: almost_conformal, viscous, almost_uniform, geometric.
/// Throws UnknownPreset.
ModelSpec preset(const std::string& name);
std::vector<std::string> preset_names();

/// Keys: preset, A1, B1, A2, B2, A3, Cg, Cn, Cb, CL, fit_lambda1..3. A preset
/// key is applied first and explicit keys override it.
ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& spec);

/// Data-prescribed quantities, one entry per time step.
struct PrescribedFields {
  std::vector<Eigen::VectorXd> normal;    ///< per face, n . centroid velocity
  std::vector<Eigen::VectorXd> boundary;  ///< per boundary edge, conormal . midpoint velocity
  std::vector<int> landmark_vertices;
  std::vector<Points> landmark;           ///< per landmark velocity
  int n_steps() const { return static_cast<int>(normal.size()); }
};

/// Measures the normal and boundary-normal velocities of the input sequence,
/// and the landmark velocities.
PrescribedFields extract_constraints(const MeshSequence& seq, const LandmarkSet& landmarks = {});

/// Prescribed quantities for a single step.
struct StepTargets {
  Eigen::VectorXd normal;
  Eigen::VectorXd boundary;
  std::vector<int> landmark_vertices;
  Points landmark;
};
StepTargets step_targets(const PrescribedFields& fields, int step);

struct CostBreakdown {
  double viscous = 0, grad = 0, bend = 0, normal = 0, boundary = 0, landmark = 0, lambda_reg = 0;
  double total() const { return viscous + grad + bend + normal + boundary + landmark + lambda_reg; }
};

/// Everything about one time step that does not depend on the unknown
/// velocities: geometry at the current positions, curvature, the gradient
/// operator, and the targets.
struct StepGeometry {
  std::shared_ptr<const Topology> topology;
  Points positions;
  double dt = 0;
  bool planar = false;
  std::vector<FaceFrame> frames;
  CurvatureField curvature;
  TensorField B;
  std::vector<BoundaryFrame> boundary;
  std::optional<GradientOperator> gradient;
};

/// Builds the step geometry. The gradient operator is only assembled when the
/// model has a gradient term.
StepGeometry make_step_geometry(std::shared_ptr<const Topology> topology, const Points& positions, double dt,
                                bool planar, const ModelSpec& spec);

/// Cost of one step and, optionally, its gradient with respect to the vertex
/// velocities (rows of V) and the three lambdas. Non-finite geometry yields a
/// non-finite total rather than an exception.
class StepObjective {
 public:
  StepObjective(const StepGeometry& geometry, const ModelSpec& spec, StepTargets targets);

  CostBreakdown evaluate(const Points& V, const std::array<double, 3>& lambda, Points* dV = nullptr,
                         std::array<double, 3>* dlambda = nullptr) const;

  /// Growth strain of every face for the given velocities and lambdas.
  TensorField growth_strains(const Points& V, const std::array<double, 3>& lambda) const;

  const StepGeometry& geometry() const { return geo_; }
  const ModelSpec& spec() const { return spec_; }
  const StepTargets& targets() const { return targets_; }

 private:
  const StepGeometry& geo_;
  ModelSpec spec_;
  StepTargets targets_;
};

/// Convenience: cost of step N of a sequence with geometry at the input frame N.
CostBreakdown evaluate_total_cost(const MeshSequence& seq, int step, const Points& V,
                                  const std::array<double, 3>& lambda, const ModelSpec& spec,
                                  const PrescribedFields& prescribed, Points* dV = nullptr,
                                  std::array<double, 3>* dlambda = nullptr);

/// Input-data vertex velocities of step N.
Points data_velocity(const MeshSequence& seq, int step);

}  // namespace qcflow
