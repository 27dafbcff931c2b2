#include "qcflow/objective.hpp"

#include <cmath>

#include "qcflow/error.hpp"

namespace qcflow {

std::vector<std::string> ModelSpec::coercivity_warnings() const {
  std::vector<std::string> out;
  if (A1 - B1 / 2 + B1 < 0) out.push_back("A1 - B1/2 + B1 < 0: viscous term is not coercive");
  if (A2 - B2 / 2 + B2 < 0) out.push_back("A2 - B2/2 + B2 < 0: gradient term is not coercive");
  return out;
}

std::vector<std::string> preset_names() { return {"almost_conformal", "viscous", "almost_uniform", "geometric"}; }

ModelSpec preset(const std::string& name) {
  ModelSpec s;
  s.preset_name = name;
  if (name == "almost_conformal") {
    // Pure shear modulus: the density reduces to S^2 / 2.
    s.B1 = 1;
  } else if (name == "viscous") {
    s.A1 = s.B1 = s.A3 = 1;
  } else if (name == "almost_uniform") {
    s.A2 = s.B2 = 1;
  } else if (name == "geometric") {
    s.A1 = s.B1 = 1;
    s.Cg = 0.1;
    s.fit_lambda = {true, true, true};
  } else {
    throw Error(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
  }
  return s;
}

ModelSpec model_from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    if (j.contains("preset")) {
      const std::string name = j.at("preset").get<std::string>();
      if (name != "custom") s = preset(name);
    }
    auto num = [&](const char* key, double& field) {
      if (j.contains(key)) field = j.at(key).get<double>();
    };
    num("A1", s.A1);
    num("B1", s.B1);
    num("A2", s.A2);
    num("B2", s.B2);
    num("A3", s.A3);
    num("Cg", s.Cg);
    num("Cn", s.Cn);
    num("Cb", s.Cb);
    num("CL", s.CL);
    for (int i = 0; i < 3; ++i) {
      const std::string key = "fit_lambda" + std::to_string(i + 1);
      if (j.contains(key)) s.fit_lambda[i] = j.at(key).get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return s;
}

nlohmann::json model_to_json(const ModelSpec& s) {
  return {{"preset", s.preset_name}, {"A1", s.A1}, {"B1", s.B1}, {"A2", s.A2},
          {"B2", s.B2},              {"A3", s.A3}, {"Cg", s.Cg}, {"Cn", s.Cn},
          {"Cb", s.Cb},              {"CL", s.CL}, {"fit_lambda1", s.fit_lambda[0]},
          {"fit_lambda2", s.fit_lambda[1]},        {"fit_lambda3", s.fit_lambda[2]}};
}

Points data_velocity(const MeshSequence& seq, int step) {
  const double dt = seq.times[step + 1] - seq.times[step];
  return (seq.frames[step + 1] - seq.frames[step]) / dt;
}

PrescribedFields extract_constraints(const MeshSequence& seq, const LandmarkSet& landmarks) {
  const Topology& topo = *seq.topology;
  PrescribedFields out;
  const LandmarkSet resolved = resolve_landmarks(seq, landmarks);
  out.landmark_vertices = resolved.vertices;
  out.landmark = resolved.velocities;
  for (int n = 0; n + 1 < seq.n_frames(); ++n) {
    const Points V = data_velocity(seq, n);
    const auto frames = face_frames(seq.frames[n], topo.faces());
    Eigen::VectorXd normal = Eigen::VectorXd::Zero(topo.n_faces());
    if (!seq.planar()) {
      for (int f = 0; f < topo.n_faces(); ++f) {
        const Vec3 vc = (V.row(topo.faces()(f, 0)) + V.row(topo.faces()(f, 1)) + V.row(topo.faces()(f, 2))) / 3.0;
        normal(f) = frames[f].normal.dot(vc);
      }
    }
    const auto bframes = boundary_frames(seq.frames[n], topo, frames);
    Eigen::VectorXd boundary(static_cast<Eigen::Index>(bframes.size()));
    for (std::size_t i = 0; i < bframes.size(); ++i) {
      const int e = bframes[i].edge;
      const Vec3 vm = 0.5 * (V.row(topo.edges()(e, 0)) + V.row(topo.edges()(e, 1))).transpose();
      boundary(i) = bframes[i].conormal.dot(vm);
    }
    out.normal.push_back(std::move(normal));
    out.boundary.push_back(std::move(boundary));
  }
  return out;
}

StepTargets step_targets(const PrescribedFields& fields, int step) {
  StepTargets t;
  t.normal = fields.normal.at(step);
  t.boundary = fields.boundary.at(step);
  t.landmark_vertices = fields.landmark_vertices;
  t.landmark = fields.landmark.empty() ? Points(0, 3) : fields.landmark.at(step);
  return t;
}

StepGeometry make_step_geometry(std::shared_ptr<const Topology> topology, const Points& positions, double dt,
                                bool planar, const ModelSpec& spec) {
  StepGeometry g;
  g.topology = std::move(topology);
  g.positions = positions;
  g.dt = dt;
  g.planar = planar;
  const Topology& topo = *g.topology;
  g.frames = face_frames(positions, topo.faces());
  g.boundary = boundary_frames(positions, topo, g.frames);
  const int m = topo.n_faces();
  if (planar) {
    g.curvature.k1.assign(m, 0.0);
    g.curvature.k2.assign(m, 0.0);
    g.curvature.H.assign(m, 0.0);
    g.curvature.K.assign(m, 0.0);
    g.curvature.flagged.assign(m, 0);
    g.curvature.dir1.resize(m);
    g.curvature.dir2.resize(m);
    for (int f = 0; f < m; ++f) {
      g.curvature.dir1[f] = g.frames[f].E1.normalized();
      g.curvature.dir2[f] = g.frames[f].normal.cross(g.curvature.dir1[f]);
    }
  } else {
    g.curvature = estimate_curvature(positions, topo, g.frames);
  }
  g.B.resize(m);
  for (int f = 0; f < m; ++f)
    g.B[f] = curvature_tensor(g.curvature.k1[f], g.curvature.k2[f], g.curvature.dir1[f], g.curvature.dir2[f]);
  if (spec.uses_gradient()) g.gradient = GradientOperator::build(positions, topo, g.frames);
  return g;
}

StepObjective::StepObjective(const StepGeometry& geometry, const ModelSpec& spec, StepTargets targets)
    : geo_(geometry), spec_(spec), targets_(std::move(targets)) {
  const Topology& topo = *geo_.topology;
  if (targets_.normal.size() != topo.n_faces())
    throw Error(ErrorCode::ShapeMismatch, "normal targets do not match face count");
  if (targets_.boundary.size() != static_cast<Eigen::Index>(geo_.boundary.size()))
    throw Error(ErrorCode::ShapeMismatch, "boundary targets do not match boundary edge count");
  if (targets_.landmark.rows() != static_cast<Eigen::Index>(targets_.landmark_vertices.size()))
    throw Error(ErrorCode::ShapeMismatch, "landmark targets do not match landmark count");
}

TensorField StepObjective::growth_strains(const Points& V, const std::array<double, 3>& lambda) const {
  const Faces& F = geo_.topology->faces();
  TensorField G(F.rows());
  for (int f = 0; f < F.rows(); ++f) {
    const FaceFrame& fr = geo_.frames[f];
    const Vec3 v0 = V.row(F(f, 0)).transpose(), v1 = V.row(F(f, 1)).transpose(), v2 = V.row(F(f, 2)).transpose();
    G[f] = growth_strain<double>(strain_rate_half<double>(fr, v0, v1, v2), fr.projector, geo_.B[f],
                                 geo_.curvature.H[f], geo_.curvature.K[f], lambda);
  }
  return G;
}

namespace {

// Isotropic rigidity density (a - b/2) tr(T)^2 + b tr(T^2) and its derivative
// with respect to a symmetric T.
double rigidity(const Mat3& T, double a, double b, Mat3* dT) {
  const double tr = T.trace();
  if (dT) *dT = 2.0 * (a - 0.5 * b) * tr * Mat3::Identity() + 2.0 * b * T;
  return (a - 0.5 * b) * tr * tr + b * (T.array() * T.array()).sum();
}

}  // namespace

CostBreakdown StepObjective::evaluate(const Points& V, const std::array<double, 3>& lambda, Points* dV,
                                      std::array<double, 3>* dlambda) const {
  const Topology& topo = *geo_.topology;
  const Faces& F = topo.faces();
  const int m = topo.n_faces();
  const double dt = geo_.dt;
  const ModelSpec& s = spec_;
  const bool want_grad = dV != nullptr;
  if (want_grad) dV->setZero(V.rows(), 3);
  std::array<double, 3> dl{0, 0, 0};
  CostBreakdown cost;

  const bool strain_terms = s.A1 != 0 || s.B1 != 0 || s.uses_gradient();
  if (strain_terms) {
    const TensorField G = growth_strains(V, lambda);
    TensorField W(m, Mat3::Zero());
    for (int f = 0; f < m; ++f) {
      const double w = dt * geo_.frames[f].area;
      Mat3 dG;
      cost.viscous += w * rigidity(G[f], s.A1, s.B1, want_grad ? &dG : nullptr);
      if (want_grad) W[f] = w * dG;
    }
    if (s.uses_gradient()) {
      const GradientOperator& op = *geo_.gradient;
      const Eigen::MatrixXd X = op.apply(stack_tensors(G));
      Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(X.rows(), 9);
      for (int f = 0; f < m; ++f) {
        const double w = dt * geo_.frames[f].area;
        for (int alpha = 0; alpha < 3; ++alpha) {
          Mat3 T;
          for (int k = 0; k < 9; ++k) T(k / 3, k % 3) = X(3 * f + alpha, k);
          Mat3 dT;
          cost.grad += w * rigidity(T, s.A2, s.B2, want_grad ? &dT : nullptr);
          if (want_grad)
            for (int k = 0; k < 9; ++k) Y(3 * f + alpha, k) = w * dT(k / 3, k % 3);
        }
      }
      if (want_grad) {
        const TensorField back = unstack_tensors(op.apply_adjoint(Y));
        for (int f = 0; f < m; ++f) W[f] += back[f];
      }
    }
    if (want_grad) {
      for (int f = 0; f < m; ++f) {
        const FaceFrame& fr = geo_.frames[f];
        const Mat3& Q = fr.projector;
        const Mat3 Ws = 0.5 * (W[f] + W[f].transpose());
        // G = (1/2) Q (L + L^T) Q with L = dV_i (x) E^i, so dC/dL = Q Ws Q.
        const Mat3 QWQ = Q * Ws * Q;
        const Vec3 g1 = QWQ * fr.E1_dual, g2 = QWQ * fr.E2_dual;
        dV->row(F(f, 1)) += g1.transpose();
        dV->row(F(f, 2)) += g2.transpose();
        dV->row(F(f, 0)) -= (g1 + g2).transpose();
        const double wq = (Ws.array() * Q.array()).sum();
        dl[0] -= wq;
        dl[1] -= geo_.curvature.H[f] * (Ws.array() * geo_.B[f].array()).sum();
        dl[2] -= geo_.curvature.K[f] * wq;
      }
    }
  }

  if (!geo_.planar && s.A3 != 0) {
    for (int f = 0; f < m; ++f) {
      const FaceFrame& fr = geo_.frames[f];
      const Vec3 v0 = V.row(F(f, 0)).transpose(), v1 = V.row(F(f, 1)).transpose(), v2 = V.row(F(f, 2)).transpose();
      const Vec3 e1 = fr.E1 + dt * (v1 - v0), e2 = fr.E2 + dt * (v2 - v0);
      const Vec3 c = e1.cross(e2);
      const double cn = c.norm();
      const Vec3 n_next = c / cn;
      const Vec3 ndot = (n_next - fr.normal) / dt;
      cost.bend += s.A3 * dt * fr.area * ndot.squaredNorm();
      if (want_grad) {
        const Vec3 dn = 2.0 * s.A3 * fr.area * ndot;  // d/dn_next of A3 dt A |n_next - n|^2 / dt^2
        const Vec3 dc = (dn - n_next * n_next.dot(dn)) / cn;
        const Vec3 de1 = e2.cross(dc), de2 = dc.cross(e1);
        dV->row(F(f, 1)) += dt * de1.transpose();
        dV->row(F(f, 2)) += dt * de2.transpose();
        dV->row(F(f, 0)) -= dt * (de1 + de2).transpose();
      }
    }
  }

  if (!geo_.planar && s.Cn != 0) {
    for (int f = 0; f < m; ++f) {
      const FaceFrame& fr = geo_.frames[f];
      const Vec3 vc = (V.row(F(f, 0)) + V.row(F(f, 1)) + V.row(F(f, 2))).transpose() / 3.0;
      const double r = fr.normal.dot(vc) - targets_.normal(f);
      const double w = s.Cn * dt * fr.area;
      cost.normal += w * r * r;
      if (want_grad) {
        const Eigen::RowVector3d g = (2.0 * w * r / 3.0) * fr.normal.transpose();
        for (int k = 0; k < 3; ++k) dV->row(F(f, k)) += g;
      }
    }
  }

  if (s.Cb != 0) {
    for (std::size_t i = 0; i < geo_.boundary.size(); ++i) {
      const BoundaryFrame& bf = geo_.boundary[i];
      const int a = topo.edges()(bf.edge, 0), b = topo.edges()(bf.edge, 1);
      const Vec3 vm = 0.5 * (V.row(a) + V.row(b)).transpose();
      const double r = bf.conormal.dot(vm) - targets_.boundary(static_cast<Eigen::Index>(i));
      const double w = s.Cb * dt * bf.length;
      cost.boundary += w * r * r;
      if (want_grad) {
        const Eigen::RowVector3d g = (w * r) * bf.conormal.transpose();
        dV->row(a) += g;
        dV->row(b) += g;
      }
    }
  }

  if (s.CL != 0) {
    for (std::size_t i = 0; i < targets_.landmark_vertices.size(); ++i) {
      const int v = targets_.landmark_vertices[i];
      Eigen::RowVector3d r = V.row(v) - targets_.landmark.row(static_cast<Eigen::Index>(i));
      if (geo_.planar) r(2) = 0.0;
      cost.landmark += s.CL * dt * r.squaredNorm();
      if (want_grad) dV->row(v) += 2.0 * s.CL * dt * r;
    }
  }

  for (int k = 0; k < 3; ++k) {
    if (!s.fit_lambda[k]) continue;
    cost.lambda_reg += s.Cg * dt * lambda[k] * lambda[k];
    dl[k] += 2.0 * s.Cg * dt * lambda[k];
  }

  if (want_grad && geo_.planar) dV->col(2).setZero();
  if (dlambda) *dlambda = dl;
  return cost;
}

CostBreakdown evaluate_total_cost(const MeshSequence& seq, int step, const Points& V,
                                  const std::array<double, 3>& lambda, const ModelSpec& spec,
                                  const PrescribedFields& prescribed, Points* dV, std::array<double, 3>* dlambda) {
  const double dt = seq.times[step + 1] - seq.times[step];
  const StepGeometry geo = make_step_geometry(seq.topology, seq.frames[step], dt, seq.planar(), spec);
  const StepObjective obj(geo, spec, step_targets(prescribed, step));
  return obj.evaluate(V, lambda, dV, dlambda);
}

}  // namespace qcflow
