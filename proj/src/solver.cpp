#include "qcflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcflow/error.hpp"

namespace qcflow {

namespace {

// Unknown layout: dim components per vertex, then one slot per fitted lambda.
// Vertex velocities are stored as V_v = M_v y_v, where M_v is the inverse
// square root of an estimate of that vertex's Hessian block, and fitted
// lambdas as lambda_k = s_k y_k.
struct DofMap {
  int n_vertices;
  int dim;
  std::vector<Mat3> M, M_inv;
  std::array<int, 3> lambda_slot{-1, -1, -1};
  std::array<double, 3> lambda_scale{1, 1, 1};
  int size;

  void unpack(const Eigen::VectorXd& x, Points& V, std::array<double, 3>& lambda) const {
    V.setZero(n_vertices, 3);
    for (int v = 0; v < n_vertices; ++v) {
      Vec3 y = Vec3::Zero();
      for (int c = 0; c < dim; ++c) y(c) = x(dim * v + c);
      V.row(v) = (M[v] * y).transpose();
    }
    for (int k = 0; k < 3; ++k) lambda[k] = lambda_slot[k] >= 0 ? lambda_scale[k] * x(lambda_slot[k]) : 0.0;
  }
  Eigen::VectorXd pack(const Points& V, const std::array<double, 3>& lambda) const {
    Eigen::VectorXd x(size);
    for (int v = 0; v < n_vertices; ++v) {
      Vec3 w = V.row(v).transpose();
      if (dim == 2) w(2) = 0.0;
      const Vec3 y = M_inv[v] * w;
      for (int c = 0; c < dim; ++c) x(dim * v + c) = y(c);
    }
    for (int k = 0; k < 3; ++k)
      if (lambda_slot[k] >= 0) x(lambda_slot[k]) = lambda[k] / lambda_scale[k];
    return x;
  }
  void pack_gradient(const Points& dV, const std::array<double, 3>& dl, Eigen::VectorXd& g) const {
    for (int v = 0; v < n_vertices; ++v) {
      const Vec3 y = M[v] * dV.row(v).transpose();
      for (int c = 0; c < dim; ++c) g(dim * v + c) = y(c);
    }
    for (int k = 0; k < 3; ++k)
      if (lambda_slot[k] >= 0) g(lambda_slot[k]) = lambda_scale[k] * dl[k];
  }
};

// Per-vertex Hessian blocks of the local cost terms, up to O(1) factors:
// strain and gradient terms act like an isotropic Laplacian stiffness, the
// bending term like a Laplacian on the normal component, and the penalty
// terms contribute their exact rank-one blocks.
void build_preconditioner(DofMap& map, const StepGeometry& geo, const ModelSpec& s, const StepTargets& targets) {
  const Topology& topo = *geo.topology;
  const Faces& F = topo.faces();
  const double dt = geo.dt;
  std::vector<Mat3> H(map.n_vertices, Mat3::Zero());
  const double strain = 2.0 * (std::abs(s.A1) + std::abs(s.B1));
  const double grad = 2.0 * (std::abs(s.A2) + std::abs(s.B2));
  for (int f = 0; f < topo.n_faces(); ++f) {
    const FaceFrame& fr = geo.frames[f];
    const std::array<Vec3, 3> dphi{-(fr.E1_dual + fr.E2_dual), fr.E1_dual, fr.E2_dual};
    for (int k = 0; k < 3; ++k) {
      const double l2 = dphi[k].squaredNorm();
      Mat3& h = H[F(f, k)];
      h += dt * fr.area * l2 * (strain + grad * l2) * Mat3::Identity();
      if (!geo.planar) {
        h += 2.0 * s.A3 * dt * fr.area * l2 * fr.normal * fr.normal.transpose();
        h += (2.0 * s.Cn * dt * fr.area / 9.0) * fr.normal * fr.normal.transpose();
      }
    }
  }
  for (const BoundaryFrame& bf : geo.boundary) {
    const Mat3 b = (0.5 * s.Cb * dt * bf.length) * bf.conormal * bf.conormal.transpose();
    H[topo.edges()(bf.edge, 0)] += b;
    H[topo.edges()(bf.edge, 1)] += b;
  }
  for (int v : targets.landmark_vertices) H[v] += 2.0 * s.CL * dt * Mat3::Identity();

  double mean_trace = 0;
  for (const Mat3& h : H) mean_trace += h.topLeftCorner(map.dim, map.dim).trace() / map.dim;
  mean_trace /= std::max(1, map.n_vertices);
  map.M.assign(map.n_vertices, Mat3::Identity());
  map.M_inv.assign(map.n_vertices, Mat3::Identity());
  if (!(mean_trace > 0) || !std::isfinite(mean_trace)) return;
  for (int v = 0; v < map.n_vertices; ++v) {
    Mat3 h = H[v];
    if (map.dim == 2) {
      h.row(2).setZero();
      h.col(2).setZero();
    }
    const double floor = 1e-6 * std::max(h.topLeftCorner(map.dim, map.dim).trace() / map.dim, mean_trace);
    const Eigen::SelfAdjointEigenSolver<Mat3> es(h);
    Vec3 d = es.eigenvalues().cwiseMax(floor);
    Mat3 Ev = es.eigenvectors();
    if (map.dim == 2) {
      // Keep the transform inside the plane.
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es2(h.topLeftCorner<2, 2>());
      Ev.setIdentity();
      Ev.topLeftCorner<2, 2>() = es2.eigenvectors();
      d << es2.eigenvalues().cwiseMax(floor), 1.0;
    }
    map.M[v] = Ev * d.cwiseSqrt().cwiseInverse().asDiagonal() * Ev.transpose();
    map.M_inv[v] = Ev * d.cwiseSqrt().asDiagonal() * Ev.transpose();
  }
}

// Gives each fitted lambda unit curvature in the cost. The cost is quadratic
// in each lambda at fixed V.
void scale_lambdas(DofMap& map, const StepObjective& obj, const Points& V) {
  std::array<double, 3> d0, d1;
  Points scratch;
  obj.evaluate(V, {0, 0, 0}, &scratch, &d0);
  for (int k = 0; k < 3; ++k) {
    if (map.lambda_slot[k] < 0) continue;
    std::array<double, 3> unit{0, 0, 0};
    unit[k] = 1.0;
    obj.evaluate(V, unit, &scratch, &d1);
    const double h = d1[k] - d0[k];
    if (h > 0 && std::isfinite(h)) map.lambda_scale[k] = 1.0 / std::sqrt(h);
  }
}

double point_triangle_distance2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, Vec3& closest) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - (closest = a)).squaredNorm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - (closest = b)).squaredNorm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    closest = a + (d1 / (d1 - d3)) * ab;
    return (p - closest).squaredNorm();
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - (closest = c)).squaredNorm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    closest = a + (d2 / (d2 - d6)) * ac;
    return (p - closest).squaredNorm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    closest = b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    return (p - closest).squaredNorm();
  }
  const double denom = 1.0 / (va + vb + vc);
  closest = a + ab * (vb * denom) + ac * (vc * denom);
  return (p - closest).squaredNorm();
}

}  // namespace

Points closest_points(const Points& queries, const Points& vertices, const Faces& faces) {
  Points out(queries.rows(), 3);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const Vec3 p = queries.row(i).transpose();
    double best = std::numeric_limits<double>::infinity();
    Vec3 best_point = p, candidate;
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
      const double d2 = point_triangle_distance2(p, vertices.row(faces(f, 0)).transpose(),
                                                 vertices.row(faces(f, 1)).transpose(),
                                                 vertices.row(faces(f, 2)).transpose(), candidate);
      if (d2 < best) {
        best = d2;
        best_point = candidate;
      }
    }
    out.row(i) = best_point.transpose();
  }
  return out;
}

StepSolution solve_step(const StepGeometry& geometry, const ModelSpec& spec, const StepTargets& targets,
                        const Points& seed, const SolveOptions& opts) {
  const StepObjective obj(geometry, spec, targets);
  DofMap map;
  map.n_vertices = geometry.topology->n_vertices();
  map.dim = geometry.planar ? 2 : 3;
  map.size = map.dim * map.n_vertices;
  for (int k = 0; k < 3; ++k)
    if (spec.fit_lambda[k]) map.lambda_slot[k] = map.size++;
  build_preconditioner(map, geometry, spec, targets);
  if (spec.fits_any_lambda()) scale_lambdas(map, obj, seed);

  Points V;
  std::array<double, 3> lambda;
  Points dV;
  std::array<double, 3> dl;
  auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    map.unpack(x, V, lambda);
    const double f = obj.evaluate(V, lambda, &dV, &dl).total();
    g.resize(x.size());
    map.pack_gradient(dV, dl, g);
    return f;
  };

  const Eigen::VectorXd x0 = map.pack(seed, {0, 0, 0});
  const LbfgsResult r = lbfgs_minimize(fg, x0, opts.lbfgs);
  if (!std::isfinite(r.f)) throw Error(ErrorCode::NonFiniteCost, "cost is not finite at the initial velocities");

  StepSolution sol;
  map.unpack(r.x, sol.velocity, sol.lambda);
  sol.cost = obj.evaluate(sol.velocity, sol.lambda);
  sol.growth = obj.growth_strains(sol.velocity, sol.lambda);
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  sol.line_search_failed = r.line_search_failed;
  return sol;
}

SolveResult solve_sequence(const MeshSequence& seq, const ModelSpec& spec, const LandmarkSet& landmarks,
                           const SolveOptions& opts) {
  const PrescribedFields prescribed = extract_constraints(seq, landmarks);
  SolveResult res;
  res.planar = seq.planar();
  res.times = seq.times;
  res.positions.push_back(seq.frames.front());
  const int steps = seq.n_frames() - 1;
  for (int n = 0; n < steps; ++n) {
    const double dt = seq.times[n + 1] - seq.times[n];
    try {
      const StepGeometry geo = make_step_geometry(seq.topology, res.positions.back(), dt, seq.planar(), spec);
      const Points seed =
          opts.seed == SeedVelocity::Data ? data_velocity(seq, n) : Points(Points::Zero(seq.n_vertices(), 3));
      StepSolution sol = solve_step(geo, spec, step_targets(prescribed, n), seed, opts);
      if (!std::isfinite(sol.cost.total()))
        throw Error(ErrorCode::NonFiniteCost, "cost is not finite after the solve");
      Points next = res.positions.back() + dt * sol.velocity;
      if (opts.reproject) next = closest_points(next, seq.frames[n + 1], seq.topology->faces());
      res.positions.push_back(std::move(next));
      res.velocities.push_back(std::move(sol.velocity));
      res.lambdas.push_back(sol.lambda);
      res.costs.push_back(sol.cost);
      res.growth.push_back(std::move(sol.growth));
      res.iterations.push_back(sol.iterations);
      res.converged.push_back(sol.converged ? 1 : 0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteCost && e.code() != ErrorCode::DegenerateFace) throw;
      res.failed_step = n;
      res.error = e.what();
      break;
    }
  }
  return res;
}

}  // namespace qcflow
