#include "qcflow/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qcflow/error.hpp"

namespace qcflow {

FaceFrame face_frame(const Points& vertices, const Faces& faces, int f) {
  const Vec3 p0 = vertices.row(faces(f, 0)).transpose();
  const Vec3 p1 = vertices.row(faces(f, 1)).transpose();
  const Vec3 p2 = vertices.row(faces(f, 2)).transpose();
  if (!(0.5 * (p1 - p0).cross(p2 - p0).norm() > kAreaEpsilon))
    throw Error(ErrorCode::DegenerateFace, "face " + std::to_string(f) + " has (near) zero area");
  return face_frame<double>(p0, p1, p2);
}

std::vector<FaceFrame> face_frames(const Points& vertices, const Faces& faces) {
  std::vector<FaceFrame> out;
  out.reserve(faces.rows());
  for (int f = 0; f < faces.rows(); ++f) out.push_back(face_frame(vertices, faces, f));
  return out;
}

std::vector<BoundaryFrame> boundary_frames(const Points& vertices, const Topology& topo,
                                           const std::vector<FaceFrame>& frames) {
  std::vector<BoundaryFrame> out;
  const auto& edges = topo.boundary_edges();
  const auto& oriented = topo.boundary_edge_vertices();
  out.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Vec3 a = vertices.row(oriented[i][0]).transpose();
    const Vec3 b = vertices.row(oriented[i][1]).transpose();
    BoundaryFrame bf;
    bf.edge = edges[i];
    bf.face = topo.edge_faces()(edges[i], 0);
    bf.length = (b - a).norm();
    bf.tangent = (b - a) / bf.length;
    bf.midpoint = 0.5 * (a + b);
    bf.conormal = bf.tangent.cross(frames[bf.face].normal).normalized();
    if (bf.conormal.dot(bf.midpoint - frames[bf.face].centroid) < 0) bf.conormal = -bf.conormal;
    out.push_back(bf);
  }
  return out;
}

namespace {

// Edge vectors as columns, in an orthonormal basis of the face plane.
Mat2 planar_edges(const FaceFrame& fr) {
  const Vec3 u1 = fr.E1.normalized();
  const Vec3 u2 = fr.normal.cross(u1);
  Mat2 m;
  m << fr.E1.dot(u1), fr.E2.dot(u1), fr.E1.dot(u2), fr.E2.dot(u2);
  return m;
}

}  // namespace

MetricDecomposition metric_decomposition(const FaceFrame& reference, const FaceFrame& current) {
  const Mat2 F = planar_edges(current) * planar_edges(reference).inverse();
  if (!(F.determinant() > 0.0)) throw Error(ErrorCode::OrientationFlip, "face orientation flipped");
  Eigen::JacobiSVD<Mat2> svd(F, Eigen::ComputeFullV);
  const Vec2 s = svd.singularValues();
  MetricDecomposition md;
  md.omega = s(0) * s(1);
  md.epsilon = s(0) / s(1) - 1.0;
  if (md.epsilon <= 1e-14) {
    md.epsilon = 0.0;
    md.theta = 0.0;
  } else {
    const Vec2 v1 = svd.matrixV().col(0);
    md.theta = std::fmod(std::atan2(v1.y(), v1.x()) + 2.0 * std::numbers::pi, std::numbers::pi);
  }
  md.mu = std::polar(md.epsilon / (2.0 + md.epsilon), -2.0 * md.theta);
  return md;
}

}  // namespace qcflow
