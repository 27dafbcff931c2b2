#pragma once

#include <complex>
#include <vector>

#include "qcflow/mesh.hpp"

namespace qcflow {

/// Kinematic frame of one triangle: edge vectors from the first corner,
/// their dual (biorthogonal) vectors, unit normal, centroid, area, and the
/// tangent-plane projector E_i (x) E^i.
template <typename Scalar>
struct FaceFrameT {
  Vec3T<Scalar> E1, E2;
  Vec3T<Scalar> E1_dual, E2_dual;
  Vec3T<Scalar> normal;
  Vec3T<Scalar> centroid;
  Scalar area;
  Mat3T<Scalar> projector;
};

using FaceFrame = FaceFrameT<double>;

/// Frame of the triangle (p0, p1, p2). The caller guarantees non-degeneracy.
template <typename Scalar>
FaceFrameT<Scalar> face_frame(const Vec3T<Scalar>& p0, const Vec3T<Scalar>& p1, const Vec3T<Scalar>& p2) {
  FaceFrameT<Scalar> fr;
  fr.E1 = p1 - p0;
  fr.E2 = p2 - p0;
  const Vec3T<Scalar> c = fr.E1.cross(fr.E2);
  const Scalar twice_area = c.norm();
  fr.normal = c / twice_area;
  fr.area = Scalar(0.5) * twice_area;
  fr.centroid = (p0 + p1 + p2) / Scalar(3);

  const Scalar g11 = fr.E1.dot(fr.E1), g12 = fr.E1.dot(fr.E2), g22 = fr.E2.dot(fr.E2);
  const Scalar det = g11 * g22 - g12 * g12;
  fr.E1_dual = (g22 * fr.E1 - g12 * fr.E2) / det;
  fr.E2_dual = (g11 * fr.E2 - g12 * fr.E1) / det;
  fr.projector = fr.E1 * fr.E1_dual.transpose() + fr.E2 * fr.E2_dual.transpose();
  return fr;
}

/// Frame of face f; throws DegenerateFace below kAreaEpsilon.
FaceFrame face_frame(const Points& vertices, const Faces& faces, int f);
std::vector<FaceFrame> face_frames(const Points& vertices, const Faces& faces);

/// Per boundary edge: unit tangent along the face winding, outward in-surface
/// co-normal tangent x normal, midpoint, and length.
struct BoundaryFrame {
  Vec3 tangent;
  Vec3 conormal;
  Vec3 midpoint;
  double length;
  int edge;
  int face;
};

/// One entry per boundary edge, in Topology::boundary_edges() order.
/// Closed surfaces give an empty list.
std::vector<BoundaryFrame> boundary_frames(const Points& vertices, const Topology& topo,
                                           const std::vector<FaceFrame>& frames);

/// Accumulated in-plane distortion of one face between a reference and a
/// current configuration.
struct MetricDecomposition {
  double omega;             ///< conformal factor sigma1 * sigma2
  double epsilon;           ///< sigma1 / sigma2 - 1
  double theta;             ///< major stretch direction in the reference face, in [0, pi)
  std::complex<double> mu;  ///< Beltrami coefficient eps/(2+eps) exp(-2 i theta)
};

/// Throws OrientationFlip when the in-plane deformation gradient has det <= 0.
MetricDecomposition metric_decomposition(const FaceFrame& reference, const FaceFrame& current);

}  // namespace qcflow
