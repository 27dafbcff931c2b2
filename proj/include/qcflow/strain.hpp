#pragma once

#include <array>

#include "qcflow/geometry.hpp"

namespace qcflow {

/// Projected strain rate Q [dV_i (x) E^i + E^i (x) dV_i] Q for the edge
/// velocity differences dV_i = V_i - V_0. This is the full metric rate.
template <typename Scalar>
Mat3T<Scalar> strain_rate(const FaceFrameT<Scalar>& fr, const Vec3T<Scalar>& dV1, const Vec3T<Scalar>& dV2) {
  const Mat3T<Scalar> L = dV1 * fr.E1_dual.transpose() + dV2 * fr.E2_dual.transpose();
  return fr.projector * (L + L.transpose()) * fr.projector;
}

/// Half the metric rate; the tensor that growth models are compared against.
template <typename Scalar>
Mat3T<Scalar> strain_rate_half(const FaceFrameT<Scalar>& fr, const Vec3T<Scalar>& dV1, const Vec3T<Scalar>& dV2) {
  return Scalar(0.5) * strain_rate(fr, dV1, dV2);
}

/// Half strain rate from the three corner velocities of a face.
template <typename Scalar>
Mat3T<Scalar> strain_rate_half(const FaceFrameT<Scalar>& fr, const Vec3T<Scalar>& V0, const Vec3T<Scalar>& V1,
                               const Vec3T<Scalar>& V2) {
  return strain_rate_half<Scalar>(fr, V1 - V0, V2 - V0);
}

/// B = k1 d1 d1^T + k2 d2 d2^T.
template <typename Scalar>
Mat3T<Scalar> curvature_tensor(Scalar k1, Scalar k2, const Vec3T<Scalar>& d1, const Vec3T<Scalar>& d2) {
  return k1 * d1 * d1.transpose() + k2 * d2 * d2.transpose();
}

/// G = S - l1 Q - l2 H B - l3 K Q, with S the half strain rate.
template <typename Scalar>
Mat3T<Scalar> growth_strain(const Mat3T<Scalar>& strain_half, const Mat3T<Scalar>& Q, const Mat3T<Scalar>& B, Scalar H,
                            Scalar K, const std::array<Scalar, 3>& lambda) {
  return strain_half - lambda[0] * Q - lambda[1] * H * B - lambda[2] * K * Q;
}

/// Forward difference of the unit normal.
template <typename Scalar>
Vec3T<Scalar> bending_strain(const Vec3T<Scalar>& n_now, const Vec3T<Scalar>& n_next, Scalar dt) {
  return (n_next - n_now) / dt;
}

/// Unit normal after advancing the corners by dt * V.
template <typename Scalar>
Vec3T<Scalar> advected_normal(const FaceFrameT<Scalar>& fr, const Vec3T<Scalar>& V0, const Vec3T<Scalar>& V1,
                              const Vec3T<Scalar>& V2, Scalar dt) {
  const Vec3T<Scalar> e1 = fr.E1 + dt * (V1 - V0);
  const Vec3T<Scalar> e2 = fr.E2 + dt * (V2 - V0);
  return e1.cross(e2).normalized();
}

/// Tangent eigen-pair of a symmetric tensor whose null direction is `normal`.
struct TangentEigen {
  double g1, g2;  ///< g1 >= g2
  Vec3 axis1, axis2;
};

TangentEigen tangent_eigen(const Mat3& T, const Vec3& normal);

/// Dilation D = g1 + g2, shear S = g1 - g2 >= 0 and the major axis. The axis is
/// the zero vector when the two tangent eigenvalues coincide.
struct Rates {
  double dilation;
  double shear;
  Vec3 axis;
};

Rates dilation_shear_rates(const Mat3& T, const Vec3& normal);

/// Orthonormal (u1, u2) completing `normal` to a right-handed frame.
std::array<Vec3, 2> tangent_basis(const Vec3& normal);

}  // namespace qcflow
