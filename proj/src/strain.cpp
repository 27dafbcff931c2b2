#include "qcflow/strain.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace qcflow {

std::array<Vec3, 2> tangent_basis(const Vec3& normal) {
  Eigen::Index i_min;
  normal.cwiseAbs().minCoeff(&i_min);
  Vec3 axis = Vec3::Zero();
  axis(i_min) = 1.0;
  const Vec3 u1 = (axis - axis.dot(normal) * normal).normalized();
  return {u1, normal.cross(u1)};
}

TangentEigen tangent_eigen(const Mat3& T, const Vec3& normal) {
  const auto [u1, u2] = tangent_basis(normal);
  Mat2 t;
  t(0, 0) = u1.dot(T * u1);
  t(1, 1) = u2.dot(T * u2);
  t(0, 1) = t(1, 0) = 0.5 * (u1.dot(T * u2) + u2.dot(T * u1));
  Eigen::SelfAdjointEigenSolver<Mat2> es(t);
  TangentEigen out;
  out.g1 = es.eigenvalues()(1);
  out.g2 = es.eigenvalues()(0);
  const Vec2 a = es.eigenvectors().col(1), b = es.eigenvectors().col(0);
  out.axis1 = a(0) * u1 + a(1) * u2;
  out.axis2 = b(0) * u1 + b(1) * u2;
  return out;
}

Rates dilation_shear_rates(const Mat3& T, const Vec3& normal) {
  const TangentEigen te = tangent_eigen(T, normal);
  Rates r{te.g1 + te.g2, te.g1 - te.g2, te.axis1};
  const double scale = std::abs(te.g1) + std::abs(te.g2);
  if (scale == 0.0 || r.shear <= 1e-13 * scale) {
    r.shear = 0.0;
    r.axis = Vec3::Zero();
  }
  return r;
}

}  // namespace qcflow
