#include "qcflow/curvature.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include <Eigen/Eigenvalues>

#include "qcflow/error.hpp"

namespace qcflow {

namespace {

struct VertexCurvature {
  double k1 = 0, k2 = 0;
  Vec3 dir1 = Vec3::Zero();
  bool ok = false;
};

std::vector<int> ring(const Topology& topo, int v, int depth) {
  std::vector<int> seen{v}, frontier{v};
  for (int d = 0; d < depth; ++d) {
    std::vector<int> next;
    for (int u : frontier)
      for (int w : topo.vertex_neighbors(u))
        if (std::find(seen.begin(), seen.end(), w) == seen.end()) {
          seen.push_back(w);
          next.push_back(w);
        }
    frontier = std::move(next);
  }
  seen.erase(seen.begin());
  return seen;
}

VertexCurvature fit_vertex(const Points& X, const Topology& topo, const std::vector<FaceFrame>& frames, int v) {
  Vec3 n = Vec3::Zero();
  for (int f : topo.vertex_faces(v)) n += frames[f].area * frames[f].normal;
  VertexCurvature out;
  if (n.norm() == 0.0) return out;
  n.normalize();

  std::vector<int> nb = ring(topo, v, 2);
  if (nb.size() < 5) nb = ring(topo, v, 3);
  if (nb.size() < 5) return out;

  // Tangent basis: start from the axis least aligned with n.
  Vec3 axis = Vec3::Zero();
  Eigen::Index i_min;
  n.cwiseAbs().minCoeff(&i_min);
  axis(i_min) = 1.0;
  const Vec3 t1 = (axis - axis.dot(n) * n).normalized();
  const Vec3 t2 = n.cross(t1);

  const Vec3 p = X.row(v).transpose();
  Eigen::MatrixXd A(nb.size(), 5);
  Eigen::VectorXd h(nb.size());
  for (std::size_t i = 0; i < nb.size(); ++i) {
    const Vec3 d = X.row(nb[i]).transpose() - p;
    const double x = d.dot(t1), y = d.dot(t2);
    A.row(i) << 0.5 * x * x, x * y, 0.5 * y * y, x, y;
    h(i) = d.dot(n);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 5) return out;
  const Eigen::VectorXd c = qr.solve(h);
  const double a = c(0), b = c(1), cc = c(2), dx = c(3), dy = c(4);

  Mat2 first, second;
  first << 1 + dx * dx, dx * dy, dx * dy, 1 + dy * dy;
  second << a, b, b, cc;
  second /= std::sqrt(1 + dx * dx + dy * dy);
  // Weingarten map of the height graph; its eigenvalues are real.
  const Mat2 shape = first.inverse() * second;
  Eigen::EigenSolver<Mat2> es(shape);
  const Vec2 ev = es.eigenvalues().real();
  const Mat2 evec = es.eigenvectors().real();
  // Curvature with respect to the normal: bending away from n is positive.
  int major = (-ev(0) >= -ev(1)) ? 0 : 1;
  out.k1 = -ev(major);
  out.k2 = -ev(1 - major);
  const Vec3 Xx = t1 + dx * n, Xy = t2 + dy * n;
  Vec3 d1 = evec(0, major) * Xx + evec(1, major) * Xy;
  d1 -= d1.dot(n) * n;
  out.dir1 = d1.norm() > 0 ? Vec3(d1.normalized()) : t1;
  out.ok = true;
  return out;
}

}  // namespace

CurvatureField estimate_curvature(const Points& X, const Topology& topo, const std::vector<FaceFrame>& frames) {
  std::vector<VertexCurvature> vc(topo.n_vertices());
  for (int v = 0; v < topo.n_vertices(); ++v) vc[v] = fit_vertex(X, topo, frames, v);

  const int m = topo.n_faces();
  CurvatureField cf;
  cf.k1.assign(m, 0.0);
  cf.k2.assign(m, 0.0);
  cf.H.assign(m, 0.0);
  cf.K.assign(m, 0.0);
  cf.dir1.assign(m, Vec3::Zero());
  cf.dir2.assign(m, Vec3::Zero());
  cf.flagged.assign(m, 0);
  const Faces& F = topo.faces();
  for (int f = 0; f < m; ++f) {
    const FaceFrame& fr = frames[f];
    const Vec3 e1 = fr.E1.normalized();
    bool ok = true;
    double k1 = 0, k2 = 0;
    Mat3 T = Mat3::Zero();
    for (int k = 0; k < 3; ++k) {
      const VertexCurvature& c = vc[F(f, k)];
      ok = ok && c.ok;
      k1 += c.k1 / 3.0;
      k2 += c.k2 / 3.0;
      const Vec3 d = fr.projector * c.dir1;
      T += d * d.transpose();
    }
    if (!ok) {
      cf.flagged[f] = 1;
      cf.dir1[f] = e1;
      cf.dir2[f] = fr.normal.cross(e1);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(T);
    Vec3 d1 = es.eigenvectors().col(2);
    d1 -= d1.dot(fr.normal) * fr.normal;
    d1 = (es.eigenvalues()(2) > 1e-12 && d1.norm() > 1e-8) ? Vec3(d1.normalized()) : e1;
    if (k1 < k2) std::swap(k1, k2);
    cf.k1[f] = k1;
    cf.k2[f] = k2;
    cf.H[f] = 0.5 * (k1 + k2);
    cf.K[f] = k1 * k2;
    cf.dir1[f] = d1;
    cf.dir2[f] = fr.normal.cross(d1);
  }
  return cf;
}

void write_curvature_csv(const std::filesystem::path& path, const CurvatureField& curv) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  out << "face,k1,k2,H,K,dir1_x,dir1_y,dir1_z,dir2_x,dir2_y,dir2_z\n";
  for (int f = 0; f < curv.size(); ++f) {
    out << f << ',' << curv.k1[f] << ',' << curv.k2[f] << ',' << curv.H[f] << ',' << curv.K[f];
    for (int c = 0; c < 3; ++c) out << ',' << curv.dir1[f](c);
    for (int c = 0; c < 3; ++c) out << ',' << curv.dir2[f](c);
    out << '\n';
  }
}

}  // namespace qcflow
