#include "qcflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>

#include "qcflow/error.hpp"

namespace qcflow {

MeshSequence normalize_sequence(const MeshSequence& seq) {
  const double area = total_area(seq.frames.front(), seq.topology->faces());
  if (!(area > 0.0)) throw Error(ErrorCode::ZeroArea, "initial surface has zero area");
  const double scale = 1.0 / std::sqrt(area);
  MeshSequence out = seq;
  for (auto& frame : out.frames) frame *= scale;
  const double t0 = seq.times.front(), span = seq.times.back() - seq.times.front();
  for (auto& t : out.times) t = (t - t0) / span;
  out.times.front() = 0.0;
  out.times.back() = 1.0;
  return out;
}

namespace {

int sign(double v) { return (v > 0) - (v < 0); }

double end_slope(double h0, double h1, double del0, double del1) {
  double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
  if (sign(d) != sign(del0)) {
    d = 0.0;
  } else if (sign(del0) != sign(del1) && std::abs(d) > std::abs(3.0 * del0)) {
    d = 3.0 * del0;
  }
  return d;
}

}  // namespace

std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorCode::InvalidArgument, "pchip needs >= 2 matching knots");
  std::vector<double> h(n - 1), del(n - 1), d(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    del[k] = (y[k + 1] - y[k]) / h[k];
  }
  if (n == 2) {
    d[0] = d[1] = del[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (sign(del[k - 1]) * sign(del[k]) > 0) {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
    }
  }
  d[0] = end_slope(h[0], h[1], del[0], del[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  return d;
}

double pchip_eval(std::span<const double> x, std::span<const double> y, std::span<const double> slopes, double at) {
  const std::size_t n = x.size();
  std::size_t k = std::upper_bound(x.begin(), x.end(), at) - x.begin();
  k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
  const double h = x[k + 1] - x[k];
  const double s = (at - x[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y[k] + (s3 - 2 * s2 + s) * h * slopes[k] + (-2 * s3 + 3 * s2) * y[k + 1] +
         (s3 - s2) * h * slopes[k + 1];
}

MeshSequence densify_temporal(const MeshSequence& seq, int n_steps) {
  if (n_steps < seq.n_frames())
    throw Error(ErrorCode::InvalidArgument, "n_steps must be at least the number of keyframes");
  const int keys = seq.n_frames();
  const double t0 = seq.times.front(), t1 = seq.times.back();
  std::vector<double> out_times(n_steps);
  for (int i = 0; i < n_steps; ++i) out_times[i] = t0 + (t1 - t0) * double(i) / double(n_steps - 1);
  out_times.back() = t1;

  std::vector<Points> frames(n_steps, Points::Zero(seq.n_vertices(), 3));
  std::vector<double> values(keys);
  for (int v = 0; v < seq.n_vertices(); ++v)
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < keys; ++k) values[k] = seq.frames[k](v, c);
      const auto slopes = pchip_slopes(seq.times, values);
      for (int i = 0; i < n_steps; ++i) frames[i](v, c) = pchip_eval(seq.times, values, slopes, out_times[i]);
    }
  return make_sequence(seq.topology->faces(), std::move(frames), std::move(out_times), seq.dim);
}

Points taubin_smooth(const TriMesh& mesh, const TaubinOptions& options) {
  const Topology topo(mesh.faces, static_cast<int>(mesh.vertices.rows()));
  Points x = mesh.vertices;
  auto step = [&](double factor) {
    Points next = x;
    for (int v = 0; v < topo.n_vertices(); ++v) {
      const auto& nb = topo.vertex_neighbors(v);
      if (topo.is_boundary_vertex(v) || nb.empty()) continue;
      Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
      for (int u : nb) mean += x.row(u);
      mean /= double(nb.size());
      next.row(v) += factor * (mean - x.row(v));
    }
    x = std::move(next);
  };
  for (int it = 0; it < options.iterations; ++it) {
    step(options.lambda);
    step(options.mu);
  }
  return x;
}

double loop_beta(int valence) {
  const double n = valence;
  const double c = 3.0 / 8.0 + 0.25 * std::cos(2.0 * std::numbers::pi / n);
  return (5.0 / 8.0 - c * c) / n;
}

TriMesh loop_subdivide(const TriMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.rows());
  const Topology topo(mesh.faces, nv);
  const Faces& F = topo.faces();
  const Edges& E = topo.edges();
  const Edges& EF = topo.edge_faces();
  const int ne = topo.n_edges();

  auto opposite = [&](int f, int a, int b) {
    for (int k = 0; k < 3; ++k)
      if (F(f, k) != a && F(f, k) != b) return F(f, k);
    return -1;
  };

  TriMesh out;
  out.vertices.resize(nv + ne, 3);
  for (int e = 0; e < ne; ++e) {
    const int a = E(e, 0), b = E(e, 1);
    if (EF(e, 1) < 0) {
      out.vertices.row(nv + e) = 0.5 * (mesh.vertices.row(a) + mesh.vertices.row(b));
    } else {
      const int c = opposite(EF(e, 0), a, b), d = opposite(EF(e, 1), a, b);
      out.vertices.row(nv + e) = 0.375 * (mesh.vertices.row(a) + mesh.vertices.row(b)) +
                                 0.125 * (mesh.vertices.row(c) + mesh.vertices.row(d));
    }
  }
  for (int v = 0; v < nv; ++v) {
    const auto& nb = topo.vertex_neighbors(v);
    if (topo.is_boundary_vertex(v)) {
      Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
      int count = 0;
      for (int u : nb) {
        const int e = topo.find_edge(u, v);
        if (EF(e, 1) < 0) {
          sum += mesh.vertices.row(u);
          ++count;
        }
      }
      out.vertices.row(v) = count == 2 ? Eigen::RowVector3d(0.75 * mesh.vertices.row(v) + 0.125 * sum)
                                       : Eigen::RowVector3d(mesh.vertices.row(v));
    } else {
      const int n = static_cast<int>(nb.size());
      const double beta = loop_beta(n);
      Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
      for (int u : nb) sum += mesh.vertices.row(u);
      out.vertices.row(v) = (1.0 - n * beta) * mesh.vertices.row(v) + beta * sum;
    }
  }
  out.faces.resize(4 * topo.n_faces(), 3);
  const Faces& FE = topo.face_edges();
  for (int f = 0; f < topo.n_faces(); ++f) {
    const int a = F(f, 0), b = F(f, 1), c = F(f, 2);
    const int ab = nv + FE(f, 0), bc = nv + FE(f, 1), ca = nv + FE(f, 2);
    out.faces.row(4 * f + 0) << a, ab, ca;
    out.faces.row(4 * f + 1) << b, bc, ab;
    out.faces.row(4 * f + 2) << c, ca, bc;
    out.faces.row(4 * f + 3) << ab, bc, ca;
  }
  return out;
}

double min_angle_deg(const Vec3& a, const Vec3& b, const Vec3& c) {
  auto angle = [](const Vec3& p, const Vec3& q, const Vec3& r) {
    const Vec3 u = q - p, v = r - p;
    return std::atan2(u.cross(v).norm(), u.dot(v));
  };
  const double m = std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
  return m * 180.0 / std::numbers::pi;
}

Faces delaunay_2d(const Eigen::Matrix<double, Eigen::Dynamic, 2>& input) {
  const int n = static_cast<int>(input.rows());
  if (n < 3) throw Error(ErrorCode::DegenerateCloud, "need at least 3 points");
  const Eigen::RowVector2d lo = input.colwise().minCoeff(), hi = input.colwise().maxCoeff();
  const Eigen::RowVector2d center = 0.5 * (lo + hi);
  const double scale = std::max((hi - lo).maxCoeff(), 1e-300);

  std::vector<Vec2> pts(n + 3);
  for (int i = 0; i < n; ++i) pts[i] = ((input.row(i) - center) / scale).transpose();
  pts[n] = Vec2(-100.0, -100.0);
  pts[n + 1] = Vec2(100.0, -100.0);
  pts[n + 2] = Vec2(0.0, 100.0);

  struct Tri {
    std::array<int, 3> v;
    Vec2 cc;
    double r2;
  };
  auto make = [&](int a, int b, int c) {
    const Vec2 &A = pts[a], &B = pts[b], &C = pts[c];
    if ((B - A).x() * (C - A).y() - (B - A).y() * (C - A).x() < 0) std::swap(b, c);
    const Vec2 &P = pts[a], &Q = pts[b], &R = pts[c];
    const double d = 2.0 * (P.x() * (Q.y() - R.y()) + Q.x() * (R.y() - P.y()) + R.x() * (P.y() - Q.y()));
    const double p2 = P.squaredNorm(), q2 = Q.squaredNorm(), r2 = R.squaredNorm();
    Vec2 cc((p2 * (Q.y() - R.y()) + q2 * (R.y() - P.y()) + r2 * (P.y() - Q.y())) / d,
            (p2 * (R.x() - Q.x()) + q2 * (P.x() - R.x()) + r2 * (Q.x() - P.x())) / d);
    return Tri{{a, b, c}, cc, (P - cc).squaredNorm()};
  };

  std::vector<Tri> tris{make(n, n + 1, n + 2)};
  for (int i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    std::vector<Tri> keep;
    std::map<std::pair<int, int>, int> boundary;  // directed edge -> count
    for (const auto& t : tris) {
      if ((p - t.cc).squaredNorm() < t.r2 * (1.0 - 1e-12)) {
        for (int k = 0; k < 3; ++k) boundary[{t.v[k], t.v[(k + 1) % 3]}]++;
      } else {
        keep.push_back(t);
      }
    }
    for (const auto& [edge, count] : boundary) {
      if (boundary.count({edge.second, edge.first})) continue;
      keep.push_back(make(edge.first, edge.second, i));
    }
    tris = std::move(keep);
  }

  std::vector<std::array<int, 3>> result;
  for (const auto& t : tris)
    if (t.v[0] < n && t.v[1] < n && t.v[2] < n) result.push_back(t.v);
  std::sort(result.begin(), result.end());
  Faces faces(static_cast<Eigen::Index>(result.size()), 3);
  for (std::size_t f = 0; f < result.size(); ++f) faces.row(f) << result[f][0], result[f][1], result[f][2];
  return faces;
}

TriMesh triangulate_point_cloud(const Points& points, double min_angle) {
  const auto count = points.rows();
  if (count < 3) throw Error(ErrorCode::DegenerateCloud, "need at least 3 points");
  const Eigen::RowVector3d mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  const Mat3 cov = centered.transpose() * centered / double(count);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Eigen::Vector3d ev = eig.eigenvalues();
  if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-300)))
    throw Error(ErrorCode::DegenerateCloud, "point cloud has rank < 2");
  const Vec3 u = eig.eigenvectors().col(2), v = eig.eigenvectors().col(1);

  Eigen::Matrix<double, Eigen::Dynamic, 2> plane(count, 2);
  plane.col(0) = centered * u;
  plane.col(1) = centered * v;
  Faces faces = delaunay_2d(plane);

  // Peel sliver triangles off the boundary until none remain.
  std::vector<char> alive(faces.rows(), 1);
  for (bool changed = true; changed;) {
    changed = false;
    std::map<std::pair<int, int>, int> uses;
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
      if (!alive[f]) continue;
      for (int k = 0; k < 3; ++k) {
        const int a = faces(f, k), b = faces(f, (k + 1) % 3);
        uses[{std::min(a, b), std::max(a, b)}]++;
      }
    }
    int remaining = static_cast<int>(std::count(alive.begin(), alive.end(), 1));
    for (Eigen::Index f = 0; f < faces.rows() && remaining > 1; ++f) {
      if (!alive[f]) continue;
      bool on_boundary = false;
      for (int k = 0; k < 3; ++k) {
        const int a = faces(f, k), b = faces(f, (k + 1) % 3);
        on_boundary = on_boundary || uses[{std::min(a, b), std::max(a, b)}] == 1;
      }
      if (!on_boundary) continue;
      const Vec3 a(plane(faces(f, 0), 0), plane(faces(f, 0), 1), 0.0);
      const Vec3 b(plane(faces(f, 1), 0), plane(faces(f, 1), 1), 0.0);
      const Vec3 c(plane(faces(f, 2), 0), plane(faces(f, 2), 1), 0.0);
      if (min_angle_deg(a, b, c) < min_angle) {
        alive[f] = 0;
        --remaining;
        changed = true;
      }
    }
  }

  std::vector<int> remap(count, -1);
  int next = 0;
  std::vector<std::array<int, 3>> kept;
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    if (!alive[f]) continue;
    kept.push_back({faces(f, 0), faces(f, 1), faces(f, 2)});
  }
  for (int i = 0; i < count; ++i)
    for (const auto& t : kept)
      if (t[0] == i || t[1] == i || t[2] == i) {
        remap[i] = next++;
        break;
      }
  TriMesh mesh;
  mesh.vertices.resize(next, 3);
  for (int i = 0; i < count; ++i)
    if (remap[i] >= 0) mesh.vertices.row(remap[i]) = points.row(i);
  mesh.faces.resize(static_cast<Eigen::Index>(kept.size()), 3);
  for (std::size_t f = 0; f < kept.size(); ++f)
    mesh.faces.row(f) << remap[kept[f][0]], remap[kept[f][1]], remap[kept[f][2]];
  return mesh;
}

}  // namespace qcflow
