#include "qcflow/synth.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "qcflow/error.hpp"

namespace qcflow {

namespace {

std::vector<double> uniform_times(int n_steps) {
  if (n_steps < 2) throw Error(ErrorCode::InvalidArgument, "n_steps must be at least 2");
  std::vector<double> t(n_steps);
  for (int i = 0; i < n_steps; ++i) t[i] = double(i) / double(n_steps - 1);
  return t;
}

TriMesh from_lists(const std::vector<Vec3>& verts, const std::vector<std::array<int, 3>>& tris) {
  TriMesh m;
  m.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) m.vertices.row(i) = verts[i].transpose();
  m.faces.resize(static_cast<Eigen::Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i) m.faces.row(i) << tris[i][0], tris[i][1], tris[i][2];
  return m;
}

}  // namespace

nlohmann::json synth_to_json(const SynthSpec& s) {
  return {{"kind", s.kind}, {"n_steps", s.n_steps}, {"resolution", s.resolution}, {"factor", s.factor},
          {"r0", s.r0},     {"r1_frac", s.r1_frac}, {"r1", s.r1_frac * s.r0},      {"lambda_rate", s.lambda_rate},
          {"L0", s.L0},     {"k", s.k}};
}

SynthSpec synth_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    if (j.contains("kind")) s.kind = j.at("kind").get<std::string>();
    if (j.contains("n_steps")) s.n_steps = j.at("n_steps").get<int>();
    if (j.contains("resolution")) s.resolution = j.at("resolution").get<int>();
    if (j.contains("factor")) s.factor = j.at("factor").get<double>();
    if (j.contains("r0")) s.r0 = j.at("r0").get<double>();
    if (j.contains("r1_frac")) s.r1_frac = j.at("r1_frac").get<double>();
    if (j.contains("lambda_rate")) s.lambda_rate = j.at("lambda_rate").get<double>();
    if (j.contains("L0")) s.L0 = j.at("L0").get<double>();
    if (j.contains("k")) s.k = j.at("k").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return s;
}

TriMesh disc_mesh(int rings) {
  if (rings < 1) throw Error(ErrorCode::InvalidArgument, "disc needs at least one ring");
  std::vector<Vec3> verts{Vec3::Zero()};
  std::vector<int> start{0};
  for (int i = 1; i <= rings; ++i) {
    start.push_back(static_cast<int>(verts.size()));
    const int count = 6 * i;
    const double r = double(i) / rings;
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * std::numbers::pi * j / count;
      verts.emplace_back(r * std::cos(a), r * std::sin(a), 0.0);
    }
  }
  std::vector<std::array<int, 3>> tris;
  for (int i = 1; i <= rings; ++i) {
    const int n_in = i == 1 ? 1 : 6 * (i - 1), n_out = 6 * i;
    auto inner = [&](int k) { return i == 1 ? 0 : start[i - 1] + (k % n_in); };
    auto outer = [&](int k) { return start[i] + (k % n_out); };
    // Merge the two rings by angle, emitting one triangle per advance.
    int a = 0, b = 0;
    while (a < (i == 1 ? 0 : n_in) || b < n_out) {
      const double next_in = i == 1 ? 2.0 : double(a + 1) / n_in;
      const double next_out = double(b + 1) / n_out;
      if (b < n_out && (next_out <= next_in || a >= n_in || i == 1)) {
        tris.push_back({outer(b), outer(b + 1), inner(a)});
        ++b;
      } else {
        tris.push_back({inner(a), outer(b), inner(a + 1)});
        ++a;
      }
    }
  }
  TriMesh m = from_lists(verts, tris);
  m.vertices *= 1.0 / std::sqrt(total_area(m.vertices, m.faces));
  return m;
}

TriMesh icosphere(int level) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                             {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> tris = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                          {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                          {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                          {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      return mid[key] = static_cast<int>(verts.size()) - 1;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * tris.size());
    for (const auto& t : tris) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  return from_lists(verts, tris);
}

TriMesh cube_mesh(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "cube grid needs n >= 1");
  std::vector<Vec3> verts;
  std::map<std::array<long, 3>, int> index;
  auto vertex = [&](const Vec3& p) {
    const std::array<long, 3> key{std::lround(p.x() * n), std::lround(p.y() * n), std::lround(p.z() * n)};
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    verts.push_back(p);
    return index[key] = static_cast<int>(verts.size()) - 1;
  };
  std::vector<std::array<int, 3>> tris;
  for (int axis = 0; axis < 3; ++axis)
    for (int side : {-1, 1}) {
      // (u, v, normal) right-handed with normal = side * e_axis.
      Vec3 nrm = Vec3::Zero(), u = Vec3::Zero();
      nrm(axis) = side;
      u((axis + 1) % 3) = 1.0;
      const Vec3 v = nrm.cross(u);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          auto at = [&](int a, int b) {
            return vertex(nrm + (2.0 * a / n - 1.0) * u + (2.0 * b / n - 1.0) * v);
          };
          const int p00 = at(i, j), p10 = at(i + 1, j), p11 = at(i + 1, j + 1), p01 = at(i, j + 1);
          if ((i + j) % 2 == 0) {
            tris.push_back({p00, p10, p11});
            tris.push_back({p00, p11, p01});
          } else {
            tris.push_back({p00, p10, p01});
            tris.push_back({p10, p11, p01});
          }
        }
    }
  return from_lists(verts, tris);
}

TriMesh cylinder_grid(int n_phi, int n_z, double radius, double length) {
  if (n_phi < 3 || n_z < 1) throw Error(ErrorCode::InvalidArgument, "cylinder grid too coarse");
  std::vector<Vec3> verts;
  for (int j = 0; j <= n_z; ++j)
    for (int i = 0; i < n_phi; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / n_phi;
      verts.emplace_back(radius * std::cos(phi), radius * std::sin(phi), length * j / n_z);
    }
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < n_z; ++j)
    for (int i = 0; i < n_phi; ++i) {
      const int a = j * n_phi + i, b = j * n_phi + (i + 1) % n_phi;
      const int c = (j + 1) * n_phi + (i + 1) % n_phi, d = (j + 1) * n_phi + i;
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  return from_lists(verts, tris);
}

MeshSequence gen_shear_disc(const SynthSpec& spec) {
  const int rings = std::max(1, static_cast<int>(std::lround(std::sqrt(spec.resolution / 6.0))));
  const TriMesh disc = disc_mesh(rings);
  const auto times = uniform_times(spec.n_steps);
  std::vector<Points> frames;
  for (double t : times) {
    const double s = std::pow(spec.factor, t);
    Points p = disc.vertices;
    p.col(0) *= s;
    p.col(1) /= s;
    frames.push_back(std::move(p));
  }
  return make_sequence(disc.faces, std::move(frames), times, 2);
}

MeshSequence gen_aniso_sphere(const SynthSpec& spec) {
  int level = 0;
  while (20 * (1 << (2 * (level + 1))) <= spec.resolution) ++level;
  const TriMesh sphere = icosphere(level);
  const auto times = uniform_times(spec.n_steps);
  std::vector<Points> frames;
  for (double t : times) {
    const double a = std::pow(spec.factor, t), b = 1.0 / std::sqrt(a);
    Points p = sphere.vertices;
    p.col(0) *= a;
    p.col(1) *= b;
    p.col(2) *= b;
    frames.push_back(std::move(p));
  }
  return make_sequence(sphere.faces, std::move(frames), times, 3);
}

MeshSequence gen_ricci_cylinder(const SynthSpec& spec) {
  const int n = std::max(3, static_cast<int>(std::lround(std::sqrt(spec.resolution / 2.0))));
  const TriMesh grid = cylinder_grid(n, n, 1.0, 1.0);
  const double r1 = spec.r1_frac * spec.r0;
  const auto times = uniform_times(spec.n_steps);
  std::vector<Points> frames;
  for (double t : times) {
    const double growth = std::exp(spec.lambda_rate * t);
    Points p(grid.vertices.rows(), 3);
    for (Eigen::Index v = 0; v < p.rows(); ++v) {
      const double z = grid.vertices(v, 2);
      const double phi = std::atan2(grid.vertices(v, 1), grid.vertices(v, 0));
      const double r = spec.r0 + r1 * std::sin(spec.k * z) * growth;
      const double axial = (z - r1 / (spec.r0 * spec.k) * std::cos(spec.k * z) * (growth - 1.0)) * spec.L0;
      p.row(v) << r * std::cos(phi), r * std::sin(phi), axial;
    }
    frames.push_back(std::move(p));
  }
  return make_sequence(grid.faces, std::move(frames), times, 3);
}

MeshSequence gen_linear_blend(const TriMesh& a, const TriMesh& b, int n_steps) {
  if (a.vertices.rows() != b.vertices.rows() || a.faces.rows() != b.faces.rows() || a.faces != b.faces)
    throw Error(ErrorCode::MismatchedConnectivity, "blend endpoints must share connectivity");
  const auto times = uniform_times(n_steps);
  std::vector<Points> frames;
  for (int i = 0; i < n_steps; ++i) {
    const double t = times[i];
    if (i == 0)
      frames.push_back(a.vertices);
    else if (i == n_steps - 1)
      frames.push_back(b.vertices);
    else
      frames.push_back((1.0 - t) * a.vertices + t * b.vertices);
  }
  const bool planar = a.vertices.col(2).cwiseAbs().maxCoeff() == 0.0 && b.vertices.col(2).cwiseAbs().maxCoeff() == 0.0;
  return make_sequence(a.faces, std::move(frames), times, planar ? 2 : 3);
}

MeshSequence gen_cube_to_sphere(const SynthSpec& spec) {
  const int n = std::max(1, static_cast<int>(std::lround(std::sqrt(spec.resolution / 12.0))));
  const TriMesh cube = cube_mesh(n);
  TriMesh sphere = cube;
  sphere.vertices.rowwise().normalize();
  return gen_linear_blend(cube, sphere, spec.n_steps);
}

MeshSequence generate(const SynthSpec& spec) {
  if (spec.kind == "shear_disc") return gen_shear_disc(spec);
  if (spec.kind == "aniso_sphere") return gen_aniso_sphere(spec);
  if (spec.kind == "ricci_cylinder") return gen_ricci_cylinder(spec);
  if (spec.kind == "linear_blend") return gen_cube_to_sphere(spec);
  throw Error(ErrorCode::InvalidArgument, "unknown synthetic kind '" + spec.kind + "'");
}

double enclosed_volume(const Points& vertices, const Faces& faces) {
  double vol = 0.0;
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    const Vec3 a = vertices.row(faces(f, 0)).transpose();
    const Vec3 b = vertices.row(faces(f, 1)).transpose();
    const Vec3 c = vertices.row(faces(f, 2)).transpose();
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

}  // namespace qcflow
