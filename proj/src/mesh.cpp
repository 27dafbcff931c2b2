#include "qcflow/mesh.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "qcflow/error.hpp"

namespace qcflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::MismatchedConnectivity: return "MismatchedConnectivity";
    case ErrorCode::NonManifold: return "NonManifold";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::ZeroArea: return "ZeroArea";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::OrientationFlip: return "OrientationFlip";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::DisconnectedMesh: return "DisconnectedMesh";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Topology::Topology(Faces faces, int n_vertices) : n_vertices_(n_vertices), faces_(std::move(faces)) {
  const int m = n_faces();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "mesh has no faces");

  std::map<std::pair<int, int>, std::vector<int>> edge_map;
  for (int f = 0; f < m; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = faces_(f, k), b = faces_(f, (k + 1) % 3);
      if (a < 0 || a >= n_vertices || b < 0 || b >= n_vertices)
        throw Error(ErrorCode::InvalidArgument, "face " + std::to_string(f) + " references a missing vertex");
      if (a == b) throw Error(ErrorCode::DegenerateFace, "face " + std::to_string(f) + " repeats a vertex");
      edge_map[{std::min(a, b), std::max(a, b)}].push_back(f);
    }
  }

  const int l = static_cast<int>(edge_map.size());
  edges_.resize(l, 2);
  edge_faces_.resize(l, 2);
  face_edges_.resize(m, 3);
  boundary_vertex_.assign(n_vertices, 0);
  int e = 0;
  for (auto& [key, adj] : edge_map) {
    if (adj.size() > 2)
      throw Error(ErrorCode::NonManifold,
                  "edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ") is shared by " +
                      std::to_string(adj.size()) + " faces");
    std::sort(adj.begin(), adj.end());
    edges_(e, 0) = key.first;
    edges_(e, 1) = key.second;
    edge_faces_(e, 0) = adj[0];
    edge_faces_(e, 1) = adj.size() == 2 ? adj[1] : -1;
    if (adj.size() == 2) {
      interior_edges_.push_back(e);
    } else {
      boundary_vertex_[key.first] = boundary_vertex_[key.second] = 1;
    }
    ++e;
  }
  for (int f = 0; f < m; ++f)
    for (int k = 0; k < 3; ++k) {
      const int a = faces_(f, k), b = faces_(f, (k + 1) % 3);
      face_edges_(f, k) = find_edge(a, b);
    }

  // Boundary loops: orient each boundary edge along its face winding and chain.
  std::map<int, std::vector<std::pair<int, int>>> next;  // from vertex -> (to vertex, edge)
  std::vector<int> raw_boundary;
  for (int i = 0; i < l; ++i) {
    if (edge_faces_(i, 1) != -1) continue;
    const int f = edge_faces_(i, 0);
    int from = -1, to = -1;
    for (int k = 0; k < 3; ++k) {
      const int a = faces_(f, k), b = faces_(f, (k + 1) % 3);
      if (std::min(a, b) == edges_(i, 0) && std::max(a, b) == edges_(i, 1)) {
        from = a;
        to = b;
      }
    }
    next[from].push_back({to, i});
    raw_boundary.push_back(i);
  }
  std::vector<char> used(l, 0);
  std::map<int, std::array<int, 2>> oriented;
  for (const auto& [from, outs] : next)
    for (const auto& [to, edge] : outs) oriented[edge] = {from, to};
  for (int start : raw_boundary) {
    if (used[start]) continue;
    loop_offsets_.push_back(static_cast<int>(boundary_edges_.size()));
    int edge = start;
    while (edge != -1 && !used[edge]) {
      used[edge] = 1;
      boundary_edges_.push_back(edge);
      boundary_oriented_.push_back(oriented[edge]);
      const int to = oriented[edge][1];
      int following = -1;
      for (const auto& [nto, nedge] : next[to])
        if (!used[nedge]) {
          following = nedge;
          break;
        }
      edge = following;
    }
  }
  loop_offsets_.push_back(static_cast<int>(boundary_edges_.size()));

  vertex_neighbors_.assign(n_vertices, {});
  vertex_faces_.assign(n_vertices, {});
  for (int i = 0; i < l; ++i) {
    vertex_neighbors_[edges_(i, 0)].push_back(edges_(i, 1));
    vertex_neighbors_[edges_(i, 1)].push_back(edges_(i, 0));
  }
  for (auto& nb : vertex_neighbors_) std::sort(nb.begin(), nb.end());
  for (int f = 0; f < m; ++f)
    for (int k = 0; k < 3; ++k) vertex_faces_[faces_(f, k)].push_back(f);
}

int Topology::find_edge(int a, int b) const {
  const int lo = std::min(a, b), hi = std::max(a, b);
  int first = 0, last = n_edges();
  while (first < last) {
    const int mid = (first + last) / 2;
    if (edges_(mid, 0) < lo || (edges_(mid, 0) == lo && edges_(mid, 1) < hi))
      first = mid + 1;
    else
      last = mid;
  }
  if (first < n_edges() && edges_(first, 0) == lo && edges_(first, 1) == hi) return first;
  return -1;
}

double face_area(const Points& vertices, const Faces& faces, int f) {
  const Vec3 p0 = vertices.row(faces(f, 0)).transpose();
  const Vec3 e1 = vertices.row(faces(f, 1)).transpose() - p0;
  const Vec3 e2 = vertices.row(faces(f, 2)).transpose() - p0;
  return 0.5 * e1.cross(e2).norm();
}

double total_area(const Points& vertices, const Faces& faces) {
  double area = 0.0;
  for (int f = 0; f < faces.rows(); ++f) area += face_area(vertices, faces, f);
  return area;
}

MeshSequence make_sequence(Faces faces, std::vector<Points> frames, std::vector<double> times, int dim) {
  if (frames.size() < 2)
    throw Error(ErrorCode::TooFewFrames, "need at least 2 frames, got " + std::to_string(frames.size()));
  if (dim != 2 && dim != 3) throw Error(ErrorCode::InvalidArgument, "dim must be 2 or 3");
  const int n_vertices = static_cast<int>(frames.front().rows());
  for (const auto& frame : frames)
    if (frame.rows() != n_vertices)
      throw Error(ErrorCode::MismatchedConnectivity, "frames have different vertex counts");
  if (times.empty()) {
    times.resize(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) times[i] = double(i) / double(frames.size() - 1);
  }
  if (times.size() != frames.size())
    throw Error(ErrorCode::ShapeMismatch, "times and frames differ in length");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw Error(ErrorCode::InvalidArgument, "times must be strictly increasing");

  auto topology = std::make_shared<const Topology>(std::move(faces), n_vertices);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (dim == 2) frames[t].col(2).setZero();
    for (int f = 0; f < topology->n_faces(); ++f)
      if (!(face_area(frames[t], topology->faces(), f) > kAreaEpsilon))
        throw Error(ErrorCode::DegenerateFace,
                    "face " + std::to_string(f) + " is degenerate at frame " + std::to_string(t));
  }
  return MeshSequence{std::move(topology), std::move(frames), std::move(times), dim};
}

LandmarkSet resolve_landmarks(const MeshSequence& seq, LandmarkSet landmarks) {
  std::set<int> seen;
  for (int v : landmarks.vertices) {
    if (v < 0 || v >= seq.n_vertices())
      throw Error(ErrorCode::InvalidArgument, "landmark vertex " + std::to_string(v) + " out of range");
    if (!seen.insert(v).second)
      throw Error(ErrorCode::InvalidArgument, "landmark vertex " + std::to_string(v) + " repeated");
  }
  const int steps = seq.n_frames() - 1;
  const int count = static_cast<int>(landmarks.vertices.size());
  if (landmarks.velocities.empty()) {
    for (int n = 0; n < steps; ++n) {
      const double dt = seq.times[n + 1] - seq.times[n];
      Points v(count, 3);
      for (int i = 0; i < count; ++i) {
        const int idx = landmarks.vertices[i];
        v.row(i) = (seq.frames[n + 1].row(idx) - seq.frames[n].row(idx)) / dt;
      }
      landmarks.velocities.push_back(std::move(v));
    }
  } else if (static_cast<int>(landmarks.velocities.size()) != steps) {
    throw Error(ErrorCode::ShapeMismatch, "landmark velocities must cover every step");
  } else {
    for (auto& v : landmarks.velocities) {
      if (v.rows() != count) throw Error(ErrorCode::ShapeMismatch, "landmark velocity count mismatch");
      if (seq.planar()) v.col(2).setZero();
    }
  }
  return landmarks;
}

}  // namespace qcflow
