#pragma once

#include <array>
#include <memory>
#include <vector>

#include "qcflow/types.hpp"

namespace qcflow {

/// Degeneracy threshold for face areas, in normalized units.
inline constexpr double kAreaEpsilon = 1e-12;

/// A single indexed triangle mesh.
struct TriMesh {
  Points vertices;
  Faces faces;
};

/// Fixed connectivity shared by every frame of a sequence.
///
/// Edges are sorted lexicographically on (min index, max index). Each edge
/// records its adjacent faces; the second slot is -1 on boundary edges, and
/// for interior edges the faces are ordered by face index. Boundary edges
/// are stored as closed loops, each edge oriented along its face's winding.
class Topology {
 public:
  Topology(Faces faces, int n_vertices);

  int n_vertices() const { return n_vertices_; }
  int n_faces() const { return static_cast<int>(faces_.rows()); }
  int n_edges() const { return static_cast<int>(edges_.rows()); }

  const Faces& faces() const { return faces_; }
  const Edges& edges() const { return edges_; }
  /// L x 2 face indices adjacent to each edge (second = -1 on the boundary).
  const Edges& edge_faces() const { return edge_faces_; }
  /// M x 3 edge index for face edges (v0,v1), (v1,v2), (v2,v0).
  const Faces& face_edges() const { return face_edges_; }

  /// Boundary edge indices in loop order.
  const std::vector<int>& boundary_edges() const { return boundary_edges_; }
  /// Oriented (from, to) vertex pair of each boundary edge, parallel to boundary_edges().
  const std::vector<std::array<int, 2>>& boundary_edge_vertices() const { return boundary_oriented_; }
  /// Start offsets of each loop into boundary_edges(), with a trailing sentinel.
  const std::vector<int>& boundary_loop_offsets() const { return loop_offsets_; }
  const std::vector<int>& interior_edges() const { return interior_edges_; }

  bool is_closed() const { return boundary_edges_.empty(); }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }

  /// One-ring vertex neighbors, sorted.
  const std::vector<int>& vertex_neighbors(int v) const { return vertex_neighbors_[v]; }
  const std::vector<int>& vertex_faces(int v) const { return vertex_faces_[v]; }

  /// Index of the edge joining a and b, or -1.
  int find_edge(int a, int b) const;

 private:
  int n_vertices_;
  Faces faces_;
  Edges edges_;
  Edges edge_faces_;
  Faces face_edges_;
  std::vector<int> boundary_edges_;
  std::vector<std::array<int, 2>> boundary_oriented_;
  std::vector<int> loop_offsets_;
  std::vector<int> interior_edges_;
  std::vector<char> boundary_vertex_;
  std::vector<std::vector<int>> vertex_neighbors_;
  std::vector<std::vector<int>> vertex_faces_;
};

/// Time sequence of triangulated surfaces with shared connectivity.
struct MeshSequence {
  std::shared_ptr<const Topology> topology;
  std::vector<Points> frames;
  std::vector<double> times;
  int dim = 3;

  int n_frames() const { return static_cast<int>(frames.size()); }
  int n_vertices() const { return topology->n_vertices(); }
  int n_faces() const { return topology->n_faces(); }
  bool planar() const { return dim == 2; }
  TriMesh mesh(int frame) const { return {frames[frame], topology->faces()}; }
};

/// Builds and validates a sequence: >= 2 frames, strictly increasing times,
/// manifold connectivity, and every face area above kAreaEpsilon in every frame.
/// Empty times default to uniform spacing on [0, 1].
MeshSequence make_sequence(Faces faces, std::vector<Points> frames, std::vector<double> times, int dim);

/// Total surface area of one frame.
double total_area(const Points& vertices, const Faces& faces);
double face_area(const Points& vertices, const Faces& faces, int f);

/// Landmark vertices with optional prescribed per-step velocities.
struct LandmarkSet {
  std::vector<int> vertices;
  /// Per step, #landmarks x 3 velocities. Empty means derived from the input trajectories.
  std::vector<Points> velocities;

  bool empty() const { return vertices.empty(); }
};

/// Checks indices are unique and in range; fills velocities from the input
/// trajectories when none were given.
LandmarkSet resolve_landmarks(const MeshSequence& seq, LandmarkSet landmarks);

}  // namespace qcflow
