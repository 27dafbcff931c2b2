#pragma once

#include <filesystem>
#include <vector>

#include "qcflow/geometry.hpp"

namespace qcflow {

/// Per-face principal curvatures (k1 >= k2) and tangent principal directions.
/// Positive curvature bends away from the normal, so convex closed surfaces
/// with outward normals have H > 0.
struct CurvatureField {
  std::vector<double> k1, k2, H, K;
  std::vector<Vec3> dir1, dir2;
  /// Faces touching a vertex whose quadric fit was rank deficient; these carry zero curvature.
  std::vector<char> flagged;

  int size() const { return static_cast<int>(k1.size()); }
};

/// Per-vertex quadric height fit over the 2-ring (3-ring when the 2-ring has
/// fewer than 5 vertices), averaged onto faces.
CurvatureField estimate_curvature(const Points& vertices, const Topology& topo, const std::vector<FaceFrame>& frames);

/// Columns: face, k1, k2, H, K, dir1 xyz, dir2 xyz.
void write_curvature_csv(const std::filesystem::path& path, const CurvatureField& curv);

}  // namespace qcflow
