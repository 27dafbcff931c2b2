#pragma once

#include <span>
#include <vector>

#include "qcflow/mesh.hpp"

namespace qcflow {

/// Scales all positions by 1/sqrt(A), A = total area of frame 0, and maps
/// times affinely onto [0, 1].
MeshSequence normalize_sequence(const MeshSequence& seq);

/// Shape-preserving slopes of the monotone piecewise-cubic Hermite
/// interpolant (Fritsch-Carlson, as in MATLAB's pchip).
std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y);
/// Evaluates the interpolant with the given knot slopes at `at`.
double pchip_eval(std::span<const double> x, std::span<const double> y, std::span<const double> slopes, double at);

/// Resamples every vertex coordinate trajectory on `n_steps` uniform times
/// spanning the input time range.
MeshSequence densify_temporal(const MeshSequence& seq, int n_steps);

struct TaubinOptions {
  int iterations = 10;
  double lambda = 0.5;
  double mu = -0.53;
};

/// Alternating lambda/mu uniform-Laplacian steps; boundary vertices stay fixed.
/// Returns the smoothed vertex positions.
Points taubin_smooth(const TriMesh& mesh, const TaubinOptions& options = {});

/// One round of Loop subdivision (boundary-aware). Old vertices keep their
/// indices; the new point of edge e (lexicographic order) is vertex V + e.
TriMesh loop_subdivide(const TriMesh& mesh);

/// Loop's interior vertex weight (1/n)[5/8 - (3/8 + cos(2 pi / n)/4)^2].
double loop_beta(int valence);

/// Projects points onto their best-fit plane, builds a Delaunay
/// triangulation, removes boundary triangles whose minimum angle is below
/// `min_angle_deg`, and lifts the result back to the input points.
TriMesh triangulate_point_cloud(const Points& points, double min_angle_deg = 15.0);

/// Bowyer-Watson Delaunay triangulation of planar points, CCW faces.
Faces delaunay_2d(const Eigen::Matrix<double, Eigen::Dynamic, 2>& points);

/// Minimum interior angle of a triangle, in degrees.
double min_angle_deg(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace qcflow
