#pragma once

#include <vector>

#include "qcflow/geometry.hpp"
#include "qcflow/solver.hpp"

namespace qcflow {

/// Dilation and shear rates of one step. Normalized fields divide by the
/// largest max(|D|, S) over the step's faces, and are zero when that is zero.
struct RateField {
  Eigen::VectorXd D, S, D_norm, S_norm;
  std::vector<Vec3> axis;

  int size() const { return static_cast<int>(D.size()); }
};

RateField eigen_rates(const TensorField& G, const std::vector<FaceFrame>& frames);

/// Rates of every solved step, with frames at the optimized positions.
std::vector<RateField> rates_for_result(const SolveResult& result, const Faces& faces);

struct SmoothingSpec {
  double d_bar_fraction = 0.10;
};

/// Face-adjacency graph distances with centroid-to-centroid edge weights.
/// Returns distances from `source`, infinity outside its component.
std::vector<double> dual_graph_distances(const Topology& topo, const std::vector<FaceFrame>& frames, int source,
                                         double cutoff = -1);

/// Gaussian filter over dual-graph geodesic distance. The width is the given
/// fraction of the largest distance between two faces of the same connected
/// component; components are smoothed independently.
Eigen::VectorXd smooth_field(const Eigen::VectorXd& values, const Topology& topo, const std::vector<FaceFrame>& frames,
                             const SmoothingSpec& spec = {});

double area_mean(const Eigen::VectorXd& values, const std::vector<FaceFrame>& frames);
double area_stddev(const Eigen::VectorXd& values, const std::vector<FaceFrame>& frames);

/// Growth cost eta = <D + S> / 2, area-weighted.
double growth_cost(const RateField& rates, const std::vector<FaceFrame>& frames);

}  // namespace qcflow
