#include "qcflow/post.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "qcflow/error.hpp"
#include "qcflow/parallel.hpp"
#include "qcflow/strain.hpp"

namespace qcflow {

RateField eigen_rates(const TensorField& G, const std::vector<FaceFrame>& frames) {
  if (G.size() != frames.size()) throw Error(ErrorCode::ShapeMismatch, "tensor field and frames differ in length");
  const int m = static_cast<int>(G.size());
  RateField r;
  r.D.resize(m);
  r.S.resize(m);
  r.axis.resize(m);
  double peak = 0.0;
  for (int f = 0; f < m; ++f) {
    const Rates x = dilation_shear_rates(G[f], frames[f].normal);
    r.D(f) = x.dilation;
    r.S(f) = x.shear;
    r.axis[f] = x.axis;
    peak = std::max({peak, std::abs(x.dilation), x.shear});
  }
  if (peak > 0) {
    r.D_norm = r.D / peak;
    r.S_norm = r.S / peak;
  } else {
    r.D_norm = Eigen::VectorXd::Zero(m);
    r.S_norm = Eigen::VectorXd::Zero(m);
  }
  return r;
}

std::vector<RateField> rates_for_result(const SolveResult& result, const Faces& faces) {
  std::vector<RateField> out;
  for (int n = 0; n < result.n_steps(); ++n)
    out.push_back(eigen_rates(result.growth[n], face_frames(result.positions[n], faces)));
  return out;
}

std::vector<double> dual_graph_distances(const Topology& topo, const std::vector<FaceFrame>& frames, int source,
                                         double cutoff) {
  const int m = topo.n_faces();
  std::vector<double> dist(m, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  const Faces& FE = topo.face_edges();
  const Edges& EF = topo.edge_faces();
  while (!heap.empty()) {
    const auto [d, f] = heap.top();
    heap.pop();
    if (d > dist[f]) continue;
    for (int k = 0; k < 3; ++k) {
      const int e = FE(f, k);
      const int g = EF(e, 0) == f ? EF(e, 1) : EF(e, 0);
      if (g < 0) continue;
      const double nd = d + (frames[f].centroid - frames[g].centroid).norm();
      if (cutoff > 0 && nd > cutoff) continue;
      if (nd < dist[g]) {
        dist[g] = nd;
        heap.push({nd, g});
      }
    }
  }
  return dist;
}

Eigen::VectorXd smooth_field(const Eigen::VectorXd& values, const Topology& topo, const std::vector<FaceFrame>& frames,
                             const SmoothingSpec& spec) {
  const int m = topo.n_faces();
  if (values.size() != m) throw Error(ErrorCode::ShapeMismatch, "field length does not match face count");
  if (!(spec.d_bar_fraction > 0 && spec.d_bar_fraction <= 1))
    throw Error(ErrorCode::InvalidArgument, "d_bar_fraction must lie in (0, 1]");

  // Connected components of the dual graph.
  std::vector<int> component(m, -1);
  int n_comp = 0;
  for (int f = 0; f < m; ++f) {
    if (component[f] >= 0) continue;
    const auto d = dual_graph_distances(topo, frames, f);
    for (int g = 0; g < m; ++g)
      if (std::isfinite(d[g])) component[g] = n_comp;
    ++n_comp;
  }

  std::vector<double> eccentricity(m, 0.0);
  parallel_for(m, [&](int f) {
    const auto d = dual_graph_distances(topo, frames, f);
    double far = 0.0;
    for (double x : d)
      if (std::isfinite(x)) far = std::max(far, x);
    eccentricity[f] = far;
  });
  std::vector<double> d_bar(n_comp, 0.0);
  for (int f = 0; f < m; ++f) d_bar[component[f]] = std::max(d_bar[component[f]], eccentricity[f]);
  for (double& d : d_bar) d *= spec.d_bar_fraction;

  Eigen::VectorXd out(m);
  parallel_for(m, [&](int f) {
    const double width = d_bar[component[f]];
    if (!(width > 0)) {
      out(f) = values(f);
      return;
    }
    const auto d = dual_graph_distances(topo, frames, f, 4.0 * width);
    double num = 0.0, den = 0.0;
    for (int g = 0; g < m; ++g) {
      if (!std::isfinite(d[g])) continue;
      const double w = std::exp(-d[g] * d[g] / (2.0 * width * width));
      num += w * values(g);
      den += w;
    }
    out(f) = num / den;
  });
  return out;
}

double area_mean(const Eigen::VectorXd& values, const std::vector<FaceFrame>& frames) {
  double num = 0.0, den = 0.0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    num += frames[f].area * values(static_cast<Eigen::Index>(f));
    den += frames[f].area;
  }
  return num / den;
}

double area_stddev(const Eigen::VectorXd& values, const std::vector<FaceFrame>& frames) {
  const double mu = area_mean(values, frames);
  double num = 0.0, den = 0.0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const double d = values(static_cast<Eigen::Index>(f)) - mu;
    num += frames[f].area * d * d;
    den += frames[f].area;
  }
  return std::sqrt(num / den);
}

double growth_cost(const RateField& rates, const std::vector<FaceFrame>& frames) {
  return 0.5 * area_mean(rates.D + rates.S, frames);
}

}  // namespace qcflow
