#include "qcflow/gradop.hpp"

#include <cstring>
#include <fstream>

#include "qcflow/error.hpp"

namespace qcflow {

GradientOperator GradientOperator::build(const Points& vertices, const Topology& topo,
                                         const std::vector<FaceFrame>& frames) {
  const auto& interior = topo.interior_edges();
  if (interior.empty()) throw Error(ErrorCode::SingularSystem, "mesh has no interior edges");
  const int m = topo.n_faces();
  const int l = static_cast<int>(interior.size());
  GradientOperator op;
  op.n_faces_ = m;
  op.isolated_.assign(m, 1);

  std::vector<Eigen::Triplet<double>> d_trip, u_trip;
  d_trip.reserve(2 * l);
  u_trip.reserve(6 * l);
  for (int row = 0; row < l; ++row) {
    const int e = interior[row];
    const int a = topo.edge_faces()(e, 0), b = topo.edge_faces()(e, 1);
    const Vec3 mid = 0.5 * (vertices.row(topo.edges()(e, 0)) + vertices.row(topo.edges()(e, 1))).transpose();
    const Vec3 to_mid = mid - frames[a].centroid;
    const Vec3 from_mid = frames[b].centroid - mid;
    op.isolated_[a] = op.isolated_[b] = 0;
    d_trip.emplace_back(row, a, -1.0);
    d_trip.emplace_back(row, b, 1.0);
    for (int c = 0; c < 3; ++c) {
      u_trip.emplace_back(row, 3 * a + c, to_mid(c));
      u_trip.emplace_back(row, 3 * b + c, from_mid(c));
    }
  }
  op.delta_.resize(l, m);
  op.delta_.setFromTriplets(d_trip.begin(), d_trip.end());
  op.U_.resize(l, 3 * m);
  op.U_.setFromTriplets(u_trip.begin(), u_trip.end());

  // Minimum-norm solutions go through U^T (U U^T)^{-1} when U has full row
  // rank, which is the generic case; otherwise use a rank-revealing dense solve.
  const SparseMatrix gram = op.U_ * SparseMatrix(op.U_.transpose());
  auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(gram);
  bool full_rank = ldlt->info() == Eigen::Success;
  if (full_rank) {
    const Eigen::VectorXd d = ldlt->vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    full_rank = d.minCoeff() > 1e-10 * dmax;
  }
  if (full_rank) {
    op.gram_ = std::move(ldlt);
  } else {
    op.fallback_ = std::make_shared<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>>(
        Eigen::MatrixXd(op.U_));
  }
  return op;
}

Eigen::MatrixXd GradientOperator::apply(const Eigen::MatrixXd& fields) const {
  if (fields.rows() != n_faces_) throw Error(ErrorCode::ShapeMismatch, "field length does not match face count");
  const Eigen::MatrixXd diffs = delta_ * fields;
  if (gram_) return U_.transpose() * gram_->solve(diffs);
  return fallback_->solve(diffs);
}

Eigen::MatrixXd GradientOperator::apply_adjoint(const Eigen::MatrixXd& grads) const {
  if (grads.rows() != 3 * n_faces_) throw Error(ErrorCode::ShapeMismatch, "gradient length does not match 3 x faces");
  if (gram_) return delta_.transpose() * gram_->solve(U_ * grads);
  return delta_.transpose() * (pseudoinverse().transpose() * grads);
}

Eigen::MatrixXd stack_tensors(const TensorField& field) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(field.size()), 9);
  for (std::size_t f = 0; f < field.size(); ++f)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out(f, 3 * i + j) = field[f](i, j);
  return out;
}

TensorField unstack_tensors(const Eigen::MatrixXd& stacked) {
  TensorField out(stacked.rows());
  for (Eigen::Index f = 0; f < stacked.rows(); ++f)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[f](i, j) = stacked(f, 3 * i + j);
  return out;
}

std::array<TensorField, 3> GradientOperator::apply(const TensorField& field) const {
  if (static_cast<int>(field.size()) != n_faces_)
    throw Error(ErrorCode::ShapeMismatch, "field length does not match face count");
  const Eigen::MatrixXd x = apply(stack_tensors(field));
  std::array<TensorField, 3> out;
  for (int alpha = 0; alpha < 3; ++alpha) {
    out[alpha].resize(n_faces_);
    for (int f = 0; f < n_faces_; ++f)
      for (int k = 0; k < 9; ++k) out[alpha][f](k / 3, k % 3) = x(3 * f + alpha, k);
  }
  return out;
}

TensorField GradientOperator::apply_adjoint(const std::array<TensorField, 3>& grads) const {
  Eigen::MatrixXd y(3 * n_faces_, 9);
  for (int alpha = 0; alpha < 3; ++alpha) {
    if (static_cast<int>(grads[alpha].size()) != n_faces_)
      throw Error(ErrorCode::ShapeMismatch, "gradient field length does not match face count");
    for (int f = 0; f < n_faces_; ++f)
      for (int k = 0; k < 9; ++k) y(3 * f + alpha, k) = grads[alpha][f](k / 3, k % 3);
  }
  return unstack_tensors(apply_adjoint(y));
}

Eigen::MatrixXd GradientOperator::solve_min_norm(const Eigen::MatrixXd& y) const {
  if (y.rows() != U_.rows()) throw Error(ErrorCode::ShapeMismatch, "right-hand side length does not match edge count");
  if (gram_) return U_.transpose() * gram_->solve(y);
  return fallback_->solve(y);
}

Eigen::MatrixXd GradientOperator::dense() const {
  return apply(Eigen::MatrixXd::Identity(n_faces_, n_faces_));
}

Eigen::MatrixXd GradientOperator::pseudoinverse() const {
  if (gram_) {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(U_.rows(), U_.rows());
    return U_.transpose() * gram_->solve(eye);
  }
  return fallback_->pseudoInverse();
}

std::uint64_t content_hash(const Points& vertices) {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(vertices.data());
  const std::size_t n = static_cast<std::size_t>(vertices.size()) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

void write_operator_cache(const std::filesystem::path& path, const Eigen::MatrixXd& P, std::uint64_t key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::uint64_t header[3] = {key, static_cast<std::uint64_t>(P.rows()), static_cast<std::uint64_t>(P.cols())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(P.data()), static_cast<std::streamsize>(P.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

bool read_operator_cache(const std::filesystem::path& path, std::uint64_t key, Eigen::MatrixXd& P) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::uint64_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] != key) return false;
  Eigen::MatrixXd tmp(static_cast<Eigen::Index>(header[1]), static_cast<Eigen::Index>(header[2]));
  in.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(tmp.size() * sizeof(double)));
  if (!in) return false;
  P = std::move(tmp);
  return true;
}

}  // namespace qcflow
