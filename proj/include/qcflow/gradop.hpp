#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "qcflow/geometry.hpp"

namespace qcflow {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Finite-difference gradient of per-face fields.
///
/// For each interior edge L between faces M < M', the difference
/// g(M') - g(M) is matched to U_L . grad, where U_L holds
/// (midpoint - centroid(M)) in face M's columns and
/// (centroid(M') - midpoint) in face M''s columns. The gradient is the
/// minimum-norm least-squares solution, grad = U^+ Delta g. Gradient
/// unknowns are laid out face-major: column 3 M + alpha.
class GradientOperator {
 public:
  /// Throws SingularSystem when the mesh has no interior edge.
  static GradientOperator build(const Points& vertices, const Topology& topo, const std::vector<FaceFrame>& frames);

  int n_faces() const { return n_faces_; }
  const SparseMatrix& delta() const { return delta_; }
  const SparseMatrix& U() const { return U_; }
  /// Faces with no interior edge; their gradient is zero.
  const std::vector<char>& isolated() const { return isolated_; }

  /// Scalar fields as columns: (M x k) -> (3M x k).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& fields) const;
  /// Transpose of apply: (3M x k) -> (M x k).
  Eigen::MatrixXd apply_adjoint(const Eigen::MatrixXd& grads) const;

  /// Componentwise gradient of a tensor field: result[alpha][M] = d_alpha G(M).
  std::array<TensorField, 3> apply(const TensorField& field) const;
  TensorField apply_adjoint(const std::array<TensorField, 3>& grads) const;

  /// Minimum-norm solution U^+ y for each column of y (L x k -> 3M x k).
  Eigen::MatrixXd solve_min_norm(const Eigen::MatrixXd& y) const;

  /// Dense 3M x M matrix P = U^+ Delta.
  Eigen::MatrixXd dense() const;
  /// Dense Moore-Penrose pseudoinverse of U (3M x L).
  Eigen::MatrixXd pseudoinverse() const;

 private:

  int n_faces_ = 0;
  SparseMatrix delta_;
  SparseMatrix U_;
  std::vector<char> isolated_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> gram_;
  std::shared_ptr<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> fallback_;
};

/// Stacks a tensor field into an M x 9 matrix (column 3 i + j holds entry (i, j)).
Eigen::MatrixXd stack_tensors(const TensorField& field);
TensorField unstack_tensors(const Eigen::MatrixXd& stacked);

/// FNV-1a 64-bit hash of raw position bytes.
std::uint64_t content_hash(const Points& vertices);

/// Binary cache of the dense operator, keyed by the hash of the positions it was built from.
void write_operator_cache(const std::filesystem::path& path, const Eigen::MatrixXd& P, std::uint64_t key);
/// Returns false when the file is missing or was built for a different key.
bool read_operator_cache(const std::filesystem::path& path, std::uint64_t key, Eigen::MatrixXd& P);

}  // namespace qcflow
