#pragma once

// Manifold diffusion for regression: a sparse cosine kNN affinity graph, its
// symmetric normalization, the diffusion solve (I - alpha Wn) S* = S, and the
// top-k_v weighted label readout.

#include "mdreg/types.hpp"

#include <Eigen/SparseCore>

#include <span>
#include <string>
#include <vector>

namespace mdreg::mdr {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Isolated nodes get this degree in D^{-1/2}.
inline constexpr double kDegreeFloor = 1e-12;

class AffinityGraph {
 public:
  /// Takes a symmetric, nonnegative, zero-diagonal weight matrix.
  /// Throws ParameterError when any of those properties fails.
  static AffinityGraph from_weights(SparseMatrix weights);

  Eigen::Index size() const { return weights_.rows(); }
  const SparseMatrix& weights() const { return weights_; }
  const SparseMatrix& normalized() const { return normalized_; }
  const Vector& degrees() const { return degrees_; }
  const std::vector<std::size_t>& isolated() const { return isolated_; }
  /// I - Wn. Not used by the solvers.
  SparseMatrix laplacian() const;

 private:
  SparseMatrix weights_;
  SparseMatrix normalized_;
  Vector degrees_;
  std::vector<std::size_t> isolated_;
};

struct GraphBuild {
  AffinityGraph graph;
  std::vector<std::string> warnings;
};

/// W_ij = max(v_i . v_j, 0)^gamma on each node's k most cosine-similar
/// neighbours (ties to the lower index), symmetrized by elementwise max.
/// Throws ParameterError when k >= n or k < 1.
GraphBuild build_affinity(const RowMatrix& vectors, int k, double gamma);
inline GraphBuild build_affinity(const EmbeddingSet& set, int k, double gamma) {
  return build_affinity(set.vectors, k, gamma);
}

/// One-hot columns marking support rows among n graph nodes.
class SupportMatrix {
 public:
  /// Throws ParameterError on out-of-range or repeated rows.
  SupportMatrix(Eigen::Index nodes, std::vector<std::size_t> support_rows);

  Eigen::Index nodes() const { return nodes_; }
  Eigen::Index columns() const { return static_cast<Eigen::Index>(rows_.size()); }
  /// Graph row of support column j.
  const std::vector<std::size_t>& support_rows() const { return rows_; }
  Eigen::MatrixXd dense() const;

 private:
  Eigen::Index nodes_;
  std::vector<std::size_t> rows_;
};

struct SolveOptions {
  double tolerance = 1e-10;       // relative residual per column
  long max_iterations = -1;       // -1 means 10 n
  Eigen::Index dense_fallback_limit = 2000;
};

struct DiffusionResult {
  Eigen::MatrixXd scores;  // n x k
  long iterations = 0;     // summed over columns
  bool used_dense_fallback = false;
};

/// Solves (I - alpha Wn) S* = S column by column with conjugate gradients.
/// Falls back to dense LU for n <= 2000 when CG stalls; otherwise throws
/// SolverError with the residual reached.
DiffusionResult diffuse_closed(const AffinityGraph& graph, const SupportMatrix& support, double alpha,
                               const SolveOptions& options = {});

/// F <- alpha Wn F + (1 - alpha) S from F = S until the max-norm change is
/// below `tolerance`; returns F / (1 - alpha) so it matches diffuse_closed.
/// alpha may be 0 here. Throws SolverError with the last change on timeout.
DiffusionResult diffuse_iterative(const AffinityGraph& graph, const SupportMatrix& support, double alpha,
                                  double tolerance = 1e-12, long max_iterations = 100000);

/// Per row: weighted mean of the labels of the k_v highest scores.
/// Ties go to the lower column; negative scores count as 0; rows whose
/// selected weights are all 0 take the plain mean of the selected labels.
std::vector<double> predict_mdr(const Eigen::MatrixXd& scores, std::span<const double> support_labels, int k_v);

}  // namespace mdreg::mdr
