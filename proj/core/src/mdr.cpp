#include "mdreg/mdr.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mdreg::mdr {

AffinityGraph AffinityGraph::from_weights(SparseMatrix weights) {
  if (weights.rows() != weights.cols()) throw ParameterError("affinity matrix must be square");
  weights.makeCompressed();
  const Eigen::Index n = weights.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(weights, i); it; ++it) {
      const double w = it.value();
      if (!std::isfinite(w) || w < 0.0) throw ParameterError("affinity weights must be finite and nonnegative");
      if (it.col() == i && w != 0.0) throw ParameterError("affinity matrix must have a zero diagonal");
      if (weights.coeff(it.col(), i) != w) throw ParameterError("affinity matrix must be symmetric");
    }
  }

  AffinityGraph g;
  g.weights_ = std::move(weights);
  g.degrees_ = Vector::Zero(n);
  // Row sums in storage order keep the result independent of any schedule.
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(g.weights_, i); it; ++it) s += it.value();
    g.degrees_(i) = s;
    if (s == 0.0) g.isolated_.push_back(static_cast<std::size_t>(i));
  }
  Vector inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(std::max(g.degrees_(i), kDegreeFloor));

  g.normalized_ = g.weights_;
  for (Eigen::Index i = 0; i < n; ++i)
    for (SparseMatrix::InnerIterator it(g.normalized_, i); it; ++it)
      it.valueRef() *= inv_sqrt(i) * inv_sqrt(it.col());
  return g;
}

SparseMatrix AffinityGraph::laplacian() const {
  SparseMatrix eye(size(), size());
  eye.setIdentity();
  return eye - normalized_;
}

GraphBuild build_affinity(const RowMatrix& vectors, int k, double gamma) {
  const Eigen::Index n = vectors.rows();
  if (k < 1) throw ParameterError("graph k must be >= 1");
  if (k >= n) throw ParameterError("graph k = " + std::to_string(k) + " must be < n = " + std::to_string(n));
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k) * 2);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Vector sims(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sims.noalias() = vectors * vectors.row(i).transpose();
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (sims(a) != sims(b)) return sims(a) > sims(b);
      return a < b;
    });
    for (int r = 0; r < k; ++r) {
      const Eigen::Index j = order[static_cast<std::size_t>(r)];
      const double w = std::pow(std::clamp(sims(j), 0.0, 1.0), gamma);
      if (w == 0.0) continue;
      triplets.emplace_back(i, j, w);
      triplets.emplace_back(j, i, w);
    }
  }
  SparseMatrix weights(n, n);
  weights.setFromTriplets(triplets.begin(), triplets.end(), [](double a, double b) { return std::max(a, b); });

  GraphBuild out{AffinityGraph::from_weights(std::move(weights)), {}};
  for (auto node : out.graph.isolated())
    out.warnings.push_back("isolated node " + std::to_string(node) + " (no positive affinities)");
  return out;
}

SupportMatrix::SupportMatrix(Eigen::Index nodes, std::vector<std::size_t> support_rows)
    : nodes_(nodes), rows_(std::move(support_rows)) {
  if (rows_.empty()) throw ParameterError("support matrix needs at least one column");
  std::vector<std::size_t> sorted = rows_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ParameterError("support rows must be distinct");
  if (sorted.back() >= static_cast<std::size_t>(nodes)) throw ParameterError("support row out of range");
}

Eigen::MatrixXd SupportMatrix::dense() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nodes_, columns());
  for (Eigen::Index j = 0; j < columns(); ++j) s(static_cast<Eigen::Index>(rows_[static_cast<std::size_t>(j)]), j) = 1.0;
  return s;
}

namespace {

void check_sizes(const AffinityGraph& graph, const SupportMatrix& support) {
  if (graph.size() != support.nodes()) throw ParameterError("support matrix and graph sizes differ");
}

}  // namespace

DiffusionResult diffuse_closed(const AffinityGraph& graph, const SupportMatrix& support, double alpha,
                               const SolveOptions& options) {
  check_sizes(graph, support);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  const Eigen::Index n = graph.size();
  const long max_iter = options.max_iterations < 0 ? 10 * static_cast<long>(n) : options.max_iterations;

  SparseMatrix system(n, n);
  system.setIdentity();
  system -= alpha * graph.normalized();
  // Plain CG: the stopping rule is then exactly |r| <= tolerance * |b| per column.
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IdentityPreconditioner> cg;
  cg.setTolerance(options.tolerance);
  cg.setMaxIterations(max_iter);
  cg.compute(system);

  DiffusionResult result;
  result.scores = Eigen::MatrixXd::Zero(n, support.columns());
  Vector b(n);
  double worst_residual = 0.0;
  bool failed = false;
  for (Eigen::Index j = 0; j < support.columns(); ++j) {
    b.setZero();
    b(static_cast<Eigen::Index>(support.support_rows()[static_cast<std::size_t>(j)])) = 1.0;
    result.scores.col(j) = cg.solve(b);
    result.iterations += static_cast<long>(cg.iterations());
    if (cg.info() != Eigen::Success || !result.scores.col(j).allFinite()) {
      failed = true;
      worst_residual = cg.error();
      break;
    }
  }
  if (!failed) return result;

  if (n > options.dense_fallback_limit)
    throw SolverError("conjugate gradient did not converge (relative residual " + std::to_string(worst_residual) +
                      ")");
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(system)};
  result.scores = lu.solve(support.dense());
  if (!result.scores.allFinite()) throw SolverError("dense fallback produced non-finite scores");
  result.used_dense_fallback = true;
  return result;
}

DiffusionResult diffuse_iterative(const AffinityGraph& graph, const SupportMatrix& support, double alpha,
                                  double tolerance, long max_iterations) {
  check_sizes(graph, support);
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in [0, 1)");
  const Eigen::MatrixXd s = support.dense();
  Eigen::MatrixXd f = s;
  DiffusionResult result;
  double delta = 0.0;
  for (long it = 0; it < max_iterations; ++it) {
    Eigen::MatrixXd next = alpha * (graph.normalized() * f) + (1.0 - alpha) * s;
    delta = (next - f).cwiseAbs().maxCoeff();
    f = std::move(next);
    ++result.iterations;
    if (delta < tolerance) {
      result.scores = f / (1.0 - alpha);
      return result;
    }
  }
  throw SolverError("fixed-point iteration did not converge (last change " + std::to_string(delta) + ")");
}

std::vector<double> predict_mdr(const Eigen::MatrixXd& scores, std::span<const double> support_labels, int k_v) {
  const Eigen::Index k = scores.cols();
  if (static_cast<Eigen::Index>(support_labels.size()) != k)
    throw ParameterError("one support label per score column required");
  if (k_v < 1 || k_v > k)
    throw ParameterError("k_v = " + std::to_string(k_v) + " must lie in [1, " + std::to_string(k) + "]");

  std::vector<double> out(static_cast<std::size_t>(scores.rows()));
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
    std::partial_sort(cols.begin(), cols.begin() + k_v, cols.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (scores(i, a) != scores(i, b)) return scores(i, a) > scores(i, b);
      return a < b;
    });
    double num = 0.0, den = 0.0, plain = 0.0;
    for (int r = 0; r < k_v; ++r) {
      const Eigen::Index j = cols[static_cast<std::size_t>(r)];
      const double w = std::max(scores(i, j), 0.0);
      const double y = support_labels[static_cast<std::size_t>(j)];
      num += w * y;
      den += w;
      plain += y;
    }
    out[static_cast<std::size_t>(i)] = den > 0.0 ? num / den : plain / k_v;
  }
  return out;
}

}  // namespace mdreg::mdr
