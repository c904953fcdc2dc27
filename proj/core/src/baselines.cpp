#include "mdreg/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mdreg::baselines {

namespace {
constexpr double kDistanceEpsilon = 1e-12;
constexpr double kSingularRatio = 1e-12;
}  // namespace

std::vector<double> predict_knn(const RowMatrix& queries, const RowMatrix& support_vectors,
                                std::span<const double> support_labels, int k) {
  const auto m = static_cast<std::size_t>(support_vectors.rows());
  if (m == 0) throw ParameterError("empty support set");
  if (support_labels.size() != m) throw ParameterError("one label per support vector required");
  if (k < 1 || static_cast<std::size_t>(k) > m)
    throw ParameterError("knn k = " + std::to_string(k) + " must lie in [1, " + std::to_string(m) + "]");
  if (queries.cols() != support_vectors.cols()) throw ParameterError("query/support dimensions differ");

  std::vector<double> out(static_cast<std::size_t>(queries.rows()));
  std::vector<double> dist(m);
  std::vector<std::size_t> order(m);
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (std::size_t s = 0; s < m; ++s)
      dist[s] = (support_vectors.row(static_cast<Eigen::Index>(s)) - queries.row(q)).norm();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return a < b;
    });
    double num = 0.0, den = 0.0;
    for (int r = 0; r < k; ++r) {
      const auto s = order[static_cast<std::size_t>(r)];
      const double w = 1.0 / (dist[s] + kDistanceEpsilon);
      num += w * support_labels[s];
      den += w;
    }
    out[static_cast<std::size_t>(q)] = num / den;
  }
  return out;
}

std::vector<double> predict_knn(const RowMatrix& queries, const EmbeddingSet& target, const SupportSet& support,
                                int k) {
  RowMatrix vectors(static_cast<Eigen::Index>(support.size()), target.vectors.cols());
  for (std::size_t i = 0; i < support.size(); ++i)
    vectors.row(static_cast<Eigen::Index>(i)) = target.vectors.row(static_cast<Eigen::Index>(support.indices[i]));
  return predict_knn(queries, vectors, support.labels, k);
}

std::vector<double> LinearHead::predict_all(const RowMatrix& vectors) const {
  if (vectors.cols() != weight.size()) throw ParameterError("head dimension does not match vectors");
  const Vector p = vectors * weight;
  std::vector<double> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) + bias;
  return out;
}

LinearHead fit_linear_probe(const RowMatrix& vectors, std::span<const double> labels, double ridge_lambda) {
  const Eigen::Index n = vectors.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) throw ParameterError("one label per row required");
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) throw ParameterError("ridge_lambda must be >= 0");

  // Centering removes the unpenalized intercept from the system.
  const Eigen::Map<const Vector> y(labels.data(), n);
  const Eigen::RowVectorXd x_mean = vectors.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = vectors.rowwise() - x_mean;
  const Vector yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += ridge_lambda;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  if (!(eig.eigenvalues().minCoeff() > kSingularRatio * std::max(top, 1.0)))
    throw SolverError("singular normal equations; use ridge_lambda > 0");

  LinearHead head;
  head.ridge_lambda = ridge_lambda;
  head.weight = gram.ldlt().solve(xc.transpose() * yc);
  head.bias = y_mean - x_mean.dot(head.weight);
  if (!head.weight.allFinite() || !std::isfinite(head.bias)) throw SolverError("non-finite probe parameters");
  return head;
}

Calibration calibrate_linear(std::span<const double> raw_predictions, std::span<const double> support_truth) {
  const std::size_t n = raw_predictions.size();
  if (n != support_truth.size()) throw ParameterError("prediction/truth count mismatch");
  if (n < 2) throw ParameterError("calibration needs at least two support points");
  const double x_mean = std::accumulate(raw_predictions.begin(), raw_predictions.end(), 0.0) / static_cast<double>(n);
  const double y_mean = std::accumulate(support_truth.begin(), support_truth.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = raw_predictions[i] - x_mean;
    sxx += dx * dx;
    sxy += dx * (support_truth[i] - y_mean);
    scale = std::max(scale, std::abs(raw_predictions[i]));
  }
  // Spread below rounding noise of the values counts as constant.
  if (!(sxx > static_cast<double>(n) * 1e-24 * std::max(scale * scale, 1e-300)))
    throw ParameterError("degenerate calibration");
  Calibration c;
  c.slope = sxy / sxx;
  c.intercept = y_mean - c.slope * x_mean;
  return c;
}

FinetuneResult finetune_probe(const LinearHead& head, const RowMatrix& support_vectors,
                              std::span<const double> support_labels, std::size_t steps, double learning_rate) {
  const Eigen::Index k = support_vectors.rows();
  if (k == 0) throw ParameterError("empty support set");
  if (static_cast<std::size_t>(k) != support_labels.size()) throw ParameterError("one label per support vector");
  if (support_vectors.cols() != head.weight.size()) throw ParameterError("head dimension does not match support");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");

  const Eigen::Map<const Vector> y(support_labels.data(), k);
  FinetuneResult out{head, {}};
  auto& h = out.head;
  double limit = 0.0;
  for (std::size_t step = 0; step < steps; ++step) {
    const Vector residual = (support_vectors * h.weight).array() + h.bias - y.array();
    const double mse = residual.squaredNorm() / static_cast<double>(k);
    if (step == 0) limit = 1e6 * std::max(mse, 1.0);
    if (!std::isfinite(mse) || mse > limit)
      throw DivergenceError("probe fine-tuning diverged at step " + std::to_string(step), step);
    out.loss_trace.push_back(mse);
    const double c = 2.0 / static_cast<double>(k);
    h.weight -= learning_rate * c * (support_vectors.transpose() * residual);
    h.bias -= learning_rate * c * residual.sum();
  }
  return out;
}

}  // namespace mdreg::baselines
