#pragma once

// Inductive and simple transductive baselines: weighted kNN over support
// vectors, a ridge linear probe, support-set linear calibration, and probe
// fine-tuning.

#include "mdreg/types.hpp"

#include <span>
#include <vector>

namespace mdreg::baselines {

/// Inverse-distance weighted mean label of the k nearest support vectors.
/// Distance ties go to the lower support index.
std::vector<double> predict_knn(const RowMatrix& queries, const RowMatrix& support_vectors,
                                std::span<const double> support_labels, int k);

/// Same, with the support taken as rows of `target`.
std::vector<double> predict_knn(const RowMatrix& queries, const EmbeddingSet& target, const SupportSet& support,
                                int k);

struct LinearHead {
  Vector weight;
  double bias = 0.0;
  double ridge_lambda = 0.0;

  double predict(const Eigen::Ref<const Vector>& v) const { return weight.dot(v) + bias; }
  std::vector<double> predict_all(const RowMatrix& vectors) const;
};

/// Minimizes sum (w.v + b - y)^2 + lambda |w|^2 with the intercept unpenalized.
/// Throws SolverError when the system is singular (suggests lambda > 0).
LinearHead fit_linear_probe(const RowMatrix& vectors, std::span<const double> labels, double ridge_lambda);
inline LinearHead fit_linear_probe(const EmbeddingSet& source, double ridge_lambda) {
  return fit_linear_probe(source.vectors, source.labels, ridge_lambda);
}

struct Calibration {
  double slope = 1.0;
  double intercept = 0.0;

  double apply(double raw) const { return slope * raw + intercept; }
};

/// Least squares truth ~ slope * raw + intercept.
/// Throws ParameterError("degenerate calibration") for constant raw predictions.
Calibration calibrate_linear(std::span<const double> raw_predictions, std::span<const double> support_truth);

struct FinetuneResult {
  LinearHead head;
  std::vector<double> loss_trace;  // support MSE before each step
};

/// Full-batch gradient descent on the support mean squared error.
/// Throws DivergenceError naming the step when the loss blows up.
FinetuneResult finetune_probe(const LinearHead& head, const RowMatrix& support_vectors,
                              std::span<const double> support_labels, std::size_t steps, double learning_rate);

}  // namespace mdreg::baselines
