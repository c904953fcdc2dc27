#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdreg {

/// Row-major dense matrix; one sample per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Error hierarchy. The CLI maps these onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input or parameter values detected before any compute.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A direction vector in the order loss has (near) zero length.
class DegenerateDirection : public Error {
 public:
  explicit DegenerateDirection(const std::string& what = "degenerate direction") : Error(what) {}
};

/// Training or fine-tuning produced a non-finite or exploding loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// A linear solve failed (non-convergence, singular system).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Unit-norm embeddings with labels, one domain per set.
struct EmbeddingSet {
  std::vector<std::string> ids;
  RowMatrix vectors;  // n x d
  std::vector<double> labels;
  std::string domain_tag;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }

  /// Rows selected by index, in the given order. Domain tag is kept.
  EmbeddingSet subset(const std::vector<std::size_t>& rows) const;
};

/// k_r equal-width label groups between lower and upper.
class ValueGroups {
 public:
  /// Throws ParameterError("degenerate label range") when lower >= upper.
  ValueGroups(double lower, double upper, int count);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  int count() const { return count_; }
  double width() const { return (upper_ - lower_) / count_; }
  const std::vector<double>& boundaries() const { return boundaries_; }

 private:
  double lower_;
  double upper_;
  int count_;
  std::vector<double> boundaries_;
};

/// Labeled target subset drawn k_r-way N-shot.
struct SupportSet {
  std::vector<std::size_t> indices;  // rows of the target EmbeddingSet
  std::vector<double> labels;
  std::vector<int> group_of;
  int shots = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return indices.size(); }
};

/// GOL anchors r_0..r_{M-1}, one row per label group.
struct ReferencePoints {
  RowMatrix points;  // M x d

  int count() const { return static_cast<int>(points.rows()); }
};

/// Which reading of the ordered-pair metric loss to apply.
enum class MetricForm {
  kSignedHinge,        // pull lower refs toward v_a, push upper refs toward v_b, with margin
  kAbsoluteAsWritten,  // |d_a - d_b| + margin, transcribed literally
};

struct LossWeights {
  double order = 1.0;
  double metric = 66.0;
  double center = 33.0;
};

struct HyperParams {
  double diffusion_alpha = 0.99;
  double diffusion_gamma = 3.0;
  std::optional<int> knn_k;  // defaults to N
  std::optional<int> k_v;    // defaults to 2N
  double gol_margin = 0.1;
  LossWeights loss_weights;
  MetricForm metric_form = MetricForm::kSignedHinge;

  int resolved_knn_k(int shots) const { return knn_k.value_or(shots); }
  int resolved_k_v(int shots) const { return k_v.value_or(2 * shots); }

  /// Throws ParameterError when any field is out of range.
  void validate() const;
};

enum class ViolationKind { kEmpty, kDimension, kShape, kNonFinite, kNorm, kLabel };

struct Violation {
  ViolationKind kind;
  std::optional<std::size_t> index;
  std::string message;
};

/// Reports every broken EmbeddingSet invariant; never throws.
std::vector<Violation> validate_embedding_set(const EmbeddingSet& set);

/// Scales every nonzero row to unit length; returns the largest per-row change.
double normalize_rows(RowMatrix& m);

}  // namespace mdreg
