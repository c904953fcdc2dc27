#pragma once

// Geometric order learning: reference-point assignment, the order / metric /
// center losses with their analytic gradients, and a linear embedder trained
// on raw features as a desk-scale feature extractor.

#include "mdreg/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mdreg::gol {

/// Group index of `label`; out-of-range labels clamp to the boundary groups.
int assign_group(double label, const ValueGroups& groups);

/// Gradient accumulator for one pair evaluation.
struct PairGradient {
  Vector d_va;
  Vector d_vb;
  RowMatrix d_refs;  // M x d

  PairGradient() = default;
  PairGradient(Eigen::Index dim, Eigen::Index refs);
  void set_zero();
};

// Each loss adds its gradient scaled by `scale` into `grad` when non-null.
// Pairs with group_a > group_b are evaluated with the roles of a and b swapped.

/// Softmax negative log-likelihood of the forward vs backward reference
/// direction along v_b - v_a. Zero for equal groups. Throws
/// DegenerateDirection on coincident references or v_a == v_b.
double order_loss(const Vector& va, const Vector& vb, const ReferencePoints& refs, int group_a, int group_b,
                  PairGradient* grad = nullptr, double scale = 1.0);

double metric_loss(const Vector& va, const Vector& vb, const ReferencePoints& refs, int group_a, int group_b,
                   double margin, MetricForm form = MetricForm::kSignedHinge, PairGradient* grad = nullptr,
                   double scale = 1.0);

double center_loss(const Vector& va, const Vector& vb, const ReferencePoints& refs, int group_a, int group_b,
                   PairGradient* grad = nullptr, double scale = 1.0);

struct GolPair {
  std::size_t a = 0;
  std::size_t b = 0;
  int group_a = 0;
  int group_b = 0;
};

using GolBatch = std::vector<GolPair>;

/// Weighted per-term means over a batch.
struct LossBreakdown {
  double total = 0.0;
  double order = 0.0;
  double metric = 0.0;
  double center = 0.0;
};

/// Mean over pairs of w_o L_o + w_m L_m + w_c L_c.
LossBreakdown composite_loss(const GolBatch& batch, const EmbeddingSet& set, const ReferencePoints& refs,
                             const HyperParams& params);

/// Affine map followed by L2 normalization.
struct LinearEmbedder {
  RowMatrix weight;  // d x p
  Vector bias;       // d

  Eigen::Index output_dim() const { return weight.rows(); }
  Eigen::Index input_dim() const { return weight.cols(); }

  Vector embed(const Eigen::Ref<const Vector>& raw) const;
  RowMatrix embed_all(const RowMatrix& raw) const;
  /// Embeds a whole set, keeping ids, labels and domain tag.
  EmbeddingSet embed_set(const EmbeddingSet& raw) const;
};

struct Gradients {
  RowMatrix d_weight;
  Vector d_bias;
  RowMatrix d_refs;
  LossBreakdown loss;
};

/// Analytic gradient of composite_loss with respect to the embedder and
/// reference points. Pairs index rows of `raw`. Throws Error naming the first
/// non-finite coordinate.
Gradients loss_gradient(const GolBatch& batch, const RowMatrix& raw, const LinearEmbedder& embedder,
                        const ReferencePoints& refs, const HyperParams& params);

/// Composite loss of the embedder's output on `raw` (no gradient).
LossBreakdown embedder_loss(const GolBatch& batch, const RowMatrix& raw, const LinearEmbedder& embedder,
                            const ReferencePoints& refs, const HyperParams& params);

struct TrainSchedule {
  double learning_rate = 0.001;
  std::size_t steps = 500;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  int embedding_dim = 8;
};

struct TrainRecord {
  std::size_t step = 0;
  LossBreakdown loss;
};

struct TrainResult {
  LinearEmbedder embedder;
  ReferencePoints refs;
  std::vector<TrainRecord> trace;
};

/// Random pairs with at least half of them across different groups.
GolBatch sample_pairs(const std::vector<int>& group_of, std::size_t batch_size, std::uint64_t seed);

/// Plain gradient descent on the composite loss over seeded random pairs.
/// The trace holds, for every step, the loss on a fixed seeded monitor batch
/// before that step's update. Throws DivergenceError when a loss turns
/// non-finite, exceeds 1e6, or exceeds 1000 times the first traced loss.
TrainResult train_toy_embedder(const RowMatrix& raw, const std::vector<double>& labels, const ValueGroups& groups,
                               const HyperParams& params, const TrainSchedule& schedule);

/// Continues training from existing parameters (used for support-set fine-tuning).
TrainResult continue_training(const RowMatrix& raw, const std::vector<double>& labels, const ValueGroups& groups,
                              const HyperParams& params, const TrainSchedule& schedule, LinearEmbedder embedder,
                              ReferencePoints refs);

}  // namespace mdreg::gol
