#include "mdreg/gol.hpp"
#include "mdreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace mdreg::gol {

namespace {

constexpr double kDivergenceLimit = 1e6;
// A loss this many times above its starting value also counts as divergence:
// with unit-norm embeddings and Euclidean center distances the loss of a
// runaway step size plateaus below any fixed absolute limit.
constexpr double kDivergenceGrowth = 1e3;
constexpr std::size_t kMonitorPairs = 512;
constexpr double kReferenceJitter = 1e-3;

ReferencePoints init_references(const RowMatrix& embedded, const std::vector<int>& group_of, int groups,
                                Rng& rng) {
  const Eigen::Index d = embedded.cols();
  RowMatrix sums = RowMatrix::Zero(groups, d);
  std::vector<std::size_t> counts(static_cast<std::size_t>(groups), 0);
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    sums.row(group_of[i]) += embedded.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(group_of[i])];
  }
  std::vector<int> populated;
  for (int g = 0; g < groups; ++g) {
    if (counts[static_cast<std::size_t>(g)] > 0) {
      sums.row(g) /= static_cast<double>(counts[static_cast<std::size_t>(g)]);
      populated.push_back(g);
    }
  }
  // Empty groups interpolate between the nearest populated neighbours.
  for (int g = 0; g < groups; ++g) {
    if (counts[static_cast<std::size_t>(g)] > 0) continue;
    int lo = -1, hi = -1;
    for (int p : populated) {
      if (p < g) lo = p;
      if (p > g && hi < 0) hi = p;
    }
    if (lo >= 0 && hi >= 0) {
      const double t = static_cast<double>(g - lo) / static_cast<double>(hi - lo);
      sums.row(g) = (1.0 - t) * sums.row(lo) + t * sums.row(hi);
    } else {
      sums.row(g) = sums.row(lo >= 0 ? lo : hi);
    }
  }
  ReferencePoints refs;
  refs.points = sums;
  for (Eigen::Index r = 0; r < refs.points.rows(); ++r)
    for (Eigen::Index c = 0; c < d; ++c) refs.points(r, c) += rng.normal(0.0, kReferenceJitter);
  return refs;
}

}  // namespace

GolBatch sample_pairs(const std::vector<int>& group_of, std::size_t batch_size, std::uint64_t seed) {
  const std::size_t n = group_of.size();
  if (n < 2) throw ParameterError("need at least two samples to form pairs");
  std::set<int> distinct(group_of.begin(), group_of.end());
  const bool can_order = distinct.size() >= 2;

  Rng rng(seed);
  GolBatch batch;
  batch.reserve(batch_size);
  const std::size_t ordered_quota = can_order ? (batch_size + 1) / 2 : 0;
  while (batch.size() < batch_size) {
    const auto a = static_cast<std::size_t>(rng.below(n));
    const auto b = static_cast<std::size_t>(rng.below(n));
    if (a == b) continue;
    if (batch.size() < ordered_quota && group_of[a] == group_of[b]) continue;
    batch.push_back({a, b, group_of[a], group_of[b]});
  }
  return batch;
}

TrainResult continue_training(const RowMatrix& raw, const std::vector<double>& labels, const ValueGroups& groups,
                              const HyperParams& params, const TrainSchedule& schedule, LinearEmbedder embedder,
                              ReferencePoints refs) {
  if (static_cast<std::size_t>(raw.rows()) != labels.size()) throw ParameterError("feature/label count mismatch");
  if (refs.count() != groups.count()) throw ParameterError("reference count must equal group count");
  params.validate();

  std::vector<int> group_of(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) group_of[i] = assign_group(labels[i], groups);

  // Identical raw rows in different groups would make the order loss undefined.
  auto distinct_rows = [&](const GolPair& p) {
    return raw.row(static_cast<Eigen::Index>(p.a)) != raw.row(static_cast<Eigen::Index>(p.b));
  };

  // The trace follows a fixed monitor batch so that it measures the objective
  // rather than the sampling noise of the per-step batches.
  GolBatch monitor = sample_pairs(group_of, std::max(schedule.batch_size, kMonitorPairs),
                                  mix_seed(schedule.seed, ~std::uint64_t{0}));
  std::erase_if(monitor, [&](const GolPair& p) { return !distinct_rows(p); });

  TrainResult result;
  double limit = kDivergenceLimit;
  auto check = [&](double loss, std::size_t step) {
    if (!std::isfinite(loss) || loss > limit)
      throw DivergenceError("training diverged at step " + std::to_string(step) + " (loss " +
                                std::to_string(loss) + ")",
                            step);
  };

  for (std::size_t step = 0; step < schedule.steps; ++step) {
    if (!monitor.empty()) {
      const LossBreakdown tracked = embedder_loss(monitor, raw, embedder, refs, params);
      if (step == 0) limit = std::min(kDivergenceLimit, kDivergenceGrowth * std::max(tracked.total, 1.0));
      check(tracked.total, step);
      result.trace.push_back({step, tracked});
    }

    GolBatch batch = sample_pairs(group_of, schedule.batch_size, mix_seed(schedule.seed, step));
    std::erase_if(batch, [&](const GolPair& p) { return !distinct_rows(p); });
    if (batch.empty()) continue;

    const Gradients g = loss_gradient(batch, raw, embedder, refs, params);
    check(g.loss.total, step);

    embedder.weight -= schedule.learning_rate * g.d_weight;
    embedder.bias -= schedule.learning_rate * g.d_bias;
    refs.points -= schedule.learning_rate * g.d_refs;

    if (!embedder.weight.allFinite() || !embedder.bias.allFinite() || !refs.points.allFinite())
      throw DivergenceError("training diverged at step " + std::to_string(step) + " (non-finite parameters)", step);
  }
  result.embedder = std::move(embedder);
  result.refs = std::move(refs);
  return result;
}

TrainResult train_toy_embedder(const RowMatrix& raw, const std::vector<double>& labels, const ValueGroups& groups,
                               const HyperParams& params, const TrainSchedule& schedule) {
  const Eigen::Index p = raw.cols();
  const Eigen::Index d = schedule.embedding_dim;
  if (p < 2 || d < 2) throw ParameterError("feature and embedding dimensions must be >= 2");
  if (static_cast<std::size_t>(raw.rows()) != labels.size()) throw ParameterError("feature/label count mismatch");
  if (groups.count() < 2) throw ParameterError("need at least two reference points");

  std::vector<int> group_of(labels.size());
  std::set<int> populated;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    group_of[i] = assign_group(labels[i], groups);
    populated.insert(group_of[i]);
  }
  if (populated.size() < 2) throw ParameterError("need at least two populated label groups");

  Rng rng(schedule.seed);
  LinearEmbedder embedder;
  embedder.weight.resize(d, p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < p; ++c) embedder.weight(r, c) = rng.normal(0.0, scale);
  embedder.bias = Vector::Zero(d);

  ReferencePoints refs = init_references(embedder.embed_all(raw), group_of, groups.count(), rng);
  return continue_training(raw, labels, groups, params, schedule, std::move(embedder), std::move(refs));
}

}  // namespace mdreg::gol
