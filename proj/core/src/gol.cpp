#include "mdreg/gol.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mdreg::gol {

namespace {

constexpr double kDegenerateLength = 1e-12;

Eigen::Index row_of(int group) { return static_cast<Eigen::Index>(group); }

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Direction {
  Vector unit;
  double length = 0.0;

  // Pulls a gradient w.r.t. the unit vector back onto the raw difference.
  Vector backprop(const Vector& g_unit) const { return (g_unit - unit * unit.dot(g_unit)) / length; }
};

Direction direction(const Vector& from, const Vector& to) {
  Direction d;
  Vector diff = to - from;
  d.length = diff.norm();
  if (!(d.length > kDegenerateLength)) throw DegenerateDirection();
  d.unit = diff / d.length;
  return d;
}

// d(r, v) and its gradient direction (v - r) / d; zero gradient at coincidence.
struct Distance {
  double value = 0.0;
  Vector unit;  // d/dv; d/dr is -unit
};

Distance distance(const Eigen::Ref<const Vector>& r, const Vector& v) {
  Distance d;
  Vector diff = v - r;
  d.value = diff.norm();
  d.unit = d.value > 0.0 ? Vector(diff / d.value) : Vector::Zero(diff.size());
  return d;
}

void check_groups(const ReferencePoints& refs, int group_a, int group_b) {
  const int m = refs.count();
  if (group_a < 0 || group_a >= m || group_b < 0 || group_b >= m)
    throw ParameterError("group index outside [0, " + std::to_string(m - 1) + "]");
}

// Order loss with `low` in the lower group; gradients land in g_low / g_high.
double order_loss_ordered(const Vector& low, const Vector& high, const ReferencePoints& refs, int g_lo, int g_hi,
                          Vector* g_low, Vector* g_high, RowMatrix* g_refs, double scale) {
  const Vector r_lo = refs.points.row(row_of(g_lo)).transpose();
  const Vector r_hi = refs.points.row(row_of(g_hi)).transpose();
  const Direction forward = direction(r_lo, r_hi);
  const bool has_backward = g_lo > 0;
  Direction backward;
  if (has_backward) {
    backward = direction(r_lo, refs.points.row(row_of(g_lo - 1)).transpose());
  } else {
    // No reference below the lowest group: reflect the forward direction.
    backward.unit = -forward.unit;
    backward.length = forward.length;
  }
  const Direction pair = direction(low, high);

  const double p = forward.unit.dot(pair.unit);
  const double q = backward.unit.dot(pair.unit);
  const double z = q - p;
  const double loss = softplus(z);

  if (g_low || g_refs) {
    const double s = scale * sigmoid(z);
    const Vector g_pair_unit = s * (backward.unit - forward.unit);
    const Vector g_pair = pair.backprop(g_pair_unit);
    if (g_high) *g_high += g_pair;
    if (g_low) *g_low -= g_pair;
    if (g_refs) {
      Vector g_forward_unit = -s * pair.unit;
      if (!has_backward) g_forward_unit *= 2.0;
      const Vector g_fwd = forward.backprop(g_forward_unit);
      g_refs->row(row_of(g_hi)) += g_fwd.transpose();
      g_refs->row(row_of(g_lo)) -= g_fwd.transpose();
      if (has_backward) {
        const Vector g_bwd = backward.backprop(s * pair.unit);
        g_refs->row(row_of(g_lo - 1)) += g_bwd.transpose();
        g_refs->row(row_of(g_lo)) -= g_bwd.transpose();
      }
    }
  }
  return loss;
}

// One metric term: t = sign_a * d(r, a) + sign_b * d(r, b) (+ margin handled by caller).
void add_distance_grad(const Distance& d, double coeff, int ref, Vector* g_v, RowMatrix* g_refs) {
  if (coeff == 0.0) return;
  if (g_v) *g_v += coeff * d.unit;
  if (g_refs) g_refs->row(row_of(ref)) -= coeff * d.unit.transpose();
}

double metric_loss_ordered(const Vector& low, const Vector& high, const ReferencePoints& refs, int g_lo, int g_hi,
                           double margin, MetricForm form, Vector* g_low, Vector* g_high, RowMatrix* g_refs,
                           double scale) {
  const int m = refs.count();
  double loss = 0.0;
  auto term = [&](int i, bool lower_side) {
    const auto r = refs.points.row(row_of(i)).transpose();
    const Distance d_low = distance(r, low);
    const Distance d_high = distance(r, high);
    // Lower side: low should be nearer than high. Upper side: the reverse.
    const double diff = lower_side ? d_low.value - d_high.value : d_high.value - d_low.value;
    double t = 0.0;
    double slope = 0.0;  // d t / d diff
    if (form == MetricForm::kSignedHinge) {
      t = diff + margin;
      if (t <= 0.0) return;
      slope = 1.0;
    } else {
      t = std::abs(diff) + margin;
      slope = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    }
    loss += t;
    const double c = scale * slope * (lower_side ? 1.0 : -1.0);
    add_distance_grad(d_low, c, i, g_low, g_refs);
    add_distance_grad(d_high, -c, i, g_high, g_refs);
  };
  for (int i = 0; i <= g_lo; ++i) term(i, true);
  for (int j = g_hi; j < m; ++j) term(j, false);
  return loss;
}

double metric_loss_equal(const Vector& va, const Vector& vb, const ReferencePoints& refs, double margin,
                         Vector* g_a, Vector* g_b, RowMatrix* g_refs, double scale) {
  double loss = 0.0;
  for (int i = 0; i < refs.count(); ++i) {
    const auto r = refs.points.row(row_of(i)).transpose();
    const Distance da = distance(r, va);
    const Distance db = distance(r, vb);
    const double diff = da.value - db.value;
    const double t = std::abs(diff) - margin;
    if (t <= 0.0) continue;
    loss += t;
    const double c = scale * (diff > 0.0 ? 1.0 : -1.0);
    add_distance_grad(da, c, i, g_a, g_refs);
    add_distance_grad(db, -c, i, g_b, g_refs);
  }
  return loss;
}

}  // namespace

int assign_group(double label, const ValueGroups& groups) {
  const auto& edges = groups.boundaries();
  const int k = groups.count();
  if (!(label >= edges.front())) return 0;  // also maps NaN to group 0
  if (label >= edges.back()) return k - 1;
  int g = static_cast<int>((label - groups.lower()) / groups.width());
  g = std::clamp(g, 0, k - 1);
  // Correct floating-point rounding against the stored edges.
  while (g > 0 && label < edges[static_cast<std::size_t>(g)]) --g;
  while (g < k - 1 && label >= edges[static_cast<std::size_t>(g) + 1]) ++g;
  return g;
}

PairGradient::PairGradient(Eigen::Index dim, Eigen::Index refs)
    : d_va(Vector::Zero(dim)), d_vb(Vector::Zero(dim)), d_refs(RowMatrix::Zero(refs, dim)) {}

void PairGradient::set_zero() {
  d_va.setZero();
  d_vb.setZero();
  d_refs.setZero();
}

double order_loss(const Vector& va, const Vector& vb, const ReferencePoints& refs, int group_a, int group_b,
                  PairGradient* grad, double scale) {
  check_groups(refs, group_a, group_b);
  if (group_a == group_b) return 0.0;
  Vector* ga = grad ? &grad->d_va : nullptr;
  Vector* gb = grad ? &grad->d_vb : nullptr;
  RowMatrix* gr = grad ? &grad->d_refs : nullptr;
  if (group_a < group_b) return order_loss_ordered(va, vb, refs, group_a, group_b, ga, gb, gr, scale);
  return order_loss_ordered(vb, va, refs, group_b, group_a, gb, ga, gr, scale);
}

double metric_loss(const Vector& va, const Vector& vb, const ReferencePoints& refs, int group_a, int group_b,
                   double margin, MetricForm form, PairGradient* grad, double scale) {
  check_groups(refs, group_a, group_b);
  Vector* ga = grad ? &grad->d_va : nullptr;
  Vector* gb = grad ? &grad->d_vb : nullptr;
  RowMatrix* gr = grad ? &grad->d_refs : nullptr;
  if (group_a == group_b) return metric_loss_equal(va, vb, refs, margin, ga, gb, gr, scale);
  if (group_a < group_b) return metric_loss_ordered(va, vb, refs, group_a, group_b, margin, form, ga, gb, gr, scale);
  return metric_loss_ordered(vb, va, refs, group_b, group_a, margin, form, gb, ga, gr, scale);
}

double center_loss(const Vector& va, const Vector& vb, const ReferencePoints& refs, int group_a, int group_b,
                   PairGradient* grad, double scale) {
  check_groups(refs, group_a, group_b);
  const Distance da = distance(refs.points.row(row_of(group_a)).transpose(), va);
  const Distance db = distance(refs.points.row(row_of(group_b)).transpose(), vb);
  if (grad) {
    add_distance_grad(da, scale, group_a, &grad->d_va, &grad->d_refs);
    add_distance_grad(db, scale, group_b, &grad->d_vb, &grad->d_refs);
  }
  return da.value + db.value;
}

namespace {

// Shared pair loop; `grad` receives the weighted, batch-averaged gradient.
LossBreakdown accumulate_pair(const Vector& va, const Vector& vb, const GolPair& pair, std::size_t index,
                              const ReferencePoints& refs, const HyperParams& params, double inv_n,
                              PairGradient* grad) {
  const auto& w = params.loss_weights;
  LossBreakdown out;
  try {
    out.order = w.order == 0.0 ? 0.0
                               : w.order * order_loss(va, vb, refs, pair.group_a, pair.group_b, grad, w.order * inv_n);
  } catch (const DegenerateDirection&) {
    throw DegenerateDirection("pair " + std::to_string(index) + ": degenerate direction");
  }
  out.metric = w.metric == 0.0 ? 0.0
                               : w.metric * metric_loss(va, vb, refs, pair.group_a, pair.group_b, params.gol_margin,
                                                        params.metric_form, grad, w.metric * inv_n);
  out.center = w.center == 0.0
                   ? 0.0
                   : w.center * center_loss(va, vb, refs, pair.group_a, pair.group_b, grad, w.center * inv_n);
  out.total = out.order + out.metric + out.center;
  return out;
}

void add_scaled(LossBreakdown& acc, const LossBreakdown& x, double s) {
  acc.total += s * x.total;
  acc.order += s * x.order;
  acc.metric += s * x.metric;
  acc.center += s * x.center;
}

void check_batch(const GolBatch& batch, std::size_t rows) {
  if (batch.empty()) throw ParameterError("empty batch");
  for (const auto& p : batch)
    if (p.a >= rows || p.b >= rows) throw ParameterError("pair index out of range");
}

}  // namespace

LossBreakdown composite_loss(const GolBatch& batch, const EmbeddingSet& set, const ReferencePoints& refs,
                             const HyperParams& params) {
  check_batch(batch, set.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossBreakdown acc;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& p = batch[i];
    const Vector va = set.vectors.row(static_cast<Eigen::Index>(p.a)).transpose();
    const Vector vb = set.vectors.row(static_cast<Eigen::Index>(p.b)).transpose();
    add_scaled(acc, accumulate_pair(va, vb, p, i, refs, params, inv_n, nullptr), inv_n);
  }
  return acc;
}

Vector LinearEmbedder::embed(const Eigen::Ref<const Vector>& raw) const {
  Vector z = weight * raw + bias;
  const double norm = z.norm();
  if (norm > 0.0) z /= norm;
  return z;
}

RowMatrix LinearEmbedder::embed_all(const RowMatrix& raw) const {
  if (raw.cols() != input_dim())
    throw ParameterError("embedder expects " + std::to_string(input_dim()) + " input features, got " +
                         std::to_string(raw.cols()));
  RowMatrix out(raw.rows(), output_dim());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) out.row(i) = embed(raw.row(i).transpose()).transpose();
  return out;
}

EmbeddingSet LinearEmbedder::embed_set(const EmbeddingSet& raw) const {
  EmbeddingSet out;
  out.ids = raw.ids;
  out.labels = raw.labels;
  out.domain_tag = raw.domain_tag;
  out.vectors = embed_all(raw.vectors);
  return out;
}

Gradients loss_gradient(const GolBatch& batch, const RowMatrix& raw, const LinearEmbedder& embedder,
                        const ReferencePoints& refs, const HyperParams& params) {
  check_batch(batch, static_cast<std::size_t>(raw.rows()));
  const Eigen::Index d = embedder.output_dim();
  const Eigen::Index p = embedder.input_dim();
  if (raw.cols() != p) throw ParameterError("raw feature width does not match embedder");
  if (refs.points.cols() != d) throw ParameterError("reference dimension does not match embedder");

  Gradients g;
  g.d_weight = RowMatrix::Zero(d, p);
  g.d_bias = Vector::Zero(d);
  g.d_refs = RowMatrix::Zero(refs.points.rows(), d);

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  PairGradient pg(d, refs.points.rows());

  // Pull dL/dv back through v = z / |z|, z = W x + b.
  auto backprop = [&](std::size_t row, const Vector& g_v) {
    const auto x = raw.row(static_cast<Eigen::Index>(row)).transpose();
    const Vector z = embedder.weight * x + embedder.bias;
    const double norm = z.norm();
    if (norm == 0.0) return;
    const Vector v = z / norm;
    const Vector g_z = (g_v - v * v.dot(g_v)) / norm;
    g.d_weight.noalias() += g_z * x.transpose();
    g.d_bias += g_z;
  };

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& pair = batch[i];
    const Vector va = embedder.embed(raw.row(static_cast<Eigen::Index>(pair.a)).transpose());
    const Vector vb = embedder.embed(raw.row(static_cast<Eigen::Index>(pair.b)).transpose());
    pg.set_zero();
    add_scaled(g.loss, accumulate_pair(va, vb, pair, i, refs, params, inv_n, &pg), inv_n);
    backprop(pair.a, pg.d_va);
    backprop(pair.b, pg.d_vb);
    g.d_refs += pg.d_refs;
  }

  auto check = [](const auto& m, const char* name) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        if (!std::isfinite(m(r, c)))
          throw Error(std::string("non-finite gradient at ") + name + "(" + std::to_string(r) + "," +
                      std::to_string(c) + ")");
  };
  check(g.d_weight, "weight");
  check(g.d_bias, "bias");
  check(g.d_refs, "reference_points");
  return g;
}

LossBreakdown embedder_loss(const GolBatch& batch, const RowMatrix& raw, const LinearEmbedder& embedder,
                            const ReferencePoints& refs, const HyperParams& params) {
  check_batch(batch, static_cast<std::size_t>(raw.rows()));
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossBreakdown acc;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& pair = batch[i];
    const Vector va = embedder.embed(raw.row(static_cast<Eigen::Index>(pair.a)).transpose());
    const Vector vb = embedder.embed(raw.row(static_cast<Eigen::Index>(pair.b)).transpose());
    add_scaled(acc, accumulate_pair(va, vb, pair, i, refs, params, inv_n, nullptr), inv_n);
  }
  return acc;
}

}  // namespace mdreg::gol
