#include "mdreg/types.hpp"

#include <cmath>
#include <sstream>

namespace mdreg {

namespace {
constexpr double kNormTolerance = 1e-9;
}

EmbeddingSet EmbeddingSet::subset(const std::vector<std::size_t>& rows) const {
  EmbeddingSet out;
  out.domain_tag = domain_tag;
  out.vectors.resize(static_cast<Eigen::Index>(rows.size()), vectors.cols());
  out.ids.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = rows[r];
    if (src >= size()) throw ParameterError("subset row " + std::to_string(src) + " out of range");
    out.vectors.row(static_cast<Eigen::Index>(r)) = vectors.row(static_cast<Eigen::Index>(src));
    out.ids.push_back(src < ids.size() ? ids[src] : std::to_string(src));
    out.labels.push_back(labels[src]);
  }
  return out;
}

ValueGroups::ValueGroups(double lower, double upper, int count)
    : lower_(lower), upper_(upper), count_(count) {
  if (count < 1) throw ParameterError("group count must be >= 1");
  if (!std::isfinite(lower) || !std::isfinite(upper)) throw ParameterError("non-finite label bounds");
  if (!(lower < upper)) throw ParameterError("degenerate label range");
  boundaries_.resize(static_cast<std::size_t>(count) + 1);
  const double w = (upper - lower) / count;
  for (int i = 0; i <= count; ++i) boundaries_[static_cast<std::size_t>(i)] = lower + w * i;
  boundaries_.back() = upper;
}

void HyperParams::validate() const {
  if (!(diffusion_alpha > 0.0 && diffusion_alpha < 1.0))
    throw ParameterError("diffusion_alpha must lie in (0, 1)");
  if (!(diffusion_gamma > 0.0)) throw ParameterError("diffusion_gamma must be positive");
  if (knn_k && *knn_k < 1) throw ParameterError("knn_k must be positive");
  if (k_v && *k_v < 1) throw ParameterError("k_v must be positive");
  if (!(gol_margin > 0.0)) throw ParameterError("gol_margin must be positive");
  const auto& w = loss_weights;
  if (!(w.order >= 0.0 && w.metric >= 0.0 && w.center >= 0.0))
    throw ParameterError("loss weights must be nonnegative");
}

std::vector<Violation> validate_embedding_set(const EmbeddingSet& set) {
  std::vector<Violation> out;
  const auto n = static_cast<std::size_t>(set.vectors.rows());
  if (n == 0 || set.labels.empty()) out.push_back({ViolationKind::kEmpty, std::nullopt, "set is empty"});
  if (set.vectors.cols() < 2) {
    out.push_back({ViolationKind::kDimension, std::nullopt,
                   "dimension " + std::to_string(set.vectors.cols()) + " < 2"});
  }
  if (set.labels.size() != n) {
    out.push_back({ViolationKind::kShape, std::nullopt,
                   "label count " + std::to_string(set.labels.size()) + " != row count " + std::to_string(n)});
  }
  if (!set.ids.empty() && set.ids.size() != n) {
    out.push_back({ViolationKind::kShape, std::nullopt,
                   "id count " + std::to_string(set.ids.size()) + " != row count " + std::to_string(n)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = set.vectors.row(static_cast<Eigen::Index>(i));
    if (!row.allFinite()) {
      out.push_back({ViolationKind::kNonFinite, i, "row " + std::to_string(i) + " has a non-finite entry"});
      continue;
    }
    const double norm = row.norm();
    if (std::abs(norm - 1.0) > kNormTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row " << i << " has norm " << norm;
      out.push_back({ViolationKind::kNorm, i, msg.str()});
    }
  }
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    if (!std::isfinite(set.labels[i]))
      out.push_back({ViolationKind::kLabel, i, "label " + std::to_string(i) + " is not finite"});
  }
  return out;
}

double normalize_rows(RowMatrix& m) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm == 0.0 || !std::isfinite(norm)) continue;
    const double change = std::abs(norm - 1.0);
    m.row(i) /= norm;
    worst = std::max(worst, change);
  }
  return worst;
}

}  // namespace mdreg
