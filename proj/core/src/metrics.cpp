#include "mdreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mdreg::eval {

namespace {
constexpr std::size_t kPercentileMinimum = 100;
}

double r2_score(std::span<const double> y_true, std::span<const double> y_pred) {
  const std::size_t n = y_true.size();
  if (n != y_pred.size()) throw ParameterError("truth/prediction count mismatch");
  if (n < 2) throw ParameterError("R² needs at least two samples");
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) throw ParameterError("undefined R²");
  return 1.0 - ss_res / ss_tot;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ParameterError("wasserstein1 needs nonempty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t n = sa.size(), m = sb.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(sa[i] - sb[i]);
    return s / static_cast<double>(n);
  }
  // Both quantile functions are constant between consecutive breakpoints
  // i/n and j/m; walk them in merged order with integer cross-multiplication.
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double t = 0.0;
  while (i < n && j < m) {
    const std::size_t next_a = (i + 1) * m;  // (i+1)/n scaled by n*m
    const std::size_t next_b = (j + 1) * n;
    const std::size_t next = std::min(next_a, next_b);
    const double t_next = static_cast<double>(next) / static_cast<double>(n * m);
    total += (t_next - t) * std::abs(sa[i] - sb[j]);
    t = t_next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return total;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw ParameterError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw ParameterError("percentile must lie in [0, 100]");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

GroupBounds compute_group_bounds(std::span<const double> labels, int group_count) {
  if (labels.empty()) throw ParameterError("no labels to bound");
  if (labels.size() < kPercentileMinimum) {
    const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
    return {ValueGroups(*lo, *hi, group_count), true};
  }
  return {ValueGroups(percentile(labels, 1.0), percentile(labels, 99.0), group_count), false};
}

}  // namespace mdreg::eval
