#pragma once

#include "mdreg/types.hpp"

#include <span>

namespace mdreg::eval {

/// 1 - SS_res / SS_tot. Throws ParameterError("undefined R²") for constant truth.
double r2_score(std::span<const double> y_true, std::span<const double> y_pred);

/// Empirical 1-D Wasserstein-1 distance (area between quantile functions).
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// Percentile with linear interpolation between closest order statistics; q in [0, 100].
double percentile(std::span<const double> values, double q);

struct GroupBounds {
  ValueGroups groups;
  bool used_min_max = false;  // fewer than 100 labels
};

/// Equal-width groups between the 1st and 99th label percentiles, or
/// between min and max when fewer than 100 labels are given.
GroupBounds compute_group_bounds(std::span<const double> labels, int group_count);

}  // namespace mdreg::eval
