#pragma once

#include "mdreg/types.hpp"

#include <string>

namespace mdreg::eval {

/// Rows projected on the two leading principal axes (n x 2). Each axis is
/// signed so that its largest-magnitude component is positive.
RowMatrix pca_project_2d(const RowMatrix& vectors);

/// `id,label,px,py` for external plotting.
std::string projection_csv(const EmbeddingSet& set);

}  // namespace mdreg::eval
