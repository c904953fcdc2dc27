#pragma once

#include "mdreg/types.hpp"

#include <cstdint>

namespace mdreg::eval {

/// k_r-way N-shot draw: up to `shots` members per label group, uniformly
/// without replacement. Short groups contribute everything they have and
/// add a warning. Deterministic in `seed`.
SupportSet sample_support(const EmbeddingSet& set, const ValueGroups& groups, int shots, std::uint64_t seed);

/// Row indices of `n` rows that are not in the support, ascending.
std::vector<std::size_t> query_rows(std::size_t n, const SupportSet& support);

}  // namespace mdreg::eval
