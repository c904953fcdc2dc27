#include "mdreg/support.hpp"

#include "mdreg/gol.hpp"
#include "mdreg/rng.hpp"

#include <algorithm>
#include <string>

namespace mdreg::eval {

SupportSet sample_support(const EmbeddingSet& set, const ValueGroups& groups, int shots, std::uint64_t seed) {
  if (shots < 1) throw ParameterError("shots per group must be >= 1");
  if (set.size() == 0) throw ParameterError("empty target set");

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(groups.count()));
  for (std::size_t i = 0; i < set.size(); ++i)
    members[static_cast<std::size_t>(gol::assign_group(set.labels[i], groups))].push_back(i);

  Rng rng(seed);
  SupportSet support;
  support.shots = shots;
  for (int g = 0; g < groups.count(); ++g) {
    const auto& pool = members[static_cast<std::size_t>(g)];
    const auto want = static_cast<std::size_t>(shots);
    if (pool.size() < want) {
      support.warnings.push_back("group " + std::to_string(g) + " has " + std::to_string(pool.size()) +
                                 " member(s), fewer than " + std::to_string(shots) + " shots");
    }
    const auto take = std::min(want, pool.size());
    for (auto pick : rng.sample_without_replacement(pool.size(), take)) {
      const auto row = pool[pick];
      support.indices.push_back(row);
      support.labels.push_back(set.labels[row]);
      support.group_of.push_back(g);
    }
  }
  return support;
}

std::vector<std::size_t> query_rows(std::size_t n, const SupportSet& support) {
  std::vector<bool> taken(n, false);
  for (auto i : support.indices) {
    if (i >= n) throw ParameterError("support index out of range");
    taken[i] = true;
  }
  std::vector<std::size_t> out;
  out.reserve(n - support.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!taken[i]) out.push_back(i);
  return out;
}

}  // namespace mdreg::eval
