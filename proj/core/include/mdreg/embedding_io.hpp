#pragma once

#include "mdreg/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mdreg::io {

/// Formats a double with 17 significant digits (round-trips exactly).
std::string format_real(double value);

/// One RFC-4180 field, quoted only when needed.
std::string csv_escape(std::string_view field);

/// Splits one CSV record. Quoted fields may contain commas and doubled quotes.
std::vector<std::string> parse_csv_record(std::string_view line);

struct EmbeddingFile {
  std::vector<EmbeddingSet> sets;  // one per domain, in order of first appearance
  bool renormalized = false;       // some row moved by more than 1e-6 when normalized
  std::vector<std::string> warnings;

  /// The set tagged `domain`; throws ParameterError if absent.
  const EmbeddingSet& domain(const std::string& name) const;
};

/// Reads `id,label,domain,e0,...,e{d-1}`; rows are normalized to unit length.
EmbeddingFile read_embedding_csv(const std::filesystem::path& path);
EmbeddingFile read_embedding_csv(std::istream& in, const std::string& source_name = "<stream>");

void write_embedding_csv(std::ostream& out, const std::vector<const EmbeddingSet*>& sets);

/// Writes via a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mdreg::io
