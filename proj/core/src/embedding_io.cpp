#include "mdreg/embedding_io.hpp"

#include <cerrno>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace mdreg::io {

namespace {

constexpr double kRenormalizeWarning = 1e-6;

double parse_real(const std::string& text, const std::string& where) {
  // strtod accepts the same decimal forms we emit, including exponents.
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw ParameterError(where + ": cannot parse number '" + text + "'");
  return v;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParameterError("unterminated quoted CSV field");
  fields.push_back(std::move(cur));
  return fields;
}

const EmbeddingSet& EmbeddingFile::domain(const std::string& name) const {
  for (const auto& s : sets)
    if (s.domain_tag == name) return s;
  throw ParameterError("no rows with domain '" + name + "'");
}

EmbeddingFile read_embedding_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open embedding file " + path.string());
  return read_embedding_csv(in, path.string());
}

EmbeddingFile read_embedding_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw ParameterError(source_name + ": empty file");
  strip_cr(line);
  const auto header = parse_csv_record(line);
  if (header.size() < 5 || header[0] != "id" || header[1] != "label" || header[2] != "domain")
    throw ParameterError(source_name + ": header must be id,label,domain,e0,e1,...");
  const std::size_t dim = header.size() - 3;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[3 + j] != "e" + std::to_string(j))
      throw ParameterError(source_name + ": expected column e" + std::to_string(j) + ", got '" +
                           header[3 + j] + "'");
  }

  struct Pending {
    std::vector<std::string> ids;
    std::vector<double> labels;
    std::vector<double> values;
  };
  std::vector<std::string> order;
  std::map<std::string, Pending> by_domain;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = parse_csv_record(line);
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (fields.size() != header.size())
      throw ParameterError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    auto [it, inserted] = by_domain.try_emplace(fields[2]);
    if (inserted) order.push_back(fields[2]);
    auto& p = it->second;
    p.ids.push_back(fields[0]);
    p.labels.push_back(parse_real(fields[1], where));
    for (std::size_t j = 0; j < dim; ++j) p.values.push_back(parse_real(fields[3 + j], where));
  }
  if (order.empty()) throw ParameterError(source_name + ": no data rows");

  EmbeddingFile file;
  for (const auto& name : order) {
    auto& p = by_domain[name];
    EmbeddingSet set;
    set.domain_tag = name;
    set.ids = std::move(p.ids);
    set.labels = std::move(p.labels);
    set.vectors = Eigen::Map<const RowMatrix>(p.values.data(), static_cast<Eigen::Index>(set.labels.size()),
                                              static_cast<Eigen::Index>(dim));
    const double moved = normalize_rows(set.vectors);
    if (moved > kRenormalizeWarning) {
      file.renormalized = true;
      file.warnings.push_back(source_name + ": domain '" + name + "' rows were renormalized (max norm change " +
                              format_real(moved) + ")");
    }
    file.sets.push_back(std::move(set));
  }
  return file;
}

void write_embedding_csv(std::ostream& out, const std::vector<const EmbeddingSet*>& sets) {
  if (sets.empty()) throw ParameterError("nothing to write");
  const auto dim = sets.front()->dim();
  out << "id,label,domain";
  for (std::size_t j = 0; j < dim; ++j) out << ",e" << j;
  out << "\r\n";
  for (const auto* set : sets) {
    if (set->dim() != dim) throw ParameterError("sets with different dimensions");
    for (std::size_t i = 0; i < set->size(); ++i) {
      const std::string id = i < set->ids.size() ? set->ids[i] : std::to_string(i);
      out << csv_escape(id) << ',' << format_real(set->labels[i]) << ',' << csv_escape(set->domain_tag);
      for (std::size_t j = 0; j < dim; ++j)
        out << ',' << format_real(set->vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << "\r\n";
    }
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ParameterError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mdreg::io
