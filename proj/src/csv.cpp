#include "tmatch/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <unordered_map>

#include "tmatch/error.hpp"

namespace tmatch {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw Error(ErrorKind::kInvalidInput, "line " + std::to_string(line_no) + ": " + msg);
}

double parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail(line_no, "column '" + std::string(column) + "' is not a finite number: '" +
                      std::string(field) + "'");
  }
  return value;
}

struct GeoRow {
  double spend = 0.0;
  double response = 0.0;
  std::size_t line = 0;
};

struct GeoPairRows {
  std::optional<GeoRow> treatment;
  std::optional<GeoRow> control;
};

}  // namespace

CsvSchema parse_schema(std::string_view name) {
  if (name == "auto") return CsvSchema::kAuto;
  if (name == "paired") return CsvSchema::kPaired;
  if (name == "geo" || name == "geo-level" || name == "geo_level") return CsvSchema::kGeoLevel;
  throw Error(ErrorKind::kInvalidInput, "unknown schema '" + std::string(name) + "'");
}

PairedDataset read_paired_csv(std::istream& in, CsvSchema schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (!trim(line).empty()) {
      header_line = line;
      header = split_fields(header_line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorKind::kInvalidInput, "empty input: missing header");

  const std::vector<std::string_view> paired_header{"pair", "x", "y"};
  const std::vector<std::string_view> geo_header{"geo", "pair", "assignment", "spend", "response"};
  if (schema == CsvSchema::kAuto) {
    if (header == paired_header) {
      schema = CsvSchema::kPaired;
    } else if (header == geo_header) {
      schema = CsvSchema::kGeoLevel;
    } else {
      fail(line_no, "unrecognized header '" + header_line + "'");
    }
  }
  const auto& expected = schema == CsvSchema::kPaired ? paired_header : geo_header;
  if (header != expected) {
    std::string want;
    for (auto f : expected) want += (want.empty() ? "" : ",") + std::string(f);
    fail(line_no, "expected header '" + want + "'");
  }

  PairedDataset data;
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<GeoPairRows> geo_pairs;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != expected.size()) {
      fail(line_no, "expected " + std::to_string(expected.size()) + " fields, found " +
                        std::to_string(fields.size()));
    }
    if (schema == CsvSchema::kPaired) {
      std::string id(fields[0]);
      if (id.empty()) fail(line_no, "empty pair id");
      if (!seen.emplace(id, data.diffs.size()).second) {
        fail(line_no, "duplicate pair id '" + id + "'");
      }
      data.pair_ids.push_back(std::move(id));
      data.diffs.push_back({parse_number(fields[1], line_no, "x"),
                            parse_number(fields[2], line_no, "y")});
      continue;
    }

    std::string id(fields[1]);
    if (id.empty()) fail(line_no, "empty pair id");
    const double spend = parse_number(fields[3], line_no, "spend");
    const double response = parse_number(fields[4], line_no, "response");
    auto [it, inserted] = seen.emplace(id, geo_pairs.size());
    if (inserted) {
      geo_pairs.emplace_back();
      data.pair_ids.push_back(id);
    }
    auto& rows = geo_pairs[it->second];
    const GeoRow row{spend, response, line_no};
    if (fields[2] == "treatment") {
      if (rows.treatment) fail(line_no, "pair '" + id + "' has two treatment geos");
      rows.treatment = row;
    } else if (fields[2] == "control") {
      if (rows.control) fail(line_no, "pair '" + id + "' has two control geos");
      rows.control = row;
    } else {
      fail(line_no, "assignment must be 'treatment' or 'control', got '" +
                        std::string(fields[2]) + "'");
    }
  }

  if (schema == CsvSchema::kGeoLevel) {
    std::vector<GeoPairOutcome> outcomes;
    outcomes.reserve(geo_pairs.size());
    for (std::size_t k = 0; k < geo_pairs.size(); ++k) {
      const auto& rows = geo_pairs[k];
      if (!rows.treatment || !rows.control) {
        const std::size_t at = rows.treatment ? rows.treatment->line : rows.control->line;
        fail(at, "pair '" + data.pair_ids[k] + "' needs exactly one treatment and one control geo");
      }
      outcomes.push_back({data.pair_ids[k], rows.treatment->spend, rows.treatment->response,
                          rows.control->spend, rows.control->response, 1});
    }
    data.diffs = compute_differences(outcomes);
  }
  if (data.diffs.empty()) throw Error(ErrorKind::kInvalidInput, "no data rows");
  return data;
}

PairedDataset load_paired_csv(const std::filesystem::path& path, CsvSchema schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInvalidInput, "cannot open '" + path.string() + "'");
  return read_paired_csv(in, schema);
}

}  // namespace tmatch
