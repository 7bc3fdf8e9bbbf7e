#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tmatch/paired_data.hpp"

namespace tmatch {

// Paired schema: header `pair,x,y`.
// Geo-level schema: header `geo,pair,assignment,spend,response`, assignment in
// {treatment, control}, exactly one of each per pair.
enum class CsvSchema { kAuto, kPaired, kGeoLevel };

[[nodiscard]] CsvSchema parse_schema(std::string_view name);

struct PairedDataset {
  std::vector<std::string> pair_ids;
  std::vector<PairedDifference> diffs;
};

// Schema violations throw Error(kInvalidInput) with the 1-based line number.
// Pairs come out in order of first appearance.
[[nodiscard]] PairedDataset read_paired_csv(std::istream& in, CsvSchema schema = CsvSchema::kAuto);
[[nodiscard]] PairedDataset load_paired_csv(const std::filesystem::path& path,
                                            CsvSchema schema = CsvSchema::kAuto);

}  // namespace tmatch
