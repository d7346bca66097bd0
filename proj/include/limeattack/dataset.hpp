#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "limeattack/core.hpp"

namespace limeattack {

struct DatasetRow {
  std::size_t id;  // 0-based row index in the file, header excluded
  Label label;
  std::string text;
  TokenSequence tokens;
};

// One row per line: integer label, delimiter, text. A first line whose label
// field is not an integer is taken as a header. Blank lines are skipped.
// Throws ParseError(line) or EmptyText for rows without tokens.
std::vector<DatasetRow> load_dataset(const std::filesystem::path& path, char delimiter = '\t');

void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRow>& rows, char delimiter = '\t');

// Indices of `count` rows chosen with `seed`, ascending. All rows when
// count is 0 or exceeds the dataset size.
std::vector<std::size_t> sample_rows(std::size_t dataset_size, std::size_t count, std::uint64_t seed);

}  // namespace limeattack
