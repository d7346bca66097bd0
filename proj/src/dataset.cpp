#include "limeattack/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>

namespace limeattack {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_label(std::string_view s, std::size_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

std::vector<DatasetRow> load_dataset(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<DatasetRow> rows;
  std::string line;
  long line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cut = line.find(delimiter);
    std::size_t label = 0;
    const bool has_label = cut != std::string::npos && parse_label(std::string_view(line).substr(0, cut), label);
    if (!has_label) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": expected '<label>" +
                      std::string(1, delimiter == '\t' ? ' ' : delimiter) + "<text>'",
                  line_no);
    }
    first = false;
    const std::string text(trim(std::string_view(line).substr(cut + 1)));
    if (text.empty())
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": empty text", line_no);
    rows.push_back(DatasetRow{rows.size(), Label{label, std::nullopt}, text, tokenize(text)});
  }
  return rows;
}

void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRow>& rows, char delimiter) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : rows) out << r.label.id << delimiter << r.text << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<std::size_t> sample_rows(std::size_t dataset_size, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count == 0 || count >= dataset_size) return idx;
  std::mt19937_64 rng(derive_seed(seed, 0xda7a5e7ULL));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace limeattack
