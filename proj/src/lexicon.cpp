#include "limeattack/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace limeattack {

VectorStore::VectorStore(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw Error(ErrorCode::DimensionMismatch, "vector dimension must be positive");
}

bool VectorStore::add(std::string word, std::span<const double> vector) {
  if (dim_ == 0) {
    if (vector.empty()) throw Error(ErrorCode::DimensionMismatch, "empty vector for '" + word + "'");
    dim_ = vector.size();
  }
  if (vector.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "vector for '" + word + "' has " + std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dim_));
  double sq = 0.0;
  for (double v : vector) {
    if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, "non-finite component for '" + word + "'");
    sq += v * v;
  }
  if (index_.count(word)) return false;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  data_.insert(data_.end(), vector.begin(), vector.end());
  norms_.push_back(std::sqrt(sq));
  return true;
}

std::optional<std::size_t> VectorStore::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool VectorStore::contains(std::string_view word) const { return index_of(word).has_value(); }

std::span<const double> VectorStore::row(std::size_t index) const {
  return {data_.data() + index * dim_, dim_};
}

std::span<const double> VectorStore::vector(std::string_view word) const {
  auto idx = index_of(word);
  if (!idx) return {};
  return row(*idx);
}

void VectorStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << words_.size() << ' ' << dim_ << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    out << words_[i];
    for (double v : row(i)) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

VectorStore load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  VectorStore store;
  std::string line;
  std::vector<double> values;
  long line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (first_content) {
      first_content = false;
      std::size_t count = 0, dim = 0;
      if (fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], dim)) continue;
    }
    if (fields.size() < 2)
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": row has no components",
                  line_no);
    values.clear();
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      if (!parse_double(fields[f], v) || !std::isfinite(v))
        throw Error(ErrorCode::ParseError,
                    path.string() + ":" + std::to_string(line_no) + ": bad number '" + std::string(fields[f]) + "'",
                    line_no);
      values.push_back(v);
    }
    if (store.dim() != 0 && values.size() != store.dim())
      throw Error(ErrorCode::DimensionMismatch,
                  path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(store.dim()) +
                      " components, found " + std::to_string(values.size()),
                  line_no);
    store.add(std::string(fields[0]), values);
  }
  if (store.size() == 0) throw Error(ErrorCode::ParseError, path.string() + ": no vectors", line_no);
  return store;
}

CandidateSet top_k_synonyms(const VectorStore& store, std::string_view word, std::size_t k) {
  const auto self = store.index_of(word);
  if (!self) throw Error(ErrorCode::UnknownWord, "'" + std::string(word) + "' is not in the vector store");

  const auto query = store.row(*self);
  const double qn = store.norm(*self);
  std::vector<Candidate> all;
  all.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (i == *self) continue;
    const auto r = store.row(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < r.size(); ++d) dot += query[d] * r[d];
    const double denom = qn * store.norm(i);
    all.push_back({store.word(i), denom > 0.0 ? dot / denom : 0.0});
  }
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.synonym < b.synonym;
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  return CandidateSet{std::string(word), std::move(all)};
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

StopWordList::StopWordList(std::vector<std::string> words) {
  for (auto& w : words) words_.insert(lowercase(w));
}

StopWordList StopWordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto f : split_fields(line)) {
      if (f.front() == '#') break;
      words.emplace_back(f);
    }
  }
  return StopWordList(std::move(words));
}

bool StopWordList::contains(std::string_view word) const { return words_.count(lowercase(word)) > 0; }

}  // namespace limeattack
