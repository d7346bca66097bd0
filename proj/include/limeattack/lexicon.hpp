#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "limeattack/core.hpp"

namespace limeattack {

// Immutable word-embedding table. Rows are stored contiguously in insertion
// order; norms are precomputed for cosine queries.
class VectorStore {
 public:
  VectorStore() = default;
  explicit VectorStore(std::size_t dim);

  // Returns false (and keeps the existing row) for duplicate words.
  // Throws DimensionMismatch or ParseError (non-finite component).
  bool add(std::string word, std::span<const double> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool contains(std::string_view word) const;
  std::optional<std::size_t> index_of(std::string_view word) const;
  // Empty span when the word is absent.
  std::span<const double> vector(std::string_view word) const;
  std::span<const double> row(std::size_t index) const;
  const std::string& word(std::size_t index) const { return words_[index]; }
  double norm(std::size_t index) const { return norms_[index]; }

  void save(const std::filesystem::path& path) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text format: optional "count dim" header, then "word v1 ... vdim" rows.
VectorStore load_vectors(const std::filesystem::path& path);

struct Candidate {
  std::string synonym;
  double cosine;
};

struct CandidateSet {
  std::string word;
  std::vector<Candidate> candidates;  // descending by cosine
};

// Brute-force cosine kNN; ties by lexicographic word order. Throws UnknownWord.
CandidateSet top_k_synonyms(const VectorStore& store, std::string_view word, std::size_t k);

class StopWordList {
 public:
  StopWordList() = default;
  explicit StopWordList(std::vector<std::string> words);

  // The bundled English list.
  static const StopWordList& english();
  static StopWordList load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

inline bool is_stop_word(const StopWordList& list, std::string_view word) { return list.contains(word); }

}  // namespace limeattack
