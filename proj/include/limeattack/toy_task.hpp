#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "limeattack/dataset.hpp"
#include "limeattack/lexicon.hpp"
#include "limeattack/victim.hpp"

namespace limeattack {

// Synthetic sentiment-style task: embedding clusters around keyword and filler
// heads, a lexicon victim over the keyword clusters, and sentences of 21-27
// tokens. Four sentence families:
//   single   one positive keyword; some synonyms carry no weight
//   negated  one negative keyword in a class-0 sentence; some synonyms flip it
//   near     two keywords; only near synonyms neutralize them, far ones amplify
//   far      two keywords; only far synonyms neutralize them
// The last two need two substitutions and separate similarity-driven beam
// retention rules.
struct ToyTaskOptions {
  std::size_t samples = 500;
  std::size_t dim = 64;
  std::size_t heads_per_family = 8;
  std::size_t filler_heads = 20;
  std::size_t cluster_size = 50;  // synonyms per head
  std::size_t min_tokens = 21;
  std::size_t max_tokens = 27;
  std::uint64_t seed = 20240131;
};

struct ToyTask {
  VectorStore store;
  LexiconVictim victim;
  std::vector<DatasetRow> rows;
};

ToyTask make_toy_task(const ToyTaskOptions& options = {});

// Writes dataset.tsv, vectors.txt and lexicon.json into `dir`.
void save_toy_task(const ToyTask& task, const std::filesystem::path& dir);

}  // namespace limeattack
