#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "limeattack/core.hpp"
#include "limeattack/importance.hpp"
#include "limeattack/lexicon.hpp"
#include "limeattack/similarity.hpp"
#include "limeattack/victim.hpp"

namespace limeattack {

struct BeamState {
  TokenSequence text;
  std::size_t next_rank_pos = 0;
  double similarity = 1.0;
  std::size_t substitutions = 0;
  std::optional<Label> label;
};

// Memoized top-k synonym sets over one store. Safe for concurrent use.
class SynonymIndex {
 public:
  SynonymIndex(const VectorStore& store, std::size_t k) : store_(store), k_(k) {}

  // Empty set for words absent from the store.
  std::shared_ptr<const CandidateSet> candidates(const std::string& word) const;
  std::size_t k() const noexcept { return k_; }

 private:
  const VectorStore& store_;
  std::size_t k_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const CandidateSet>> cache_;
};

using CandidateMap = std::map<std::size_t, std::shared_ptr<const CandidateSet>>;

// True when one more substitution would still keep the perturbation rate
// strictly below the threshold.
bool can_substitute(std::size_t substitutions, std::size_t n, double pert_threshold);

// Children for the state's next ranked position, one per synonym, with the
// position consumed. Children at or above the threshold are dropped.
// Throws Error(Exhausted) when no ranked positions remain.
std::vector<BeamState> expand(const BeamState& state, const ImportanceRanking& ranking,
                              const CandidateMap& candidates, const BoundSimilarity& similarity_to_benign,
                              double pert_threshold);

struct SuccessCheck {
  std::optional<BeamState> success;
  bool budget_exhausted = false;
  std::size_t queried = 0;
};

// Sorts `children` by similarity (descending, stable) and queries them in
// that order. The first label flip is the highest-similarity flip. Labels are
// recorded on the children that were queried.
SuccessCheck check_success(std::vector<BeamState>& children, const HardLabelOracle& oracle, QueryLedger& ledger,
                           const Label& y_true);

std::vector<BeamState> sample_beam(std::vector<BeamState> children, std::size_t b, SamplingRule rule, Rng& rng);

struct AttackResources {
  const StopWordList& stops;
  const VectorStore& store;
  const SynonymIndex& synonyms;
  const SimilarityProvider& similarity;
};

class AttackEngine {
 public:
  // Throws InvalidConfig, or ScoreUnavailable for deletion ranking on a
  // hard-label victim.
  AttackEngine(const HardLabelOracle& oracle, AttackResources resources, AttackConfig config);

  AttackOutcome attack(const TokenSequence& x, const Label& y, std::size_t sample_id = 0) const;

  const AttackConfig& config() const noexcept { return config_; }

 private:
  ImportanceRanking build_ranking(const TokenSequence& x, const Label& y, QueryLedger& ledger, Rng& rng) const;

  const HardLabelOracle& oracle_;
  AttackResources res_;
  AttackConfig config_;
};

}  // namespace limeattack
