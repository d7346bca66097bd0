#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace limeattack {

enum class ErrorCode {
  EmptyText,
  LengthMismatch,
  BudgetExhausted,
  DegenerateCorpus,
  Timeout,
  MalformedResponse,
  ServerError,
  TransportError,
  ParseError,
  DimensionMismatch,
  UnknownWord,
  TooShort,
  ZeroVector,
  SingularSystem,
  NoAttackablePositions,
  Exhausted,
  ScoreUnavailable,
  NoCoverage,
  EmptyRun,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library. `detail()` carries the HTTP status for
// ServerError and the 1-based line number for ParseError/DimensionMismatch.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, long detail = 0);

  ErrorCode code() const noexcept { return code_; }
  long detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  long detail_;
};

class BudgetExhausted : public Error {
 public:
  BudgetExhausted();
};

inline constexpr std::string_view kMaskToken = "[MASK]";

// A tokenized sample. Derived sequences keep a shared handle to the
// unperturbed tokens so substituted positions can be tracked incrementally.
class TokenSequence {
 public:
  explicit TokenSequence(std::vector<std::string> tokens);

  // Sequence whose unperturbed reference is `original`; lengths must agree.
  TokenSequence(std::vector<std::string> tokens,
                std::shared_ptr<const std::vector<std::string>> original);

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  bool has_original() const noexcept { return original_ != nullptr; }
  // Falls back to this sequence's own tokens when no original is attached.
  const std::vector<std::string>& original_tokens() const noexcept;
  const std::shared_ptr<const std::vector<std::string>>& original_handle() const noexcept {
    return original_;
  }

  // Sorted ascending.
  const std::vector<std::size_t>& substituted_positions() const noexcept { return substituted_; }
  std::size_t substitution_count() const noexcept { return substituted_.size(); }

  // Copy with tokens[position] replaced. When this sequence has no original,
  // it becomes the original of the result.
  TokenSequence with_substitution(std::size_t position, std::string word) const;

  std::string joined() const;

  friend bool operator==(const TokenSequence& a, const TokenSequence& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::shared_ptr<const std::vector<std::string>> original_;
  std::vector<std::size_t> substituted_;
};

struct Label {
  std::size_t id = 0;
  std::optional<std::string> name;

  friend bool operator==(const Label& a, const Label& b) { return a.id == b.id; }
};

enum class RankingSource { Lime, Random, Deletion };
enum class SamplingRule { Stratified, TopSim, BottomSim, UniformRandom };
// How the kernel turns a mask into a distance. `CosineSimilarity` feeds the
// raw cosine into the exponential; `CosineDistance` uses 1 - cosine.
enum class KernelDistance { CosineSimilarity, CosineDistance };

std::string_view to_string(RankingSource s);
std::string_view to_string(SamplingRule r);
std::string_view to_string(KernelDistance d);
RankingSource parse_ranking_source(std::string_view s);
SamplingRule parse_sampling_rule(std::string_view s);
KernelDistance parse_kernel_distance(std::string_view s);

struct AttackConfig {
  std::size_t query_budget = 100;
  double pert_threshold = 0.10;
  std::size_t beam_size = 10;
  std::size_t synonym_k = 50;
  double kernel_width = 25.0;
  double ridge_lambda = 1e-3;
  // nullopt means auto: min(n, floor(budget / 2)).
  std::optional<std::size_t> lime_query_cap;
  std::uint64_t seed = 1234;
  RankingSource ranking = RankingSource::Lime;
  SamplingRule rule = SamplingRule::Stratified;
  KernelDistance kernel_distance = KernelDistance::CosineSimilarity;

  // Throws Error(InvalidConfig).
  void validate() const;
};

enum class AttackStatus { Success, BudgetExhausted, CandidatesExhausted, SkippedMisclassified };

std::string_view to_string(AttackStatus s);
AttackStatus parse_attack_status(std::string_view s);

struct AttackOutcome {
  std::size_t sample_id = 0;
  AttackStatus status = AttackStatus::CandidatesExhausted;
  std::optional<TokenSequence> adversarial;
  double pert_rate = 0.0;
  double similarity = 0.0;
  std::size_t queries_used = 0;
  RankingSource ranking_source = RankingSource::Lime;
};

// Whitespace split, then leading/trailing ASCII punctuation peeled off each
// chunk one character per token. Internal punctuation ("don't") is kept.
TokenSequence tokenize(std::string_view text);

// Fraction of positions whose tokens differ (exact, case-sensitive).
double perturbation_rate(const TokenSequence& x, const TokenSequence& x_adv);

// Derives an independent 64-bit stream seed from a run seed and a sample index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace limeattack
