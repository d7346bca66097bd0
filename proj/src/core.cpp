#include "limeattack/core.hpp"

#include <algorithm>
#include <cctype>

namespace limeattack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::DegenerateCorpus: return "DegenerateCorpus";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::ServerError: return "ServerError";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownWord: return "UnknownWord";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoAttackablePositions: return "NoAttackablePositions";
    case ErrorCode::Exhausted: return "Exhausted";
    case ErrorCode::ScoreUnavailable: return "ScoreUnavailable";
    case ErrorCode::NoCoverage: return "NoCoverage";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, long detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(detail) {}

BudgetExhausted::BudgetExhausted()
    : Error(ErrorCode::BudgetExhausted, "query budget exhausted") {}

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw Error(ErrorCode::EmptyText, "token sequence is empty");
}

TokenSequence::TokenSequence(std::vector<std::string> tokens,
                             std::shared_ptr<const std::vector<std::string>> original)
    : tokens_(std::move(tokens)), original_(std::move(original)) {
  if (tokens_.empty()) throw Error(ErrorCode::EmptyText, "token sequence is empty");
  if (original_) {
    if (original_->size() != tokens_.size())
      throw Error(ErrorCode::LengthMismatch, "derived sequence length differs from original");
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      if (tokens_[i] != (*original_)[i]) substituted_.push_back(i);
  }
}

const std::vector<std::string>& TokenSequence::original_tokens() const noexcept {
  return original_ ? *original_ : tokens_;
}

TokenSequence TokenSequence::with_substitution(std::size_t position, std::string word) const {
  if (position >= tokens_.size())
    throw Error(ErrorCode::LengthMismatch, "substitution position out of range");
  TokenSequence out = *this;
  if (!out.original_) out.original_ = std::make_shared<const std::vector<std::string>>(tokens_);
  out.tokens_[position] = std::move(word);
  const bool differs = out.tokens_[position] != (*out.original_)[position];
  auto it = std::lower_bound(out.substituted_.begin(), out.substituted_.end(), position);
  const bool listed = it != out.substituted_.end() && *it == position;
  if (differs && !listed) out.substituted_.insert(it, position);
  if (!differs && listed) out.substituted_.erase(it);
  return out;
}

std::string TokenSequence::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens_[i];
  }
  return out;
}

std::string_view to_string(RankingSource s) {
  switch (s) {
    case RankingSource::Lime: return "lime";
    case RankingSource::Random: return "random";
    case RankingSource::Deletion: return "deletion";
  }
  return "lime";
}

std::string_view to_string(SamplingRule r) {
  switch (r) {
    case SamplingRule::Stratified: return "stratified";
    case SamplingRule::TopSim: return "top";
    case SamplingRule::BottomSim: return "bottom";
    case SamplingRule::UniformRandom: return "random";
  }
  return "stratified";
}

std::string_view to_string(KernelDistance d) {
  return d == KernelDistance::CosineSimilarity ? "cosine" : "one-minus-cosine";
}

RankingSource parse_ranking_source(std::string_view s) {
  if (s == "lime") return RankingSource::Lime;
  if (s == "random") return RankingSource::Random;
  if (s == "deletion") return RankingSource::Deletion;
  throw Error(ErrorCode::InvalidConfig, "unknown ranking source '" + std::string(s) + "'");
}

SamplingRule parse_sampling_rule(std::string_view s) {
  if (s == "stratified") return SamplingRule::Stratified;
  if (s == "top") return SamplingRule::TopSim;
  if (s == "bottom") return SamplingRule::BottomSim;
  if (s == "random") return SamplingRule::UniformRandom;
  throw Error(ErrorCode::InvalidConfig, "unknown sampling rule '" + std::string(s) + "'");
}

KernelDistance parse_kernel_distance(std::string_view s) {
  if (s == "cosine") return KernelDistance::CosineSimilarity;
  if (s == "one-minus-cosine") return KernelDistance::CosineDistance;
  throw Error(ErrorCode::InvalidConfig, "unknown kernel distance '" + std::string(s) + "'");
}

void AttackConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (query_budget < 1) fail("query budget must be at least 1");
  if (!(pert_threshold > 0.0 && pert_threshold <= 1.0)) fail("perturbation threshold must be in (0, 1]");
  if (beam_size < 1) fail("beam size must be at least 1");
  if (synonym_k < 1) fail("synonym k must be at least 1");
  if (!(kernel_width > 0.0)) fail("kernel width must be positive");
  // A zero ridge term can leave the normal equations singular.
  if (!(ridge_lambda > 0.0)) fail("ridge lambda must be positive");
  if (lime_query_cap) {
    if (*lime_query_cap < 1) fail("LIME query cap must be at least 1");
    if (*lime_query_cap > query_budget) fail("LIME query cap exceeds the query budget");
  }
}

std::string_view to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::Success: return "Success";
    case AttackStatus::BudgetExhausted: return "BudgetExhausted";
    case AttackStatus::CandidatesExhausted: return "CandidatesExhausted";
    case AttackStatus::SkippedMisclassified: return "SkippedMisclassified";
  }
  return "CandidatesExhausted";
}

AttackStatus parse_attack_status(std::string_view s) {
  if (s == "Success") return AttackStatus::Success;
  if (s == "BudgetExhausted") return AttackStatus::BudgetExhausted;
  if (s == "CandidatesExhausted") return AttackStatus::CandidatesExhausted;
  if (s == "SkippedMisclassified") return AttackStatus::SkippedMisclassified;
  throw Error(ErrorCode::ParseError, "unknown attack status '" + std::string(s) + "'");
}

namespace {

bool is_ascii_punct(char c) {
  return static_cast<unsigned char>(c) < 0x80 && std::ispunct(static_cast<unsigned char>(c));
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (begin < end && is_ascii_punct(chunk[begin])) {
    out.emplace_back(1, chunk[begin]);
    ++begin;
  }
  std::vector<std::string> trailing;
  while (end > begin && is_ascii_punct(chunk[end - 1])) {
    trailing.emplace_back(1, chunk[end - 1]);
    --end;
  }
  if (end > begin) out.emplace_back(chunk.substr(begin, end - begin));
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) split_chunk(text.substr(i, j - i), tokens);
    i = j;
  }
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "text has no tokens");
  return TokenSequence(std::move(tokens));
}

double perturbation_rate(const TokenSequence& x, const TokenSequence& x_adv) {
  if (x.size() != x_adv.size())
    throw Error(ErrorCode::LengthMismatch, "sequences differ in length");
  std::size_t differing = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != x_adv[i]) ++differing;
  return static_cast<double>(differing) / static_cast<double>(x.size());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace limeattack
