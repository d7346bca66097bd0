#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "limeattack/core.hpp"
#include "limeattack/lexicon.hpp"
#include "limeattack/victim.hpp"

namespace limeattack {

using Rng = std::mt19937_64;
using Mask = std::vector<std::uint8_t>;

struct NeighborhoodSample {
  Mask mask;  // 1 = original word kept, 0 = replaced by [MASK]
  TokenSequence text;
  std::optional<Label> label;
  double target = 0.0;  // 1 iff label equals the benign label
};

struct SurrogateFit {
  double theta0 = 0.0;
  std::vector<double> theta;
  std::vector<double> weights;
  double kernel_width = 25.0;
  double ridge_lambda = 1e-3;
};

struct ImportanceRanking {
  std::vector<std::size_t> order;
  std::map<std::size_t, double> scores;
};

// Masked copy of `x`; positions with mask 0 become the literal [MASK] token.
TokenSequence apply_mask(const TokenSequence& x, const Mask& mask);

// m masks, each position kept with probability 1/2, redrawn until the mask
// mixes kept and masked positions. Throws TooShort when n < 2.
std::vector<NeighborhoodSample> sample_neighborhood(const TokenSequence& x, std::size_t m, Rng& rng);

// Every mixed mask of length n (2^n - 2 samples), in binary counting order.
std::vector<NeighborhoodSample> exhaustive_neighborhood(const TokenSequence& x);

// Cosine between two binary vectors. Throws ZeroVector / LengthMismatch.
double cosine_binary(std::span<const std::uint8_t> v1, std::span<const std::uint8_t> v2);

// exp(-d^2 / sigma^2)
double kernel_weight(double d, double sigma);

// Queries the oracle for each sample and fills label and target.
void label_samples(std::vector<NeighborhoodSample>& samples, const HardLabelOracle& oracle, QueryLedger& ledger,
                   const Label& benign);
void label_samples(std::vector<NeighborhoodSample>& samples, const HardLabelOracle& oracle, const Label& benign);

// Kernel-weighted ridge regression of the targets on the masks, intercept
// unpenalized, solved through the normal equations.
SurrogateFit fit_surrogate(const TokenSequence& x, std::span<const NeighborhoodSample> samples, double sigma,
                           double lambda, KernelDistance distance = KernelDistance::CosineSimilarity);

// Positions usable for substitution: not stop words and present in the store.
std::vector<std::size_t> attackable_positions(const TokenSequence& x, const StopWordList& stops,
                                              const VectorStore& store);

// Sorts attackable positions by score descending, index ascending on ties.
// Throws NoAttackablePositions.
ImportanceRanking rank_by_scores(const TokenSequence& x, std::span<const double> scores, const StopWordList& stops,
                                 const VectorStore& store);

inline ImportanceRanking rank_words(const TokenSequence& x, const SurrogateFit& fit, const StopWordList& stops,
                                    const VectorStore& store) {
  if (fit.theta.size() != x.size()) throw Error(ErrorCode::LengthMismatch, "theta length differs from sequence");
  return rank_by_scores(x, fit.theta, stops, store);
}

// Score-based baseline: importance of word i is the drop in the benign
// class probability when the word is deleted. Throws ScoreUnavailable for
// hard-label oracles. Each deletion probe is charged to `ledger` when given.
ImportanceRanking deletion_rank(const TokenSequence& x, const HardLabelOracle& scorer, const StopWordList& stops,
                                const VectorStore& store, QueryLedger* ledger = nullptr);

// Attackable positions in a seeded random order (the ablation baseline).
ImportanceRanking random_rank(const TokenSequence& x, const StopWordList& stops, const VectorStore& store, Rng& rng);

}  // namespace limeattack
