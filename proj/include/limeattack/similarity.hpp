#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include "limeattack/core.hpp"
#include "limeattack/lexicon.hpp"

namespace limeattack {

// Similarity against one fixed reference sentence.
class BoundSimilarity {
 public:
  virtual ~BoundSimilarity() = default;
  virtual double operator()(const TokenSequence& other) const = 0;
};

// Sentence similarity in [-1, 1]. Never charged against the query budget.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double similarity(const TokenSequence& a, const TokenSequence& b) const = 0;

  // The returned scorer must not outlive this provider. The default forwards
  // to similarity(reference, other).
  virtual std::unique_ptr<BoundSimilarity> bind(const TokenSequence& reference) const;
};

// Cosine of the mean in-vocabulary word vectors. Throws NoCoverage when either
// side has no token in the store.
double mean_embedding_similarity(const VectorStore& store, const TokenSequence& a, const TokenSequence& b);

class MeanEmbeddingSimilarity : public SimilarityProvider {
 public:
  explicit MeanEmbeddingSimilarity(const VectorStore& store) : store_(store) {}
  double similarity(const TokenSequence& a, const TokenSequence& b) const override {
    return mean_embedding_similarity(store_, a, b);
  }
  // Updates the reference's vector sum at the substituted positions only.
  std::unique_ptr<BoundSimilarity> bind(const TokenSequence& reference) const override;

 private:
  const VectorStore& store_;
};

struct RemoteSimilarityOptions {
  std::string url;
  std::chrono::milliseconds timeout{10000};
  int retries = 3;
  std::chrono::milliseconds initial_backoff{500};
};

// POST {"a": ..., "b": ...} -> {"similarity": float}, clamped to [-1, 1].
double remote_similarity(const RemoteSimilarityOptions& options, const std::string& a, const std::string& b);

class RemoteSimilarity : public SimilarityProvider {
 public:
  explicit RemoteSimilarity(RemoteSimilarityOptions options);
  double similarity(const TokenSequence& a, const TokenSequence& b) const override;

 private:
  RemoteSimilarityOptions options_;
};

// Test instrumentation: counts calls to the wrapped provider.
class CountingSimilarity : public SimilarityProvider {
 public:
  explicit CountingSimilarity(const SimilarityProvider& inner) : inner_(inner) {}
  double similarity(const TokenSequence& a, const TokenSequence& b) const override {
    ++calls_;
    return inner_.similarity(a, b);
  }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  const SimilarityProvider& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace limeattack
