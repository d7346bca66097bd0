#include "limeattack/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "http_json.hpp"

namespace limeattack {

namespace {

std::size_t accumulate_mean(const VectorStore& store, const TokenSequence& seq, std::vector<double>& sum) {
  sum.assign(store.dim(), 0.0);
  std::size_t covered = 0;
  for (const auto& tok : seq.tokens()) {
    const auto v = store.vector(tok);
    if (v.empty()) continue;
    ++covered;
    for (std::size_t d = 0; d < v.size(); ++d) sum[d] += v[d];
  }
  if (covered)
    for (double& x : sum) x /= static_cast<double>(covered);
  return covered;
}

}  // namespace

double mean_embedding_similarity(const VectorStore& store, const TokenSequence& a, const TokenSequence& b) {
  std::vector<double> ma, mb;
  if (accumulate_mean(store, a, ma) == 0 || accumulate_mean(store, b, mb) == 0)
    throw Error(ErrorCode::NoCoverage, "sequence has no in-vocabulary tokens");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t d = 0; d < ma.size(); ++d) {
    dot += ma[d] * mb[d];
    na += ma[d] * ma[d];
    nb += mb[d] * mb[d];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::NoCoverage, "mean embedding is the zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

class ForwardingBound : public BoundSimilarity {
 public:
  ForwardingBound(const SimilarityProvider& provider, TokenSequence reference)
      : provider_(provider), reference_(std::move(reference)) {}
  double operator()(const TokenSequence& other) const override { return provider_.similarity(reference_, other); }

 private:
  const SimilarityProvider& provider_;
  TokenSequence reference_;
};

class MeanEmbeddingBound : public BoundSimilarity {
 public:
  MeanEmbeddingBound(const VectorStore& store, const TokenSequence& reference)
      : store_(store), reference_(reference) {
    covered_ = accumulate_mean(store_, reference_, sum_);
    for (double& x : sum_) x *= static_cast<double>(covered_);
    for (double x : sum_) norm_sq_ += x * x;
  }

  double operator()(const TokenSequence& other) const override {
    if (other.size() != reference_.size() || covered_ == 0 || norm_sq_ == 0.0)
      return mean_embedding_similarity(store_, reference_, other);
    std::vector<double> sum = sum_;
    std::size_t covered = covered_;
    auto apply = [&](std::size_t i) {
      const auto& was = reference_[i];
      const auto& now = other[i];
      if (was == now) return;
      if (const auto v = store_.vector(was); !v.empty()) {
        for (std::size_t d = 0; d < v.size(); ++d) sum[d] -= v[d];
        --covered;
      }
      if (const auto v = store_.vector(now); !v.empty()) {
        for (std::size_t d = 0; d < v.size(); ++d) sum[d] += v[d];
        ++covered;
      }
    };
    if (reference_.has_original() && reference_.substitution_count() == 0 &&
        other.original_handle() == reference_.original_handle()) {
      for (auto i : other.substituted_positions()) apply(i);
    } else {
      for (std::size_t i = 0; i < other.size(); ++i) apply(i);
    }
    if (covered == 0) throw Error(ErrorCode::NoCoverage, "sequence has no in-vocabulary tokens");
    double dot = 0.0, nb = 0.0;
    for (std::size_t d = 0; d < sum.size(); ++d) {
      dot += sum_[d] * sum[d];
      nb += sum[d] * sum[d];
    }
    if (nb <= 0.0) throw Error(ErrorCode::NoCoverage, "mean embedding is the zero vector");
    return std::clamp(dot / (std::sqrt(norm_sq_) * std::sqrt(nb)), -1.0, 1.0);
  }

 private:
  const VectorStore& store_;
  TokenSequence reference_;
  std::vector<double> sum_;
  std::size_t covered_ = 0;
  double norm_sq_ = 0.0;
};

}  // namespace

std::unique_ptr<BoundSimilarity> SimilarityProvider::bind(const TokenSequence& reference) const {
  return std::make_unique<ForwardingBound>(*this, reference);
}

std::unique_ptr<BoundSimilarity> MeanEmbeddingSimilarity::bind(const TokenSequence& reference) const {
  return std::make_unique<MeanEmbeddingBound>(store_, reference);
}

double remote_similarity(const RemoteSimilarityOptions& options, const std::string& a, const std::string& b) {
  const detail::RetryPolicy policy{options.retries, options.initial_backoff, options.timeout};
  const auto reply = detail::post_json(detail::parse_endpoint(options.url), {{"a", a}, {"b", b}}, policy);
  if (!reply.is_object() || !reply.contains("similarity") || !reply["similarity"].is_number())
    throw Error(ErrorCode::MalformedResponse, "response lacks a numeric 'similarity'");
  const double value = reply["similarity"].get<double>();
  if (!std::isfinite(value)) throw Error(ErrorCode::MalformedResponse, "similarity is not finite");
  return std::clamp(value, -1.0, 1.0);
}

RemoteSimilarity::RemoteSimilarity(RemoteSimilarityOptions options) : options_(std::move(options)) {
  detail::parse_endpoint(options_.url);
}

double RemoteSimilarity::similarity(const TokenSequence& a, const TokenSequence& b) const {
  return remote_similarity(options_, a.joined(), b.joined());
}

}  // namespace limeattack
