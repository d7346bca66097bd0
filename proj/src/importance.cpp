#include "limeattack/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace limeattack {

TokenSequence apply_mask(const TokenSequence& x, const Mask& mask) {
  if (mask.size() != x.size()) throw Error(ErrorCode::LengthMismatch, "mask length differs from sequence");
  std::vector<std::string> tokens = x.tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!mask[i]) tokens[i] = std::string(kMaskToken);
  return TokenSequence(std::move(tokens));
}

namespace {

bool mixed(const Mask& mask) {
  const auto kept = std::count(mask.begin(), mask.end(), std::uint8_t{1});
  return kept > 0 && static_cast<std::size_t>(kept) < mask.size();
}

}  // namespace

std::vector<NeighborhoodSample> sample_neighborhood(const TokenSequence& x, std::size_t m, Rng& rng) {
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "neighborhood sampling needs at least two tokens");
  std::vector<NeighborhoodSample> out;
  out.reserve(m);
  Mask mask(n);
  for (std::size_t s = 0; s < m; ++s) {
    do {
      for (std::size_t i = 0; i < n; ++i) mask[i] = static_cast<std::uint8_t>(rng() >> 63);
    } while (!mixed(mask));
    out.push_back(NeighborhoodSample{mask, apply_mask(x, mask), std::nullopt, 0.0});
  }
  return out;
}

std::vector<NeighborhoodSample> exhaustive_neighborhood(const TokenSequence& x) {
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "neighborhood sampling needs at least two tokens");
  if (n > 24) throw Error(ErrorCode::InvalidConfig, "exhaustive neighborhood is limited to 24 tokens");
  std::vector<NeighborhoodSample> out;
  const std::uint64_t total = std::uint64_t{1} << n;
  out.reserve(static_cast<std::size_t>(total - 2));
  Mask mask(n);
  for (std::uint64_t bits = 1; bits + 1 < total; ++bits) {
    for (std::size_t i = 0; i < n; ++i) mask[i] = static_cast<std::uint8_t>((bits >> i) & 1u);
    out.push_back(NeighborhoodSample{mask, apply_mask(x, mask), std::nullopt, 0.0});
  }
  return out;
}

double cosine_binary(std::span<const std::uint8_t> v1, std::span<const std::uint8_t> v2) {
  if (v1.size() != v2.size()) throw Error(ErrorCode::LengthMismatch, "binary vectors differ in length");
  std::size_t dot = 0, n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    const bool a = v1[i] != 0, b = v2[i] != 0;
    dot += a && b;
    n1 += a;
    n2 += b;
  }
  if (n1 == 0 || n2 == 0) throw Error(ErrorCode::ZeroVector, "binary vector has no set component");
  return static_cast<double>(dot) / (std::sqrt(static_cast<double>(n1)) * std::sqrt(static_cast<double>(n2)));
}

double kernel_weight(double d, double sigma) { return std::exp(-(d * d) / (sigma * sigma)); }

void label_samples(std::vector<NeighborhoodSample>& samples, const HardLabelOracle& oracle, QueryLedger& ledger,
                   const Label& benign) {
  for (auto& s : samples) {
    s.label = ledger.query(oracle, s.text);
    s.target = *s.label == benign ? 1.0 : 0.0;
  }
}

void label_samples(std::vector<NeighborhoodSample>& samples, const HardLabelOracle& oracle, const Label& benign) {
  for (auto& s : samples) {
    s.label = oracle.predict(s.text);
    s.target = *s.label == benign ? 1.0 : 0.0;
  }
}

namespace {

// In-place Cholesky solve of a symmetric positive definite system stored
// row-major in `a` (p x p). Returns false when a pivot is not positive.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double diag = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * p + k] * a[j * p + k];
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    a[j * p + j] = ljj;
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = v / ljj;
    }
  }
  // L y = b
  for (std::size_t i = 0; i < p; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * p + k] * b[k];
    b[i] = v / a[i * p + i];
  }
  // L^T z = y
  for (std::size_t ii = p; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < p; ++k) v -= a[k * p + ii] * b[k];
    b[ii] = v / a[ii * p + ii];
  }
  return true;
}

}  // namespace

SurrogateFit fit_surrogate(const TokenSequence& x, std::span<const NeighborhoodSample> samples, double sigma,
                           double lambda, KernelDistance distance) {
  const std::size_t n = x.size();
  const std::size_t p = n + 1;
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "kernel width must be positive");
  if (lambda < 0.0) throw Error(ErrorCode::InvalidConfig, "ridge lambda must be non-negative");

  const Mask benign(n, 1);
  SurrogateFit fit;
  fit.kernel_width = sigma;
  fit.ridge_lambda = lambda;
  fit.weights.reserve(samples.size());

  // Normal equations over z = [1, v]: (sum w z z^T + lambda D) beta = sum w t z,
  // with D = diag(0, 1, ..., 1).
  std::vector<double> a(p * p, 0.0);
  std::vector<double> rhs(p, 0.0);
  for (const auto& s : samples) {
    if (!s.label) throw Error(ErrorCode::InvalidConfig, "neighborhood sample has no label");
    if (s.mask.size() != n) throw Error(ErrorCode::LengthMismatch, "mask length differs from sequence");
    const double cos = cosine_binary(s.mask, benign);
    const double d = distance == KernelDistance::CosineSimilarity ? cos : 1.0 - cos;
    const double w = kernel_weight(d, sigma);
    fit.weights.push_back(w);

    a[0] += w;
    rhs[0] += w * s.target;
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.mask[i]) continue;
      a[(i + 1) * p] += w;
      rhs[i + 1] += w * s.target;
      for (std::size_t j = 0; j <= i; ++j)
        if (s.mask[j]) a[(i + 1) * p + (j + 1)] += w;
    }
  }
  for (std::size_t i = 1; i < p; ++i) {
    a[i * p + i] += lambda;
    for (std::size_t j = 0; j < i; ++j) a[j * p + i] = a[i * p + j];
  }

  if (!cholesky_solve(a, rhs, p))
    throw Error(ErrorCode::SingularSystem, "surrogate normal equations are not positive definite");

  fit.theta0 = rhs[0];
  fit.theta.assign(rhs.begin() + 1, rhs.end());
  for (double t : fit.theta)
    if (!std::isfinite(t)) throw Error(ErrorCode::SingularSystem, "surrogate solution is not finite");
  return fit;
}

std::vector<std::size_t> attackable_positions(const TokenSequence& x, const StopWordList& stops,
                                              const VectorStore& store) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!stops.contains(x[i]) && store.contains(x[i])) out.push_back(i);
  return out;
}

ImportanceRanking rank_by_scores(const TokenSequence& x, std::span<const double> scores, const StopWordList& stops,
                                 const VectorStore& store) {
  if (scores.size() != x.size()) throw Error(ErrorCode::LengthMismatch, "score length differs from sequence");
  ImportanceRanking ranking;
  ranking.order = attackable_positions(x, stops, store);
  if (ranking.order.empty()) throw Error(ErrorCode::NoAttackablePositions, "no attackable positions");
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (auto i : ranking.order) ranking.scores[i] = scores[i];
  return ranking;
}

ImportanceRanking deletion_rank(const TokenSequence& x, const HardLabelOracle& scorer, const StopWordList& stops,
                                const VectorStore& store, QueryLedger* ledger) {
  const auto* scoring = dynamic_cast<const ScoringOracle*>(&scorer);
  if (!scoring) throw Error(ErrorCode::ScoreUnavailable, "victim exposes no class probabilities");

  auto probe = [&](const TokenSequence& text) {
    if (ledger) ledger->charge();
    return scoring->probabilities(text);
  };
  const auto base = probe(x);
  const auto original_class =
      static_cast<std::size_t>(std::max_element(base.begin(), base.end()) - base.begin());

  std::vector<double> scores(x.size(), 0.0);
  const auto attackable = attackable_positions(x, stops, store);
  if (attackable.empty()) throw Error(ErrorCode::NoAttackablePositions, "no attackable positions");
  for (auto i : attackable) {
    std::vector<std::string> rest;
    rest.reserve(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) rest.push_back(x[j]);
    // Deleting the only word leaves the mask token as a placeholder.
    if (rest.empty()) rest.emplace_back(kMaskToken);
    const auto without = probe(TokenSequence(std::move(rest)));
    scores[i] = base[original_class] - without[original_class];
  }
  return rank_by_scores(x, scores, stops, store);
}

ImportanceRanking random_rank(const TokenSequence& x, const StopWordList& stops, const VectorStore& store, Rng& rng) {
  ImportanceRanking ranking;
  ranking.order = attackable_positions(x, stops, store);
  if (ranking.order.empty()) throw Error(ErrorCode::NoAttackablePositions, "no attackable positions");
  std::shuffle(ranking.order.begin(), ranking.order.end(), rng);
  for (std::size_t r = 0; r < ranking.order.size(); ++r)
    ranking.scores[ranking.order[r]] = static_cast<double>(ranking.order.size() - r);
  return ranking;
}

}  // namespace limeattack
