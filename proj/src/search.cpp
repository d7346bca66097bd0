#include "limeattack/search.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <unordered_set>

namespace limeattack {

std::shared_ptr<const CandidateSet> SynonymIndex::candidates(const std::string& word) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(word); it != cache_.end()) return it->second;
  }
  std::shared_ptr<const CandidateSet> set;
  if (store_.contains(word))
    set = std::make_shared<const CandidateSet>(top_k_synonyms(store_, word, k_));
  else
    set = std::make_shared<const CandidateSet>(CandidateSet{word, {}});
  std::lock_guard lock(mutex_);
  return cache_.emplace(word, std::move(set)).first->second;
}

bool can_substitute(std::size_t substitutions, std::size_t n, double pert_threshold) {
  return static_cast<double>(substitutions + 1) / static_cast<double>(n) < pert_threshold;
}

namespace {

double safe_similarity(const BoundSimilarity& sim, const TokenSequence& other) {
  try {
    return sim(other);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCoverage) throw;
    std::clog << "limeattack: similarity has no coverage, using 0\n";
    return 0.0;
  }
}

bool expandable(const BeamState& s, const ImportanceRanking& ranking, std::size_t n, double threshold) {
  return s.next_rank_pos < ranking.order.size() && can_substitute(s.substitutions, n, threshold);
}

void sort_by_similarity(std::vector<BeamState>& states) {
  std::stable_sort(states.begin(), states.end(),
                   [](const BeamState& a, const BeamState& b) { return a.similarity > b.similarity; });
}

void dedupe_by_text(std::vector<BeamState>& states) {
  std::unordered_set<std::string> seen;
  std::vector<BeamState> kept;
  kept.reserve(states.size());
  for (auto& s : states)
    if (seen.insert(s.text.joined()).second) kept.push_back(std::move(s));
  states = std::move(kept);
}

}  // namespace

std::vector<BeamState> expand(const BeamState& state, const ImportanceRanking& ranking,
                              const CandidateMap& candidates, const BoundSimilarity& similarity_to_benign,
                              double pert_threshold) {
  if (state.next_rank_pos >= ranking.order.size())
    throw Error(ErrorCode::Exhausted, "no ranked positions remain");
  const std::size_t position = ranking.order[state.next_rank_pos];
  std::vector<BeamState> children;
  if (!can_substitute(state.substitutions, state.text.size(), pert_threshold)) return children;
  auto it = candidates.find(position);
  if (it == candidates.end() || !it->second) return children;

  children.reserve(it->second->candidates.size());
  for (const auto& cand : it->second->candidates) {
    BeamState child{state.text.with_substitution(position, cand.synonym), state.next_rank_pos + 1, 0.0, 0,
                    std::nullopt};
    child.substitutions = child.text.substitution_count();
    if (static_cast<double>(child.substitutions) / static_cast<double>(child.text.size()) >= pert_threshold)
      continue;
    child.similarity = safe_similarity(similarity_to_benign, child.text);
    children.push_back(std::move(child));
  }
  return children;
}

SuccessCheck check_success(std::vector<BeamState>& children, const HardLabelOracle& oracle, QueryLedger& ledger,
                           const Label& y_true) {
  sort_by_similarity(children);
  SuccessCheck result;
  for (auto& child : children) {
    if (ledger.exhausted()) {
      result.budget_exhausted = true;
      return result;
    }
    try {
      child.label = ledger.query(oracle, child.text);
    } catch (const BudgetExhausted&) {
      result.budget_exhausted = true;
      return result;
    }
    ++result.queried;
    if (!(*child.label == y_true)) {
      result.success = child;
      return result;
    }
  }
  return result;
}

namespace {

// Indices [begin, end) drawn uniformly without replacement, `count` of them.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t count, Rng& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

std::vector<BeamState> sample_beam(std::vector<BeamState> children, std::size_t b, SamplingRule rule, Rng& rng) {
  sort_by_similarity(children);
  const std::size_t total = children.size();
  std::vector<bool> chosen(total, false);

  auto take_top = [&](std::size_t count) {
    for (std::size_t i = 0; i < std::min(count, total); ++i) chosen[i] = true;
  };
  auto take_bottom = [&](std::size_t count) {
    std::size_t taken = 0;
    for (std::size_t i = total; i-- > 0 && taken < count;) {
      if (chosen[i]) continue;
      chosen[i] = true;
      ++taken;
    }
  };
  auto take_random = [&](std::size_t count) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < total; ++i)
      if (!chosen[i]) rest.push_back(i);
    for (auto i : draw_without_replacement(std::move(rest), count, rng)) chosen[i] = true;
  };

  switch (rule) {
    case SamplingRule::Stratified: {
      const std::size_t third = b / 3;
      if (third == 0) {
        // Beams narrower than three cannot be split into strata.
        take_top(b);
      } else if (total <= 3 * third) {
        take_top(total);
      } else {
        take_top(third);
        take_bottom(third);
        take_random(third);
      }
      break;
    }
    case SamplingRule::TopSim: take_top(b); break;
    case SamplingRule::BottomSim: take_bottom(b); break;
    case SamplingRule::UniformRandom: take_random(b); break;
  }

  std::vector<BeamState> out;
  for (std::size_t i = 0; i < total; ++i)
    if (chosen[i]) out.push_back(std::move(children[i]));
  return out;
}

AttackEngine::AttackEngine(const HardLabelOracle& oracle, AttackResources resources, AttackConfig config)
    : oracle_(oracle), res_(resources), config_(std::move(config)) {
  config_.validate();
  if (res_.synonyms.k() != config_.synonym_k)
    throw Error(ErrorCode::InvalidConfig, "synonym index k differs from the configured k");
  if (config_.ranking == RankingSource::Deletion && !dynamic_cast<const ScoringOracle*>(&oracle_))
    throw Error(ErrorCode::ScoreUnavailable, "deletion ranking needs a victim that exposes probabilities");
}

ImportanceRanking AttackEngine::build_ranking(const TokenSequence& x, const Label& y, QueryLedger& ledger,
                                              Rng& rng) const {
  switch (config_.ranking) {
    case RankingSource::Random: return random_rank(x, res_.stops, res_.store, rng);
    case RankingSource::Deletion: return deletion_rank(x, oracle_, res_.stops, res_.store, &ledger);
    case RankingSource::Lime: break;
  }
  const std::size_t cap = config_.lime_query_cap.value_or(config_.query_budget / 2);
  const std::size_t m = std::min({x.size(), cap, ledger.remaining()});
  if (x.size() < 2 || m == 0) {
    const std::vector<double> flat(x.size(), 0.0);
    return rank_by_scores(x, flat, res_.stops, res_.store);
  }
  auto samples = sample_neighborhood(x, m, rng);
  label_samples(samples, oracle_, ledger, y);
  const auto fit = fit_surrogate(x, samples, config_.kernel_width, config_.ridge_lambda, config_.kernel_distance);
  return rank_words(x, fit, res_.stops, res_.store);
}

AttackOutcome AttackEngine::attack(const TokenSequence& x, const Label& y, std::size_t sample_id) const {
  AttackOutcome outcome;
  outcome.sample_id = sample_id;
  outcome.ranking_source = config_.ranking;
  outcome.similarity = 1.0;

  QueryLedger ledger(config_.query_budget);
  const std::uint64_t stream = derive_seed(config_.seed, sample_id);
  Rng ranking_rng(derive_seed(stream, 0));
  Rng search_rng(derive_seed(stream, 1));

  auto finish = [&](AttackStatus status) {
    outcome.status = status;
    outcome.queries_used = ledger.used();
    return outcome;
  };

  if (!(ledger.query(oracle_, x) == y)) return finish(AttackStatus::SkippedMisclassified);

  const TokenSequence benign(x.tokens(), std::make_shared<const std::vector<std::string>>(x.tokens()));
  const std::size_t n = benign.size();

  ImportanceRanking ranking;
  try {
    ranking = build_ranking(x, y, ledger, ranking_rng);
  } catch (const BudgetExhausted&) {
    return finish(AttackStatus::BudgetExhausted);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoAttackablePositions) return finish(AttackStatus::CandidatesExhausted);
    throw;
  }

  CandidateMap candidates;
  for (auto pos : ranking.order) candidates[pos] = res_.synonyms.candidates(benign[pos]);

  const auto similarity_to_benign = res_.similarity.bind(benign);
  std::vector<BeamState> beam{BeamState{benign, 0, 1.0, 0, y}};
  while (true) {
    std::vector<BeamState> carried;
    std::vector<BeamState> children;
    for (const auto& state : beam) {
      if (!expandable(state, ranking, n, config_.pert_threshold)) continue;
      auto kids = expand(state, ranking, candidates, *similarity_to_benign, config_.pert_threshold);
      children.insert(children.end(), std::make_move_iterator(kids.begin()), std::make_move_iterator(kids.end()));
      // Skipping the position is represented by the parent moving on.
      BeamState skipped = state;
      ++skipped.next_rank_pos;
      carried.push_back(std::move(skipped));
    }
    if (children.empty() && carried.empty()) return finish(AttackStatus::CandidatesExhausted);

    dedupe_by_text(children);
    auto check = check_success(children, oracle_, ledger, y);
    if (check.success) {
      outcome.adversarial = check.success->text;
      outcome.pert_rate = perturbation_rate(benign, check.success->text);
      outcome.similarity = check.success->similarity;
      return finish(AttackStatus::Success);
    }
    if (check.budget_exhausted) return finish(AttackStatus::BudgetExhausted);

    std::vector<BeamState> pool = std::move(carried);
    pool.insert(pool.end(), std::make_move_iterator(children.begin()), std::make_move_iterator(children.end()));
    dedupe_by_text(pool);
    std::erase_if(pool, [&](const BeamState& s) { return !expandable(s, ranking, n, config_.pert_threshold); });
    if (pool.empty()) return finish(AttackStatus::CandidatesExhausted);
    beam = sample_beam(std::move(pool), config_.beam_size, config_.rule, search_rng);
    if (beam.empty()) return finish(AttackStatus::CandidatesExhausted);
  }
}

}  // namespace limeattack
