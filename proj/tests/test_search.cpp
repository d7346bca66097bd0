#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "limeattack/search.hpp"
#include "support.hpp"

using namespace limeattack;
using testing::put;
using testing::seq;

namespace {

// Flips to class 1 for texts containing any of `triggers`.
class TriggerOracle : public HardLabelOracle {
 public:
  explicit TriggerOracle(std::set<std::string> triggers) : triggers_(std::move(triggers)) {}
  Label predict(const TokenSequence& text) const override {
    for (const auto& t : text.tokens())
      if (triggers_.count(t)) return Label{1};
    return Label{0};
  }
  std::size_t num_classes() const override { return 2; }

 private:
  std::set<std::string> triggers_;
};

class Constant : public HardLabelOracle {
 public:
  Label predict(const TokenSequence&) const override { return Label{0}; }
  std::size_t num_classes() const override { return 2; }
};

BeamState state_with(const TokenSequence& text, double sim) {
  BeamState s{text, 1, sim, text.substitution_count(), std::nullopt};
  return s;
}

std::vector<BeamState> graded(std::size_t count) {
  std::vector<BeamState> out;
  const auto base = seq({"x"});
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(state_with(base.with_substitution(0, "c" + std::to_string(i)), 1.0 - 0.01 * i));
  return out;
}

// A 12-token review whose label hinges on "bad"; "good" is among its neighbors.
struct BadMovie {
  VectorStore store{3};
  LexiconVictim victim{{{"bad", -1.0}, {"good", 1.0}}, -0.5};
  TokenSequence x = tokenize("this movie had plot acting music scenes cast ending pacing bad overall");

  BadMovie() {
    put(store, "bad", {1, 0, 0});
    put(store, "awful", {0.97, 0.1, 0});
    put(store, "poor", {0.95, 0.2, 0});
    put(store, "good", {0.9, 0.3, 0});
    double k = 0.1;
    for (const char* w : {"movie", "had", "plot", "acting", "music", "scenes", "cast", "ending", "pacing",
                          "overall"}) {
      put(store, w, {0, k, 1});
      k += 0.1;
    }
  }
};

// Every single-substitution neighbor of x within the candidate sets.
bool exists_single_flip(const TokenSequence& x, const Label& y, const HardLabelOracle& oracle,
                        const VectorStore& store, std::size_t k) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!store.contains(x[i])) continue;
    for (const auto& c : top_k_synonyms(store, x[i], k).candidates)
      if (!(oracle.predict(x.with_substitution(i, c.synonym)) == y)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("can_substitute is strict") {
  CHECK(can_substitute(0, 10, 0.10) == false);  // 1/10 is not below 0.10
  CHECK(can_substitute(0, 11, 0.10));
  CHECK(can_substitute(1, 30, 0.10));
  CHECK_FALSE(can_substitute(2, 30, 0.10));  // 3/30
}

TEST_CASE("expand makes one child per synonym") {
  VectorStore store(2);
  put(store, "w", {1, 0});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 60; ++i) put(store, "s" + std::to_string(i), {1, u(rng)});
  const SynonymIndex index(store, 50);

  std::vector<std::string> toks(30, "pad");
  toks[4] = "w";
  const TokenSequence x(toks, std::make_shared<const std::vector<std::string>>(toks));
  ImportanceRanking ranking{{4}, {{4, 1.0}}};
  CandidateMap cands{{4, index.candidates("w")}};
  const MeanEmbeddingSimilarity sim(store);
  const auto bound = sim.bind(x);

  const auto kids = expand(BeamState{x, 0, 1.0, 0, std::nullopt}, ranking, cands, *bound, 0.10);
  CHECK(kids.size() == 50);
  std::set<std::string> words;
  for (const auto& k : kids) {
    CHECK(k.next_rank_pos == 1);
    CHECK(k.substitutions == 1);
    CHECK(k.text.substituted_positions() == std::vector<std::size_t>{4});
    words.insert(k.text[4]);
  }
  CHECK(words.size() == 50);
  CHECK_FALSE(words.count("w"));

  BeamState done{x, 1, 1.0, 0, std::nullopt};
  try {
    expand(done, ranking, cands, *bound, 0.10);
    FAIL("expected Exhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Exhausted);
  }
}

TEST_CASE("expand drops children at the perturbation threshold") {
  VectorStore store(2);
  put(store, "a", {1, 0});
  put(store, "b", {1, 0.1});
  put(store, "c", {1, 0.2});
  std::vector<std::string> toks(10, "a");
  const TokenSequence x(toks);
  const auto once = x.with_substitution(0, "b");
  const SynonymIndex index(store, 2);
  ImportanceRanking ranking{{0, 1}, {{0, 1.0}, {1, 0.5}}};
  CandidateMap cands{{0, index.candidates("a")}, {1, index.candidates("a")}};
  const MeanEmbeddingSimilarity sim(store);
  const auto bound = sim.bind(x);
  // One substitution already; a second makes 2/10 >= 0.10.
  CHECK(expand(BeamState{once, 1, 1.0, 1, std::nullopt}, ranking, cands, *bound, 0.10).empty());
}

TEST_CASE("expand with an empty candidate set yields nothing") {
  VectorStore store(2);
  put(store, "lonely", {1, 0});
  const SynonymIndex index(store, 5);
  const auto x = seq({"lonely", "x", "y", "z", "q", "r", "s", "t", "u", "v", "w", "p"});
  ImportanceRanking ranking{{0}, {{0, 1.0}}};
  CandidateMap cands{{0, index.candidates("lonely")}};
  REQUIRE(cands[0]->candidates.empty());
  const MeanEmbeddingSimilarity sim(store);
  CHECK(expand(BeamState{x, 0, 1.0, 0, std::nullopt}, ranking, cands, *sim.bind(x), 0.10).empty());
  CHECK(index.candidates("not-in-store")->candidates.empty());
}

TEST_CASE("check_success returns the most similar flip") {
  const auto base = seq({"x"});
  std::vector<BeamState> kids{state_with(base.with_substitution(0, "m"), 0.50),
                              state_with(base.with_substitution(0, "flipA"), 0.93),
                              state_with(base.with_substitution(0, "flipB"), 0.97),
                              state_with(base.with_substitution(0, "n"), 0.99)};
  const TriggerOracle oracle({"flipA", "flipB"});
  QueryLedger ledger(100);
  const auto r = check_success(kids, oracle, ledger, Label{0});
  REQUIRE(r.success);
  CHECK(r.success->text[0] == "flipB");
  CHECK(r.success->similarity == 0.97);
  CHECK_FALSE(r.budget_exhausted);
}

TEST_CASE("check_success without a flip labels every child") {
  auto kids = graded(7);
  const Constant oracle;
  QueryLedger ledger(100);
  const auto r = check_success(kids, oracle, ledger, Label{0});
  CHECK_FALSE(r.success);
  CHECK(r.queried == 7);
  CHECK(ledger.used() == 7);
  for (const auto& k : kids) CHECK(k.label.has_value());
}

TEST_CASE("check_success stops when the budget runs out") {
  auto kids = graded(50);
  const Constant inner;
  const CountingOracle oracle(inner);
  QueryLedger ledger(13);
  for (int i = 0; i < 10; ++i) ledger.charge();  // 3 remain
  const auto r = check_success(kids, oracle, ledger, Label{0});
  CHECK_FALSE(r.success);
  CHECK(r.budget_exhausted);
  CHECK(r.queried == 3);
  CHECK(oracle.calls() == 3);
  CHECK(ledger.used() == 13);
}

TEST_CASE("stratified sampling keeps top, bottom and random thirds") {
  Rng rng(5);
  const auto kids = graded(30);
  const auto beam = sample_beam(kids, 10, SamplingRule::Stratified, rng);
  REQUIRE(beam.size() == 9);
  std::vector<double> sims;
  for (const auto& s : beam) sims.push_back(s.similarity);
  std::sort(sims.rbegin(), sims.rend());
  CHECK(sims[0] == kids[0].similarity);
  CHECK(sims[1] == kids[1].similarity);
  CHECK(sims[2] == kids[2].similarity);
  CHECK(sims[8] == kids[29].similarity);
  CHECK(sims[7] == kids[28].similarity);
  CHECK(sims[6] == kids[27].similarity);
  for (int i = 3; i < 6; ++i) {
    CHECK(sims[i] < kids[2].similarity);
    CHECK(sims[i] > kids[27].similarity);
  }
  std::set<std::string> texts;
  for (const auto& s : beam) texts.insert(s.text.joined());
  CHECK(texts.size() == 9);
}

TEST_CASE("small pools pass through") {
  Rng rng(5);
  CHECK(sample_beam(graded(5), 10, SamplingRule::Stratified, rng).size() == 5);
  CHECK(sample_beam(graded(9), 10, SamplingRule::Stratified, rng).size() == 9);
  CHECK(sample_beam(graded(5), 10, SamplingRule::TopSim, rng).size() == 5);
  CHECK(sample_beam({}, 10, SamplingRule::UniformRandom, rng).empty());
}

TEST_CASE("beam of three is one top, one bottom, one random") {
  Rng rng(8);
  const auto kids = graded(10);
  const auto beam = sample_beam(kids, 3, SamplingRule::Stratified, rng);
  REQUIRE(beam.size() == 3);
  std::vector<double> sims;
  for (const auto& s : beam) sims.push_back(s.similarity);
  std::sort(sims.rbegin(), sims.rend());
  CHECK(sims[0] == kids[0].similarity);
  CHECK(sims[2] == kids[9].similarity);
  CHECK(sims[1] < kids[0].similarity);
  CHECK(sims[1] > kids[9].similarity);
}

TEST_CASE("single-criterion rules") {
  Rng rng(8);
  const auto kids = graded(20);
  auto top = sample_beam(kids, 4, SamplingRule::TopSim, rng);
  REQUIRE(top.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(top[i].similarity == kids[i].similarity);
  auto bottom = sample_beam(kids, 4, SamplingRule::BottomSim, rng);
  REQUIRE(bottom.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(bottom[i].similarity == kids[16 + i].similarity);
  CHECK(sample_beam(kids, 4, SamplingRule::UniformRandom, rng).size() == 4);
  // Narrow stratified beams fall back to the most similar states.
  auto two = sample_beam(kids, 2, SamplingRule::Stratified, rng);
  REQUIRE(two.size() == 2);
  CHECK(two[0].similarity == kids[0].similarity);
  CHECK(two[1].similarity == kids[1].similarity);
}

TEST_CASE("uniform sampling is seeded") {
  const auto kids = graded(40);
  Rng a(77), b(77);
  const auto ra = sample_beam(kids, 10, SamplingRule::UniformRandom, a);
  const auto rb = sample_beam(kids, 10, SamplingRule::UniformRandom, b);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].text == rb[i].text);
}

TEST_CASE("attack finds the one-word flip") {
  BadMovie t;
  const auto y = t.victim.predict(t.x);
  REQUIRE(y.id == 0);
  REQUIRE(exists_single_flip(t.x, y, t.victim, t.store, 50));

  const SynonymIndex index(t.store, 50);
  const MeanEmbeddingSimilarity sim(t.store);
  const AttackResources res{StopWordList::english(), t.store, index, sim};
  const CountingOracle counted(t.victim);
  const AttackEngine engine(counted, res, AttackConfig{});
  const auto out = engine.attack(t.x, y, 3);
  REQUIRE(out.status == AttackStatus::Success);
  REQUIRE(out.adversarial);
  CHECK(out.pert_rate == doctest::Approx(1.0 / 12.0));
  CHECK(out.queries_used <= 100);
  CHECK(out.queries_used == counted.calls());
  CHECK(out.sample_id == 3);
  // "awful" is the most similar replacement and its zero weight already clears the threshold.
  CHECK((*out.adversarial)[10] == "awful");
  CHECK_FALSE(t.victim.predict(*out.adversarial) == y);
}

TEST_CASE("budget of one only covers the correctness check") {
  BadMovie t;
  const SynonymIndex index(t.store, 50);
  const MeanEmbeddingSimilarity sim(t.store);
  AttackConfig c;
  c.query_budget = 1;
  const CountingOracle counted(t.victim);
  const AttackEngine engine(counted, {StopWordList::english(), t.store, index, sim}, c);
  const auto out = engine.attack(t.x, Label{0});
  CHECK(out.status == AttackStatus::BudgetExhausted);
  CHECK(out.queries_used == 1);
  CHECK(counted.calls() == 1);
  CHECK_FALSE(out.adversarial);
}

TEST_CASE("a constant victim is never defeated") {
  BadMovie t;
  const SynonymIndex index(t.store, 50);
  const MeanEmbeddingSimilarity sim(t.store);
  const Constant constant;
  for (std::size_t budget : {5u, 30u, 100u, 1000u}) {
    AttackConfig c;
    c.query_budget = budget;
    const CountingOracle counted(constant);
    const AttackEngine engine(counted, {StopWordList::english(), t.store, index, sim}, c);
    const auto out = engine.attack(t.x, Label{0});
    CHECK(out.status != AttackStatus::Success);
    CHECK((out.status == AttackStatus::CandidatesExhausted || out.status == AttackStatus::BudgetExhausted));
    CHECK(out.queries_used <= budget);
    CHECK(out.queries_used == counted.calls());
    CHECK(out.similarity == 1.0);
    CHECK(out.pert_rate == 0.0);
  }
}

TEST_CASE("misclassified samples are skipped after one query") {
  BadMovie t;
  const SynonymIndex index(t.store, 50);
  const MeanEmbeddingSimilarity sim(t.store);
  const AttackEngine engine(t.victim, {StopWordList::english(), t.store, index, sim}, AttackConfig{});
  const auto out = engine.attack(t.x, Label{1});
  CHECK(out.status == AttackStatus::SkippedMisclassified);
  CHECK(out.queries_used == 1);
}

TEST_CASE("engine construction checks") {
  BadMovie t;
  const SynonymIndex index(t.store, 50);
  const MeanEmbeddingSimilarity sim(t.store);
  const AttackResources res{StopWordList::english(), t.store, index, sim};
  AttackConfig c;
  c.ranking = RankingSource::Deletion;
  try {
    AttackEngine(t.victim, res, c);
    FAIL("expected ScoreUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScoreUnavailable);
  }
  AttackConfig k;
  k.synonym_k = 10;
  CHECK_THROWS_AS(AttackEngine(t.victim, res, k), Error);
  AttackConfig zero;
  zero.query_budget = 0;
  CHECK_THROWS_AS(AttackEngine(t.victim, res, zero), Error);
}

TEST_CASE("deletion ranking spends its probes from the budget") {
  std::vector<LabeledText> corpus;
  for (const char* text : {"bad movie", "bad plot", "good movie", "good acting"})
    corpus.push_back({tokenize(text), Label{std::string(text).rfind("bad", 0) == 0 ? 0u : 1u}});
  const auto nb = train_naive_bayes(corpus, 1.0);
  BadMovie t;
  const SynonymIndex index(t.store, 50);
  const MeanEmbeddingSimilarity sim(t.store);
  AttackConfig c;
  c.ranking = RankingSource::Deletion;
  const AttackEngine engine(nb, {StopWordList::english(), t.store, index, sim}, c);
  const auto y = nb.predict(t.x);
  REQUIRE(y.id == 0);
  const auto out = engine.attack(t.x, y);
  CHECK(out.ranking_source == RankingSource::Deletion);
  CHECK(out.status == AttackStatus::Success);
  // Correctness check, 1 base probe, 11 deletions, then at least one search query.
  CHECK(out.queries_used >= 14);
}

TEST_CASE("attacks are deterministic per seed and sample id") {
  BadMovie t;
  const SynonymIndex index(t.store, 50);
  const MeanEmbeddingSimilarity sim(t.store);
  AttackConfig c;
  c.ranking = RankingSource::Random;
  const AttackEngine engine(t.victim, {StopWordList::english(), t.store, index, sim}, c);
  const auto a = engine.attack(t.x, Label{0}, 9);
  const auto b = engine.attack(t.x, Label{0}, 9);
  CHECK(a.status == b.status);
  CHECK(a.queries_used == b.queries_used);
  CHECK(a.adversarial == b.adversarial);
}
