#include <doctest.h>

#include <set>

#include "limeattack/core.hpp"
#include "support.hpp"

using namespace limeattack;
using testing::seq;

TEST_CASE("tokenize splits on whitespace and peels punctuation") {
  CHECK(tokenize("It allows us hope.").tokens() == std::vector<std::string>{"It", "allows", "us", "hope", "."});
  CHECK(tokenize("a").tokens() == std::vector<std::string>{"a"});
  CHECK(tokenize("don't stop").tokens() == std::vector<std::string>{"don't", "stop"});
}

TEST_CASE("tokenize handles runs of punctuation and odd spacing") {
  CHECK(tokenize("  (wow!?)  ok\t").tokens() == std::vector<std::string>{"(", "wow", "!", "?", ")", "ok"});
  CHECK(tokenize("...").tokens() == std::vector<std::string>{".", ".", "."});
  CHECK_THROWS_AS(tokenize("   "), Error);
}

TEST_CASE("perturbation_rate") {
  CHECK(perturbation_rate(seq({"a", "b", "c"}), seq({"a", "x", "c"})) == 1.0 / 3.0);
  const auto x = seq({"a", "b", "c"});
  CHECK(perturbation_rate(x, x) == 0.0);
  CHECK(perturbation_rate(seq({"a", "b"}), seq({"x", "y"})) == 1.0);
  CHECK(perturbation_rate(seq({"a"}), seq({"A"})) == 1.0);
  try {
    perturbation_rate(seq({"a"}), seq({"a", "b"}));
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("empty token sequences are rejected") {
  try {
    TokenSequence(std::vector<std::string>{});
    FAIL("expected EmptyText");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyText);
  }
}

TEST_CASE("substituted positions track differences from the original") {
  const auto x = seq({"a", "b", "c", "d"});
  CHECK_FALSE(x.has_original());
  CHECK(x.substitution_count() == 0);

  const auto y = x.with_substitution(2, "z").with_substitution(0, "q");
  CHECK(y.has_original());
  CHECK(y.original_tokens() == x.tokens());
  CHECK(y.substituted_positions() == std::vector<std::size_t>{0, 2});

  const auto back = y.with_substitution(2, "c");
  CHECK(back.substituted_positions() == std::vector<std::size_t>{0});
  CHECK(back.original_handle() == y.original_handle());

  const TokenSequence explicit_original({"q", "b", "c", "e"}, y.original_handle());
  CHECK(explicit_original.substituted_positions() == std::vector<std::size_t>{0, 3});
  CHECK_THROWS_AS(TokenSequence({"a"}, y.original_handle()), Error);
  CHECK_THROWS_AS(x.with_substitution(4, "z"), Error);
}

TEST_CASE("labels compare by id") {
  CHECK(Label{1, "pos"} == Label{1, std::nullopt});
  CHECK_FALSE(Label{0} == Label{1});
}

TEST_CASE("config defaults and validation") {
  AttackConfig c;
  CHECK(c.query_budget == 100);
  CHECK(c.beam_size == 10);
  CHECK(c.synonym_k == 50);
  CHECK(c.kernel_width == 25.0);
  CHECK(c.pert_threshold == doctest::Approx(0.10));
  CHECK_NOTHROW(c.validate());

  auto invalid = [](auto mutate) {
    AttackConfig bad;
    mutate(bad);
    try {
      bad.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidConfig;
    }
    return false;
  };
  CHECK(invalid([](AttackConfig& b) { b.query_budget = 0; }));
  CHECK(invalid([](AttackConfig& b) { b.pert_threshold = 0.0; }));
  CHECK(invalid([](AttackConfig& b) { b.pert_threshold = 1.5; }));
  CHECK(invalid([](AttackConfig& b) { b.beam_size = 0; }));
  CHECK(invalid([](AttackConfig& b) { b.lime_query_cap = 101; }));
  CHECK(invalid([](AttackConfig& b) { b.ridge_lambda = 0.0; }));
  CHECK(invalid([](AttackConfig& b) { b.kernel_width = -1.0; }));
  CHECK_FALSE(invalid([](AttackConfig& b) { b.pert_threshold = 1.0; }));
}

TEST_CASE("enum names round-trip") {
  for (auto s : {RankingSource::Lime, RankingSource::Random, RankingSource::Deletion})
    CHECK(parse_ranking_source(to_string(s)) == s);
  for (auto r : {SamplingRule::Stratified, SamplingRule::TopSim, SamplingRule::BottomSim, SamplingRule::UniformRandom})
    CHECK(parse_sampling_rule(to_string(r)) == r);
  for (auto d : {KernelDistance::CosineSimilarity, KernelDistance::CosineDistance})
    CHECK(parse_kernel_distance(to_string(d)) == d);
  for (auto s : {AttackStatus::Success, AttackStatus::BudgetExhausted, AttackStatus::CandidatesExhausted,
                 AttackStatus::SkippedMisclassified})
    CHECK(parse_attack_status(to_string(s)) == s);
  CHECK_THROWS_AS(parse_sampling_rule("best"), Error);
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(1234, s));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(1234, 7) == derive_seed(1234, 7));
  CHECK(derive_seed(1234, 7) != derive_seed(2234, 7));
}
