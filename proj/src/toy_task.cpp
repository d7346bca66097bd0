#include "limeattack/toy_task.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace limeattack {

namespace {

enum class Family { Single, Negated, Near, Far };

constexpr const char* kStopTokens[] = {"the", "a", "of", "and", "is", "to", "in", "it", "this", "that", "was", "with"};

using Vec = std::vector<double>;

Vec random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(dim);
  double n = 0.0;
  do {
    n = 0.0;
    for (double& x : v) {
      x = g(rng);
      n += x * x;
    }
  } while (n == 0.0);
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

// Unit vector at the given cosine to the unit vector `center`.
Vec at_cosine(const Vec& center, double cosine, std::mt19937_64& rng) {
  Vec u = random_unit(center.size(), rng);
  double proj = 0.0;
  for (std::size_t d = 0; d < u.size(); ++d) proj += u[d] * center[d];
  double n = 0.0;
  for (std::size_t d = 0; d < u.size(); ++d) {
    u[d] -= proj * center[d];
    n += u[d] * u[d];
  }
  n = std::sqrt(n);
  const double sine = std::sqrt(1.0 - cosine * cosine);
  Vec v(center.size());
  for (std::size_t d = 0; d < v.size(); ++d) v[d] = cosine * center[d] + sine * u[d] / n;
  return v;
}

struct Cluster {
  std::string head;
  std::vector<std::string> synonyms;  // nearest first
};

}  // namespace

ToyTask make_toy_task(const ToyTaskOptions& opt) {
  if (opt.min_tokens < 3 || opt.max_tokens < opt.min_tokens)
    throw Error(ErrorCode::InvalidConfig, "toy task sentence length range is invalid");
  if (opt.cluster_size < 2 || opt.heads_per_family < 2 || opt.filler_heads < 1)
    throw Error(ErrorCode::InvalidConfig, "toy task needs at least two heads per family");

  std::mt19937_64 rng(opt.seed);
  VectorStore store(opt.dim);
  std::map<std::string, double> weights;

  auto make_cluster = [&](const std::string& prefix, std::size_t h) {
    Cluster c;
    c.head = prefix + std::to_string(h);
    const Vec center = random_unit(opt.dim, rng);
    store.add(c.head, center);
    for (std::size_t j = 0; j < opt.cluster_size; ++j) {
      const double cosine = 0.95 - 0.30 * static_cast<double>(j) / static_cast<double>(opt.cluster_size - 1);
      c.synonyms.push_back(c.head + "_" + std::to_string(j));
      store.add(c.synonyms.back(), at_cosine(center, cosine, rng));
    }
    return c;
  };

  for (const char* s : kStopTokens) store.add(s, random_unit(opt.dim, rng));

  const std::size_t size = opt.cluster_size;
  std::bernoulli_distribution thirty(0.3);
  std::vector<Cluster> single, negated, near, far, filler;
  for (std::size_t h = 0; h < opt.heads_per_family; ++h) {
    single.push_back(make_cluster("joy", h));
    weights[single.back().head] = 1.0;
    for (const auto& s : single.back().synonyms) weights[s] = thirty(rng) ? 0.0 : 1.0;

    negated.push_back(make_cluster("gloom", h));
    weights[negated.back().head] = -1.0;
    for (const auto& s : negated.back().synonyms) weights[s] = thirty(rng) ? 1.0 : -1.0;

    near.push_back(make_cluster("bright", h));
    weights[near.back().head] = 1.0;
    for (std::size_t j = 0; j < size; ++j) weights[near.back().synonyms[j]] = j < size / 2 ? 0.0 : 3.0;

    far.push_back(make_cluster("keen", h));
    weights[far.back().head] = 1.0;
    for (std::size_t j = 0; j < size; ++j) weights[far.back().synonyms[j]] = j < (size * 7) / 10 ? 1.0 : 0.0;
  }
  for (std::size_t h = 0; h < opt.filler_heads; ++h) filler.push_back(make_cluster("thing", h));

  LexiconVictim victim(weights, 0.5);

  std::vector<Family> families;
  for (std::size_t i = 0; i < opt.samples; ++i) families.push_back(static_cast<Family>(i % 4));
  std::shuffle(families.begin(), families.end(), rng);

  auto pick = [&](const std::vector<Cluster>& from) -> const std::string& {
    std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
    return from[d(rng)].head;
  };
  auto pick_two = [&](const std::vector<Cluster>& from) {
    std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
    const std::size_t a = d(rng);
    std::size_t b = d(rng);
    while (b == a) b = d(rng);
    return std::pair{from[a].head, from[b].head};
  };

  std::vector<DatasetRow> rows;
  std::uniform_int_distribution<std::size_t> length(opt.min_tokens, opt.max_tokens);
  std::uniform_int_distribution<std::size_t> stop_pick(0, std::size(kStopTokens) - 1);
  std::bernoulli_distribution stop_slot(0.35);
  for (std::size_t i = 0; i < opt.samples; ++i) {
    std::vector<std::string> keywords;
    switch (families[i]) {
      case Family::Single: keywords = {pick(single)}; break;
      case Family::Negated: keywords = {pick(negated), pick(single)}; break;
      case Family::Near: {
        auto [a, b] = pick_two(near);
        keywords = {a, b};
        break;
      }
      case Family::Far: {
        auto [a, b] = pick_two(far);
        keywords = {a, b};
        break;
      }
    }
    const std::size_t n = length(rng);
    std::vector<std::string> tokens(n);
    for (auto& t : tokens) t = stop_slot(rng) ? kStopTokens[stop_pick(rng)] : pick(filler);
    std::vector<std::size_t> slots(n);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    std::shuffle(slots.begin(), slots.end(), rng);
    for (std::size_t k = 0; k < keywords.size(); ++k) tokens[slots[k]] = keywords[k];

    TokenSequence seq(tokens);
    const Label label = victim.predict(seq);
    rows.push_back(DatasetRow{i, label, seq.joined(), std::move(seq)});
  }
  return ToyTask{std::move(store), std::move(victim), std::move(rows)};
}

void save_toy_task(const ToyTask& task, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset(dir / "dataset.tsv", task.rows);
  task.store.save(dir / "vectors.txt");
  task.victim.save(dir / "lexicon.json");
}

}  // namespace limeattack
