#include <doctest.h>

#include <algorithm>
#include <random>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "limeattack/metrics.hpp"
#include "limeattack/victim.hpp"
#include "support.hpp"

using namespace limeattack;

namespace {

const std::string kToy = LIMEATTACK_TOY_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> toy_attack(std::vector<std::string> extra) {
  std::vector<std::string> args{"attack", "--dataset", kToy + "/dataset.tsv", "--vectors", kToy + "/vectors.txt",
                                "--victim", "lexicon:" + kToy + "/lexicon.json"};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

std::vector<std::string> toy_sweep(std::vector<std::string> extra) {
  auto args = toy_attack(std::move(extra));
  args[0] = "sweep";
  return args;
}

double printed_asr(const std::string& out) {
  std::smatch m;
  const std::regex re("asr=([0-9.]+)");
  REQUIRE(std::regex_search(out, m, re));
  return std::stod(m[1]);
}

nlohmann::json without_timestamp(const std::filesystem::path& p) {
  auto j = nlohmann::json::parse(testing::read_file(p));
  j.erase(kTimestampKey);
  return j;
}

}  // namespace

TEST_CASE("attack with defaults writes a report matching the printed ASR") {
  testing::TempDir dir;
  const auto r = invoke(toy_attack({"--sample", "40", "--out", (dir / "report.json").string()}));
  REQUIRE(r.code == 0);
  const auto report = read_report_json(dir / "report.json");
  CHECK(report.outcomes.size() == 40);
  CHECK(printed_asr(r.out) == doctest::Approx(report.aggregates.asr).epsilon(1e-6));
  CHECK(r.out.find("\"query_budget\":100") != std::string::npos);
  CHECK(report.config.query_budget == 100);
  CHECK(report.config.beam_size == 10);
  CHECK(report.config.synonym_k == 50);
  CHECK(report.config.kernel_width == 25.0);
  CHECK(report.config.pert_threshold == 0.10);
  CHECK(report.context.at("victim") == "lexicon:" + kToy + "/lexicon.json");
}

TEST_CASE("budget 0 is rejected with exit 2") {
  const auto r = invoke(toy_attack({"--budget", "0"}));
  CHECK(r.code == 2);
  CHECK(r.err.find("budget") != std::string::npos);
}

TEST_CASE("other validation failures exit 2") {
  CHECK(invoke(toy_attack({"--rule", "best"})).code == 2);
  CHECK(invoke(toy_attack({"--pert-max", "0"})).code == 2);
  CHECK(invoke(toy_attack({"--lime-cap", "500"})).code == 2);
  CHECK(invoke(toy_attack({"--format", "xml"})).code == 2);
  CHECK(invoke(toy_attack({"--seeds", "1,,2"})).code == 2);
  CHECK(invoke({"attack"}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("missing inputs exit 1") {
  auto args = toy_attack({});
  args[2] = "/nonexistent/dataset.tsv";
  CHECK(invoke(args).code == 1);
  auto remote = toy_attack({"--sample", "1"});
  remote[6] = "remote:http://127.0.0.1:1/predict";
  CHECK(invoke(remote).code == 1);
}

TEST_CASE("random and LIME rankings under one seed give two reports") {
  testing::TempDir dir;
  REQUIRE(invoke(toy_attack({"--sample", "60", "--ranking", "lime", "--out", (dir / "lime.json").string()})).code == 0);
  REQUIRE(invoke(toy_attack({"--sample", "60", "--ranking", "random", "--out", (dir / "random.json").string()})).code ==
          0);
  const auto lime = read_report_json(dir / "lime.json");
  const auto random = read_report_json(dir / "random.json");
  CHECK(lime.config.ranking == RankingSource::Lime);
  CHECK(random.config.ranking == RankingSource::Random);
  REQUIRE(lime.outcomes.size() == random.outcomes.size());
  for (std::size_t i = 0; i < lime.outcomes.size(); ++i)
    CHECK(lime.outcomes[i].sample_id == random.outcomes[i].sample_id);
}

TEST_CASE("identical invocations produce byte-identical reports apart from the timestamp") {
  testing::TempDir dir;
  const auto args = [&](const std::string& name) {
    return toy_attack({"--sample", "30", "--seed", "77", "--parallel", "2", "--out", (dir / name).string()});
  };
  REQUIRE(invoke(args("a.json")).code == 0);
  REQUIRE(invoke(args("b.json")).code == 0);
  CHECK(without_timestamp(dir / "a.json").dump() == without_timestamp(dir / "b.json").dump());
}

TEST_CASE("several seeds write one report each") {
  testing::TempDir dir;
  const auto r = invoke(toy_attack({"--sample", "10", "--seeds", "1234,2234", "--out", (dir / "r.json").string()}));
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "r.seed1234.json"));
  CHECK(std::filesystem::exists(dir / "r.seed2234.json"));
  CHECK(r.out.find("mean over 2 seeds") != std::string::npos);
  CHECK(read_report_json(dir / "r.seed2234.json").config.seed == 2234);
}

TEST_CASE("CSV output") {
  testing::TempDir dir;
  REQUIRE(invoke(toy_attack({"--sample", "15", "--format", "csv", "--out", (dir / "r.csv").string()})).code == 0);
  const auto rows = testing::read_file(dir / "r.csv");
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 16);
  CHECK(std::filesystem::exists(dir / "r.aggregates.csv"));
}

TEST_CASE("beam sweep prints one row per beam size") {
  testing::TempDir dir;
  const auto r = invoke(toy_sweep({"--sample", "20", "--sweep", "beam", "1,5,10,20", "--out", (dir / "s.csv").string()}));
  REQUIRE(r.code == 0);
  const auto table = testing::read_file(dir / "s.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);
  CHECK(table.rfind("beam,", 0) == 0);
}

TEST_CASE("budget sweep ASR column is monotone") {
  testing::TempDir dir;
  const auto r =
      invoke(toy_sweep({"--sample", "60", "--sweep", "budget", "25,50,100,200", "--out", (dir / "s.csv").string()}));
  REQUIRE(r.code == 0);
  std::istringstream table(testing::read_file(dir / "s.csv"));
  std::string line;
  std::getline(table, line);
  double last = -1.0;
  int rows = 0;
  while (std::getline(table, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() == 7);
    const double asr = std::stod(cols[3]);
    CHECK(asr >= last);
    last = asr;
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("malformed sweep lists exit 2") {
  CHECK(invoke(toy_sweep({"--sweep", "beam", "1,x,10"})).code == 2);
  CHECK(invoke(toy_sweep({"--sweep", "beam", "10,5"})).code == 2);
  CHECK(invoke(toy_sweep({"--sweep", "beam", ""})).code == 2);
  CHECK(invoke(toy_sweep({"--sweep", "width", "1,2"})).code == 2);
  CHECK(invoke(toy_sweep({"--sweep", "budget", "0,10"})).code == 2);
}

TEST_CASE("train-victim fits a separable corpus") {
  testing::TempDir dir;
  std::string data;
  for (int i = 0; i < 30; ++i) {
    data += "1\tgreat wonderful film number" + std::to_string(i) + "\n";
    data += "0\tawful boring film number" + std::to_string(i) + "\n";
  }
  testing::write_file(dir / "train.tsv", data);
  const auto r = invoke({"train-victim", "--dataset", (dir / "train.tsv").string(), "--out", (dir / "nb.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("training_accuracy=") != std::string::npos);

  const auto model = NaiveBayesVictim::load(dir / "nb.json");
  CHECK(model.alpha() == 1.0);
  const auto rows = load_dataset(dir / "train.tsv");
  std::size_t correct = 0;
  for (const auto& row : rows) correct += model.predict(row.tokens) == row.label;
  CHECK(static_cast<double>(correct) / rows.size() >= 0.9);

  const auto json = nlohmann::json::parse(testing::read_file(dir / "nb.json"));
  CHECK(json.contains("class_log_priors"));
  CHECK(json.contains("word_log_likelihoods"));
  CHECK(json.contains("vocabulary"));

  // Reload round-trip on random texts.
  const auto again = NaiveBayesVictim::load(dir / "nb.json");
  std::mt19937_64 rng(5);
  const std::vector<std::string> words{"great", "awful", "film", "boring", "wonderful", "number3", "unseen"};
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> toks;
    for (int k = 0; k < 5; ++k) toks.push_back(words[rng() % words.size()]);
    CHECK(again.predict(TokenSequence(toks)) == model.predict(TokenSequence(toks)));
  }
}

TEST_CASE("train-victim on a single class exits 2") {
  testing::TempDir dir;
  testing::write_file(dir / "one.tsv", "1\tgood\n1\tfine\n");
  CHECK(invoke({"train-victim", "--dataset", (dir / "one.tsv").string(), "--out", (dir / "nb.json").string()}).code == 2);
  CHECK_FALSE(std::filesystem::exists(dir / "nb.json"));
}

TEST_CASE("a trained naive Bayes model can be attacked, including with deletion ranking") {
  testing::TempDir dir;
  const auto model = (dir / "nb.json").string();
  REQUIRE(invoke({"train-victim", "--dataset", kToy + "/dataset.tsv", "--out", model}).code == 0);
  auto args = toy_attack({"--sample", "10", "--ranking", "deletion", "--out", (dir / "r.json").string()});
  args[6] = "nb:" + model;
  REQUIRE(invoke(args).code == 0);
  CHECK(read_report_json(dir / "r.json").outcomes.front().ranking_source == RankingSource::Deletion);
  // Deletion ranking needs probabilities, which a lexicon victim lacks.
  CHECK(invoke(toy_attack({"--sample", "1", "--ranking", "deletion"})).code == 2);
}

TEST_CASE("make-toy regenerates the bundled files") {
  testing::TempDir dir;
  REQUIRE(invoke({"make-toy", "--out", dir.path().string()}).code == 0);
  CHECK(testing::read_file(dir / "dataset.tsv") == testing::read_file(kToy + "/dataset.tsv"));
  CHECK(testing::read_file(dir / "lexicon.json") == testing::read_file(kToy + "/lexicon.json"));
  CHECK(testing::read_file(dir / "vectors.txt") == testing::read_file(kToy + "/vectors.txt"));
}
