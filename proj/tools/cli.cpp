#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "limeattack/core.hpp"
#include "limeattack/dataset.hpp"
#include "limeattack/lexicon.hpp"
#include "limeattack/metrics.hpp"
#include "limeattack/search.hpp"
#include "limeattack/similarity.hpp"
#include "limeattack/toy_task.hpp"
#include "limeattack/victim.hpp"

namespace limeattack::cli {

namespace {

constexpr int kOk = 0;
constexpr int kIoFailure = 1;
constexpr int kInvalid = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto* end = item.data() + item.size();
    auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (item.empty() || ec != std::errc{} || ptr != end)
      throw UsageError(std::string("malformed ") + what + " list '" + text + "'");
    values.push_back(v);
  }
  if (values.empty() || text.back() == ',') throw UsageError(std::string("malformed ") + what + " list '" + text + "'");
  return values;
}

struct RunFlags {
  std::string dataset;
  std::string vectors;
  std::string victim;
  std::string similarity = "builtin";
  std::string stopwords;
  std::string out;
  std::string format = "json";
  std::string ranking = "lime";
  std::string rule = "stratified";
  std::string kernel_distance = "cosine";
  std::string denominator = "attacked";
  std::string seeds;
  std::size_t budget = 100;
  std::size_t beam = 10;
  std::size_t k = 50;
  double sigma = 25.0;
  double pert_max = 0.10;
  double ridge = 1e-3;
  std::optional<std::size_t> lime_cap;
  std::uint64_t seed = 1234;
  std::size_t sample = 0;
  unsigned parallel = 1;
};

void add_run_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--dataset", f.dataset, "labelled dataset, label<TAB>text per line")->required();
  cmd.add_option("--vectors", f.vectors, "word vector file")->required();
  cmd.add_option("--victim", f.victim, "lexicon:PATH | nb:PATH | remote:URL")->required();
  cmd.add_option("--budget", f.budget, "query budget per sample")->capture_default_str();
  cmd.add_option("--beam", f.beam, "beam size")->capture_default_str();
  cmd.add_option("--k", f.k, "synonyms per word")->capture_default_str();
  cmd.add_option("--sigma", f.sigma, "LIME kernel width")->capture_default_str();
  cmd.add_option("--pert-max", f.pert_max, "perturbation rate bound (exclusive)")->capture_default_str();
  cmd.add_option("--ridge", f.ridge, "surrogate ridge lambda")->capture_default_str();
  cmd.add_option("--lime-cap", f.lime_cap, "LIME neighborhood queries (default min(n, budget/2))");
  cmd.add_option("--seed", f.seed, "run seed")->capture_default_str();
  cmd.add_option("--seeds", f.seeds, "comma-separated seeds, one run each");
  cmd.add_option("--ranking", f.ranking, "lime | random | deletion")->capture_default_str();
  cmd.add_option("--rule", f.rule, "stratified | top | bottom | random")->capture_default_str();
  cmd.add_option("--kernel-distance", f.kernel_distance, "cosine | one-minus-cosine")->capture_default_str();
  cmd.add_option("--sample", f.sample, "rows to attack, 0 for all")->capture_default_str();
  cmd.add_option("--similarity", f.similarity, "builtin | URL of a similarity service")->capture_default_str();
  cmd.add_option("--stopwords", f.stopwords, "stop-word file, one word per line");
  cmd.add_option("--asr-denominator", f.denominator, "attacked | all")->capture_default_str();
  cmd.add_option("--parallel", f.parallel, "concurrent attacks")->capture_default_str();
}

AttackConfig build_config(const RunFlags& f, std::uint64_t seed) {
  AttackConfig c;
  c.query_budget = f.budget;
  c.beam_size = f.beam;
  c.synonym_k = f.k;
  c.kernel_width = f.sigma;
  c.pert_threshold = f.pert_max;
  c.ridge_lambda = f.ridge;
  c.lime_query_cap = f.lime_cap;
  c.seed = seed;
  c.ranking = parse_ranking_source(f.ranking);
  c.rule = parse_sampling_rule(f.rule);
  c.kernel_distance = parse_kernel_distance(f.kernel_distance);
  c.validate();
  return c;
}

std::vector<std::uint64_t> seeds_of(const RunFlags& f) {
  if (f.seeds.empty()) return {f.seed};
  std::vector<std::uint64_t> out;
  for (auto s : parse_size_list(f.seeds, "seed")) out.push_back(s);
  return out;
}

AsrDenominator parse_denominator(const std::string& s) {
  if (s == "attacked") return AsrDenominator::Attacked;
  if (s == "all") return AsrDenominator::All;
  throw Error(ErrorCode::InvalidConfig, "unknown ASR denominator '" + s + "'");
}

std::unique_ptr<HardLabelOracle> load_victim(const std::string& uri) {
  const auto colon = uri.find(':');
  const std::string scheme = uri.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : uri.substr(colon + 1);
  if (scheme == "lexicon") return std::make_unique<LexiconVictim>(LexiconVictim::load(rest));
  if (scheme == "nb") return std::make_unique<NaiveBayesVictim>(NaiveBayesVictim::load(rest));
  if (scheme == "remote") {
    RemoteOptions o;
    o.url = resolve_victim_endpoint(rest);
    return std::make_unique<RemoteVictim>(o);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown victim kind '" + scheme + "'");
}

std::unique_ptr<SimilarityProvider> load_similarity(const std::string& uri, const VectorStore& store) {
  if (uri == "builtin") return std::make_unique<MeanEmbeddingSimilarity>(store);
  RemoteSimilarityOptions o;
  o.url = uri.rfind("remote:", 0) == 0 ? uri.substr(7) : uri;
  return std::make_unique<RemoteSimilarity>(o);
}

// Everything a run needs, loaded once and shared by every seed and sweep value.
struct Session {
  std::vector<DatasetRow> rows;
  VectorStore store;
  StopWordList stops;
  std::unique_ptr<HardLabelOracle> victim;
  std::unique_ptr<SimilarityProvider> similarity;
  std::unique_ptr<SynonymIndex> synonyms;

  AttackResources resources() const { return {stops, store, *synonyms, *similarity}; }
};

Session open_session(const RunFlags& f) {
  Session s;
  s.rows = load_dataset(f.dataset);
  s.store = load_vectors(f.vectors);
  s.stops = f.stopwords.empty() ? StopWordList::english() : StopWordList::load(f.stopwords);
  s.victim = load_victim(f.victim);
  s.similarity = load_similarity(f.similarity, s.store);
  s.synonyms = std::make_unique<SynonymIndex>(s.store, f.k);
  return s;
}

nlohmann::json context_of(const RunFlags& f, std::size_t sampled) {
  return {{"dataset", f.dataset}, {"vectors", f.vectors},     {"victim", f.victim},
          {"similarity", f.similarity}, {"stopwords", f.stopwords.empty() ? "english" : f.stopwords},
          {"sample", f.sample},   {"sampled_rows", sampled}};
}

// `report.json` for one seed; `report.seed<N>.json` when several are run.
std::filesystem::path per_seed_path(const std::string& out, std::uint64_t seed, bool many) {
  std::filesystem::path p(out);
  if (!many) return p;
  const auto ext = p.extension();
  p.replace_extension();
  p += ".seed" + std::to_string(seed);
  p += ext;
  return p;
}

std::string summary_line(const RunAggregates& a) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "asr=" << a.asr << " successes=" << a.successes << " attacked=" << a.attacked << " skipped=" << a.skipped
     << " mean_pert=" << a.mean_pert << " mean_sim=" << a.mean_sim << " mean_queries=" << a.mean_queries;
  return os.str();
}

unsigned workers(unsigned requested) {
  if (requested == 0) return std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

int cmd_attack(const RunFlags& f, std::ostream& out) {
  const auto seeds = seeds_of(f);
  const auto denom = parse_denominator(f.denominator);
  const auto format = parse_report_format(f.format);
  for (auto seed : seeds) build_config(f, seed);

  Session s = open_session(f);
  const bool many = seeds.size() > 1;
  double asr_sum = 0.0, pert_sum = 0.0;
  for (auto seed : seeds) {
    const AttackConfig config = build_config(f, seed);
    const AttackEngine engine(*s.victim, s.resources(), config);
    const auto indices = sample_rows(s.rows.size(), f.sample, seed);
    RunReport report = make_report(run_attacks(engine, s.rows, indices, workers(f.parallel)), config, denom);
    report.context = context_of(f, indices.size());
    out << "config " << config_to_json(config).dump() << '\n';
    out << "seed " << seed << ' ' << summary_line(report.aggregates) << '\n';
    if (!f.out.empty()) {
      const auto path = per_seed_path(f.out, seed, many);
      write_report(report, path, format);
      out << "report " << path.string() << '\n';
    }
    asr_sum += report.aggregates.asr;
    pert_sum += report.aggregates.mean_pert;
  }
  if (many) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << "mean over " << seeds.size() << " seeds: asr=" << asr_sum / seeds.size()
       << " mean_pert=" << pert_sum / seeds.size();
    out << os.str() << '\n';
  }
  return kOk;
}

int cmd_sweep(const RunFlags& f, const std::vector<std::string>& sweep, std::ostream& out) {
  if (sweep.size() != 2) throw UsageError("--sweep takes a kind and a value list");
  const std::string& kind = sweep[0];
  if (kind != "budget" && kind != "beam") throw UsageError("--sweep kind must be budget or beam");
  const auto values = parse_size_list(sweep[1], kind.c_str());
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1]) throw UsageError("--sweep values must be strictly increasing");
  const auto seeds = seeds_of(f);
  const auto denom = parse_denominator(f.denominator);
  for (auto seed : seeds) {
    for (auto v : values) {
      AttackConfig c = build_config(f, seed);
      (kind == "budget" ? c.query_budget : c.beam_size) = v;
      c.validate();
    }
  }

  Session s = open_session(f);
  const bool many = seeds.size() > 1;
  for (auto seed : seeds) {
    const AttackConfig config = build_config(f, seed);
    const auto indices = sample_rows(s.rows.size(), f.sample, seed);
    const auto rows = kind == "budget"
                          ? budget_sweep(s.rows, indices, *s.victim, s.resources(), config, values,
                                         workers(f.parallel), denom)
                          : beam_sweep(s.rows, indices, *s.victim, s.resources(), config, values,
                                       workers(f.parallel), denom);
    out << "config " << config_to_json(config).dump() << '\n';
    out << "seed " << seed << '\n';
    write_sweep_csv(rows, kind, out);
    if (!f.out.empty()) {
      const auto path = per_seed_path(f.out, seed, many);
      std::ofstream file(path, std::ios::binary);
      if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
      write_sweep_csv(rows, kind, file);
      if (!file) throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
  }
  return kOk;
}

int cmd_train(const std::string& dataset, const std::string& model_out, double alpha, std::ostream& out) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidConfig, "alpha must be positive");
  const auto rows = load_dataset(dataset);
  std::vector<LabeledText> corpus;
  corpus.reserve(rows.size());
  for (const auto& r : rows) corpus.push_back({r.tokens, r.label});
  const auto model = train_naive_bayes(corpus, alpha);
  model.save(model_out);

  std::size_t correct = 0;
  for (const auto& r : rows) correct += model.predict(r.tokens) == r.label;
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "trained on " << rows.size() << " rows, classes=" << model.num_classes()
     << " vocabulary=" << model.vocabulary().size()
     << " training_accuracy=" << static_cast<double>(correct) / static_cast<double>(rows.size());
  out << os.str() << '\n' << "model " << model_out << '\n';
  return kOk;
}

int cmd_make_toy(const std::string& dir, const ToyTaskOptions& options, std::ostream& out) {
  const auto task = make_toy_task(options);
  save_toy_task(task, dir);
  out << "wrote " << task.rows.size() << " rows and " << task.store.size() << " vectors to " << dir << '\n';
  return kOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::DegenerateCorpus:
    case ErrorCode::ScoreUnavailable:
    case ErrorCode::EmptyRun: return kInvalid;
    default: return kIoFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hard-label word-substitution attacks guided by a local linear surrogate", "limeattack"};
  app.require_subcommand(1);

  RunFlags attack_flags;
  auto* attack = app.add_subcommand("attack", "attack sampled dataset rows and write a report");
  add_run_flags(*attack, attack_flags);
  attack->add_option("--out", attack_flags.out, "report path");
  attack->add_option("--format", attack_flags.format, "json | csv")->capture_default_str();

  RunFlags sweep_flags;
  std::vector<std::string> sweep_args;
  auto* sweep = app.add_subcommand("sweep", "repeat a run over budgets or beam sizes");
  add_run_flags(*sweep, sweep_flags);
  sweep->add_option("--sweep", sweep_args, "budget|beam VALUES, e.g. --sweep budget 25,50,100")
      ->expected(2)
      ->required();
  sweep->add_option("--out", sweep_flags.out, "sweep table CSV path");

  std::string train_dataset, train_out;
  double alpha = 1.0;
  auto* train = app.add_subcommand("train-victim", "fit a naive Bayes victim on a dataset");
  train->add_option("--dataset", train_dataset)->required();
  train->add_option("--out", train_out, "model JSON path")->required();
  train->add_option("--alpha", alpha, "additive smoothing")->capture_default_str();

  std::string toy_dir;
  ToyTaskOptions toy;
  auto* make_toy = app.add_subcommand("make-toy", "generate the synthetic toy task");
  make_toy->add_option("--out", toy_dir, "output directory")->required();
  make_toy->add_option("--samples", toy.samples)->capture_default_str();
  make_toy->add_option("--seed", toy.seed)->capture_default_str();

  std::vector<std::string> argv_store{"limeattack"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (attack->parsed()) return cmd_attack(attack_flags, out);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_args, out);
    if (train->parsed()) return cmd_train(train_dataset, train_out, alpha, out);
    if (make_toy->parsed()) return cmd_make_toy(toy_dir, toy, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  }
  return kInvalid;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace limeattack::cli
