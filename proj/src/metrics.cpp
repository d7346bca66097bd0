#include "limeattack/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace limeattack {

double attack_success_rate(std::span<const AttackOutcome> outcomes, AsrDenominator denom) {
  std::size_t successes = 0, counted = 0;
  for (const auto& o : outcomes) {
    if (o.status == AttackStatus::Success) ++successes;
    if (denom == AsrDenominator::All || o.status != AttackStatus::SkippedMisclassified) ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::EmptyRun, "no attacked samples");
  return static_cast<double>(successes) / static_cast<double>(counted);
}

RunAggregates aggregate(std::span<const AttackOutcome> outcomes, AsrDenominator denom) {
  RunAggregates a;
  a.total = outcomes.size();
  double pert = 0.0, sim = 0.0, queries = 0.0;
  for (const auto& o : outcomes) {
    if (o.status == AttackStatus::SkippedMisclassified) {
      ++a.skipped;
      continue;
    }
    ++a.attacked;
    queries += static_cast<double>(o.queries_used);
    if (o.status == AttackStatus::Success) {
      ++a.successes;
      pert += o.pert_rate;
      sim += o.similarity;
    }
  }
  const std::size_t denominator = denom == AsrDenominator::All ? a.total : a.attacked;
  if (denominator) a.asr = static_cast<double>(a.successes) / static_cast<double>(denominator);
  if (a.successes) {
    a.mean_pert = pert / static_cast<double>(a.successes);
    a.mean_sim = sim / static_cast<double>(a.successes);
  }
  if (a.attacked) a.mean_queries = queries / static_cast<double>(a.attacked);
  return a;
}

std::vector<AttackOutcome> run_attacks(const AttackEngine& engine, std::span<const DatasetRow> rows,
                                       std::span<const std::size_t> indices, unsigned parallel) {
  std::vector<std::size_t> selected(indices.begin(), indices.end());
  if (selected.empty())
    for (std::size_t i = 0; i < rows.size(); ++i) selected.push_back(i);
  std::vector<AttackOutcome> outcomes(selected.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < selected.size();) {
      try {
        const auto& row = rows[selected[k]];
        outcomes[k] = engine.attack(row.tokens, row.label, row.id);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = selected.size();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(selected.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

RunReport make_report(std::vector<AttackOutcome> outcomes, const AttackConfig& config, AsrDenominator denom) {
  RunReport r;
  r.outcomes = std::move(outcomes);
  r.config = config;
  r.denominator = denom;
  r.aggregates = aggregate(r.outcomes, denom);
  return r;
}

namespace {

void require_increasing(std::span<const std::size_t> values, const char* what) {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " list is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 0) throw Error(ErrorCode::InvalidConfig, std::string(what) + " values must be positive");
    if (i && values[i] <= values[i - 1])
      throw Error(ErrorCode::InvalidConfig, std::string(what) + " values must be strictly increasing");
  }
}

}  // namespace

std::vector<SweepRow> budget_sweep(std::span<const DatasetRow> rows, std::span<const std::size_t> indices,
                                   const HardLabelOracle& oracle, const AttackResources& resources,
                                   const AttackConfig& config, std::span<const std::size_t> budgets,
                                   unsigned parallel, AsrDenominator denom) {
  require_increasing(budgets, "budget");
  AttackConfig base = config;
  if (!base.lime_query_cap) base.lime_query_cap = std::max<std::size_t>(1, budgets.front() / 2);
  std::vector<SweepRow> out;
  for (auto budget : budgets) {
    AttackConfig c = base;
    c.query_budget = budget;
    const AttackEngine engine(oracle, resources, c);
    out.push_back({budget, aggregate(run_attacks(engine, rows, indices, parallel), denom)});
  }
  return out;
}

std::vector<SweepRow> beam_sweep(std::span<const DatasetRow> rows, std::span<const std::size_t> indices,
                                 const HardLabelOracle& oracle, const AttackResources& resources,
                                 const AttackConfig& config, std::span<const std::size_t> beams, unsigned parallel,
                                 AsrDenominator denom) {
  require_increasing(beams, "beam");
  std::vector<SweepRow> out;
  for (auto b : beams) {
    AttackConfig c = config;
    c.beam_size = b;
    const AttackEngine engine(oracle, resources, c);
    out.push_back({b, aggregate(run_attacks(engine, rows, indices, parallel), denom)});
  }
  return out;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::InvalidConfig, "unknown report format '" + std::string(s) + "'");
}

nlohmann::json config_to_json(const AttackConfig& c) {
  nlohmann::json j{{"query_budget", c.query_budget},
                   {"pert_threshold", c.pert_threshold},
                   {"beam_size", c.beam_size},
                   {"synonym_k", c.synonym_k},
                   {"kernel_width", c.kernel_width},
                   {"ridge_lambda", c.ridge_lambda},
                   {"seed", c.seed},
                   {"ranking", to_string(c.ranking)},
                   {"rule", to_string(c.rule)},
                   {"kernel_distance", to_string(c.kernel_distance)}};
  if (c.lime_query_cap)
    j["lime_query_cap"] = *c.lime_query_cap;
  else
    j["lime_query_cap"] = "auto";
  return j;
}

AttackConfig config_from_json(const nlohmann::json& j) {
  try {
    AttackConfig c;
    c.query_budget = j.at("query_budget").get<std::size_t>();
    c.pert_threshold = j.at("pert_threshold").get<double>();
    c.beam_size = j.at("beam_size").get<std::size_t>();
    c.synonym_k = j.at("synonym_k").get<std::size_t>();
    c.kernel_width = j.at("kernel_width").get<double>();
    c.ridge_lambda = j.at("ridge_lambda").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.ranking = parse_ranking_source(j.at("ranking").get<std::string>());
    c.rule = parse_sampling_rule(j.at("rule").get<std::string>());
    c.kernel_distance = parse_kernel_distance(j.at("kernel_distance").get<std::string>());
    const auto& cap = j.at("lime_query_cap");
    if (cap.is_number_integer()) c.lime_query_cap = cap.get<std::size_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid config: ") + e.what());
  }
}

nlohmann::json aggregates_to_json(const RunAggregates& a) {
  return {{"total", a.total},         {"attacked", a.attacked},   {"successes", a.successes},
          {"skipped", a.skipped},     {"asr", a.asr},             {"mean_pert", a.mean_pert},
          {"mean_sim", a.mean_sim},   {"mean_queries", a.mean_queries}};
}

namespace {

RunAggregates aggregates_from_json(const nlohmann::json& j) {
  RunAggregates a;
  a.total = j.at("total").get<std::size_t>();
  a.attacked = j.at("attacked").get<std::size_t>();
  a.successes = j.at("successes").get<std::size_t>();
  a.skipped = j.at("skipped").get<std::size_t>();
  a.asr = j.at("asr").get<double>();
  a.mean_pert = j.at("mean_pert").get<double>();
  a.mean_sim = j.at("mean_sim").get<double>();
  a.mean_queries = j.at("mean_queries").get<double>();
  return a;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

nlohmann::json outcome_to_json(const AttackOutcome& o) {
  nlohmann::json j{{"sample_id", o.sample_id},
                   {"status", to_string(o.status)},
                   {"pert_rate", o.pert_rate},
                   {"similarity", o.similarity},
                   {"queries_used", o.queries_used},
                   {"ranking_source", to_string(o.ranking_source)}};
  if (o.adversarial) {
    j["adversarial"] = o.adversarial->tokens();
    j["original"] = o.adversarial->original_tokens();
    j["substituted_positions"] = o.adversarial->substituted_positions();
  } else {
    j["adversarial"] = nullptr;
  }
  return j;
}

AttackOutcome outcome_from_json(const nlohmann::json& j) {
  try {
    AttackOutcome o;
    o.sample_id = j.at("sample_id").get<std::size_t>();
    o.status = parse_attack_status(j.at("status").get<std::string>());
    o.pert_rate = j.at("pert_rate").get<double>();
    o.similarity = j.at("similarity").get<double>();
    o.queries_used = j.at("queries_used").get<std::size_t>();
    o.ranking_source = parse_ranking_source(j.at("ranking_source").get<std::string>());
    if (!j.at("adversarial").is_null()) {
      auto tokens = j.at("adversarial").get<std::vector<std::string>>();
      auto original = j.at("original").get<std::vector<std::string>>();
      o.adversarial = TokenSequence(std::move(tokens), std::make_shared<const std::vector<std::string>>(original));
    }
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid outcome: ") + e.what());
  }
}

nlohmann::json report_to_json(const RunReport& r, bool with_timestamp) {
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(outcome_to_json(o));
  nlohmann::json j{{"config", config_to_json(r.config)},
                   {"asr_denominator", r.denominator == AsrDenominator::All ? "all" : "attacked"},
                   {"context", r.context},
                   {"aggregates", aggregates_to_json(r.aggregates)},
                   {"outcomes", std::move(outcomes)}};
  if (with_timestamp) j[kTimestampKey] = utc_timestamp();
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  try {
    RunReport r;
    r.config = config_from_json(j.at("config"));
    r.denominator = j.at("asr_denominator").get<std::string>() == "all" ? AsrDenominator::All
                                                                        : AsrDenominator::Attacked;
    r.context = j.value("context", nlohmann::json::object());
    for (const auto& o : j.at("outcomes")) r.outcomes.push_back(outcome_from_json(o));
    r.aggregates = aggregates_from_json(j.at("aggregates"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid report: ") + e.what());
  }
}

std::filesystem::path aggregates_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension();
  p += ".aggregates.csv";
  return p;
}

void write_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format) {
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
    return out;
  };
  if (format == ReportFormat::Json) {
    auto out = open(path);
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
    return;
  }
  {
    auto out = open(path);
    out << "sample_id,status,pert_rate,similarity,queries_used\n";
    for (const auto& o : report.outcomes)
      out << o.sample_id << ',' << to_string(o.status) << ',' << fixed6(o.pert_rate) << ','
          << fixed6(o.similarity) << ',' << o.queries_used << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
  }
  const auto agg_path = aggregates_path(path);
  auto out = open(agg_path);
  const auto& a = report.aggregates;
  out << "total,attacked,successes,skipped,asr,mean_pert,mean_sim,mean_queries\n";
  out << a.total << ',' << a.attacked << ',' << a.successes << ',' << a.skipped << ',' << fixed6(a.asr) << ','
      << fixed6(a.mean_pert) << ',' << fixed6(a.mean_sim) << ',' << fixed6(a.mean_queries) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + agg_path.string());
}

RunReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& value_name, std::ostream& out) {
  out << value_name << ",attacked,successes,asr,mean_pert,mean_sim,mean_queries\n";
  for (const auto& r : rows)
    out << r.value << ',' << r.aggregates.attacked << ',' << r.aggregates.successes << ','
        << fixed6(r.aggregates.asr) << ',' << fixed6(r.aggregates.mean_pert) << ','
        << fixed6(r.aggregates.mean_sim) << ',' << fixed6(r.aggregates.mean_queries) << '\n';
}

}  // namespace limeattack
