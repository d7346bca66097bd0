#include "limeattack/victim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "http_json.hpp"

namespace limeattack {

Label HardLabelOracle::predict_metered(const TokenSequence& text, QueryLedger& ledger) const {
  ledger.charge();
  return predict(text);
}

Label ScoringOracle::predict(const TokenSequence& text) const {
  const auto probs = probabilities(text);
  const auto best = std::max_element(probs.begin(), probs.end());
  return Label{static_cast<std::size_t>(best - probs.begin()), std::nullopt};
}

QueryLedger::QueryLedger(std::size_t budget) : budget_(budget) {
  if (budget_ < 1) throw Error(ErrorCode::InvalidConfig, "query budget must be at least 1");
}

void QueryLedger::charge() {
  if (used_ >= budget_) throw BudgetExhausted();
  ++used_;
}

Label QueryLedger::query(const HardLabelOracle& oracle, const TokenSequence& text) {
  if (exhausted()) throw BudgetExhausted();
  return oracle.predict_metered(text, *this);
}

// --- LexiconVictim ---------------------------------------------------------

LexiconVictim::LexiconVictim(std::map<std::string, double> keyword_weights, double threshold)
    : weights_(std::move(keyword_weights)), threshold_(threshold) {}

double LexiconVictim::score(const TokenSequence& text) const {
  std::unordered_set<std::string_view> seen;
  double total = 0.0;
  for (const auto& tok : text.tokens()) {
    if (!seen.insert(tok).second) continue;
    auto it = weights_.find(tok);
    if (it != weights_.end()) total += it->second;
  }
  return total;
}

Label LexiconVictim::predict(const TokenSequence& text) const {
  return Label{score(text) > threshold_ ? 1u : 0u, std::nullopt};
}

nlohmann::json LexiconVictim::to_json() const {
  return {{"kind", "lexicon"}, {"threshold", threshold_}, {"weights", weights_}};
}

LexiconVictim LexiconVictim::from_json(const nlohmann::json& j) {
  try {
    return LexiconVictim(j.at("weights").get<std::map<std::string, double>>(),
                         j.at("threshold").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid lexicon model: ") + e.what());
  }
}

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

void LexiconVictim::save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

LexiconVictim LexiconVictim::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

// --- NaiveBayesVictim ------------------------------------------------------

NaiveBayesVictim::NaiveBayesVictim(std::vector<double> class_log_priors,
                                   std::vector<std::map<std::string, double>> word_log_likelihoods,
                                   double alpha)
    : log_priors_(std::move(class_log_priors)),
      log_likelihoods_(std::move(word_log_likelihoods)),
      alpha_(alpha) {
  if (log_priors_.size() < 2 || log_likelihoods_.size() != log_priors_.size())
    throw Error(ErrorCode::DegenerateCorpus, "naive Bayes model needs at least two classes");
}

bool NaiveBayesVictim::in_vocabulary(const std::string& word) const {
  return log_likelihoods_.front().count(word) > 0;
}

std::set<std::string> NaiveBayesVictim::vocabulary() const {
  std::set<std::string> out;
  for (const auto& [w, _] : log_likelihoods_.front()) out.insert(w);
  return out;
}

std::vector<double> NaiveBayesVictim::log_joint(const TokenSequence& text) const {
  std::vector<double> out = log_priors_;
  for (const auto& tok : text.tokens()) {
    if (!in_vocabulary(tok)) continue;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += log_likelihoods_[c].at(tok);
  }
  return out;
}

std::vector<double> NaiveBayesVictim::probabilities(const TokenSequence& text) const {
  auto logp = log_joint(text);
  const double top = *std::max_element(logp.begin(), logp.end());
  double norm = 0.0;
  for (double& v : logp) {
    v = std::exp(v - top);
    norm += v;
  }
  for (double& v : logp) v /= norm;
  return logp;
}

nlohmann::json NaiveBayesVictim::to_json() const {
  std::vector<std::string> vocab;
  for (const auto& [w, _] : log_likelihoods_.front()) vocab.push_back(w);
  return {{"kind", "naive_bayes"},
          {"alpha", alpha_},
          {"class_log_priors", log_priors_},
          {"word_log_likelihoods", log_likelihoods_},
          {"vocabulary", vocab}};
}

NaiveBayesVictim NaiveBayesVictim::from_json(const nlohmann::json& j) {
  try {
    return NaiveBayesVictim(j.at("class_log_priors").get<std::vector<double>>(),
                            j.at("word_log_likelihoods").get<std::vector<std::map<std::string, double>>>(),
                            j.at("alpha").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid naive Bayes model: ") + e.what());
  }
}

void NaiveBayesVictim::save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

NaiveBayesVictim NaiveBayesVictim::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

NaiveBayesVictim train_naive_bayes(std::span<const LabeledText> corpus, double alpha) {
  if (corpus.empty()) throw Error(ErrorCode::DegenerateCorpus, "training corpus is empty");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidConfig, "smoothing alpha must be positive");

  std::size_t num_classes = 0;
  for (const auto& row : corpus) num_classes = std::max(num_classes, row.label.id + 1);
  if (num_classes < 2) throw Error(ErrorCode::DegenerateCorpus, "corpus has a single class");

  std::vector<std::size_t> docs(num_classes, 0);
  std::vector<std::map<std::string, double>> counts(num_classes);
  std::vector<double> totals(num_classes, 0.0);
  std::set<std::string> vocab;
  for (const auto& row : corpus) {
    ++docs[row.label.id];
    for (const auto& tok : row.text.tokens()) {
      counts[row.label.id][tok] += 1.0;
      totals[row.label.id] += 1.0;
      vocab.insert(tok);
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    if (docs[c] == 0)
      throw Error(ErrorCode::DegenerateCorpus, "class " + std::to_string(c) + " has no documents");

  const double n_docs = static_cast<double>(corpus.size());
  const double v = static_cast<double>(vocab.size());
  std::vector<double> priors(num_classes);
  std::vector<std::map<std::string, double>> likelihoods(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    priors[c] = std::log(static_cast<double>(docs[c]) / n_docs);
    const double denom = totals[c] + alpha * v;
    for (const auto& w : vocab) {
      auto it = counts[c].find(w);
      const double k = it == counts[c].end() ? 0.0 : it->second;
      likelihoods[c][w] = std::log((k + alpha) / denom);
    }
  }
  return NaiveBayesVictim(std::move(priors), std::move(likelihoods), alpha);
}

// --- CountingOracle --------------------------------------------------------

Label CountingOracle::predict(const TokenSequence& text) const {
  ++calls_;
  return inner_.predict(text);
}

Label CountingOracle::predict_metered(const TokenSequence& text, QueryLedger& ledger) const {
  ledger.charge();
  return predict(text);
}

// --- RemoteVictim ----------------------------------------------------------

RemoteVictim::RemoteVictim(RemoteOptions options) : options_(std::move(options)) {
  detail::parse_endpoint(options_.url);
  if (options_.num_classes < 1) throw Error(ErrorCode::InvalidConfig, "remote victim needs num_classes >= 1");
  if (options_.retries < 0) throw Error(ErrorCode::InvalidConfig, "retries must be non-negative");
}

Label RemoteVictim::predict(const TokenSequence& text) const { return request(text, nullptr); }

Label RemoteVictim::predict_metered(const TokenSequence& text, QueryLedger& ledger) const {
  if (ledger.exhausted()) throw BudgetExhausted();
  return request(text, &ledger);
}

Label RemoteVictim::request(const TokenSequence& text, QueryLedger* ledger) const {
  detail::AttemptHooks hooks;
  if (ledger) {
    hooks.before_retry = [ledger] {
      if (ledger->exhausted()) throw BudgetExhausted();
    };
    hooks.on_response = [ledger] { ledger->charge(); };
  }
  const detail::RetryPolicy policy{options_.retries, options_.initial_backoff, options_.timeout};
  const auto body = nlohmann::json{{"text", text.joined()}};
  const auto reply = detail::post_json(detail::parse_endpoint(options_.url), body, policy, hooks);

  if (!reply.is_object() || !reply.contains("label") || !reply["label"].is_number_integer())
    throw Error(ErrorCode::MalformedResponse, "response lacks an integer 'label'");
  const auto id = reply["label"].get<long long>();
  if (id < 0 || static_cast<std::size_t>(id) >= options_.num_classes)
    throw Error(ErrorCode::MalformedResponse, "label " + std::to_string(id) + " out of range");
  Label label{static_cast<std::size_t>(id), std::nullopt};
  if (reply.contains("name") && reply["name"].is_string()) label.name = reply["name"].get<std::string>();
  return label;
}

std::string resolve_victim_endpoint(const std::string& explicit_url) {
  if (!explicit_url.empty()) return explicit_url;
  if (const char* env = std::getenv("VICTIM_ENDPOINT"); env && *env) return env;
  throw Error(ErrorCode::InvalidConfig, "no victim endpoint given and VICTIM_ENDPOINT is unset");
}

}  // namespace limeattack
