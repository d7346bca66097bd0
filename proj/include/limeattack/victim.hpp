#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "limeattack/core.hpp"

namespace limeattack {

class QueryLedger;

// Black-box victim exposing only a predicted label.
class HardLabelOracle {
 public:
  virtual ~HardLabelOracle() = default;

  virtual Label predict(const TokenSequence& text) const = 0;
  virtual std::size_t num_classes() const = 0;

  // Query routed through a ledger. The default charges exactly one query;
  // adapters whose calls can be retried charge once per attempt that reaches
  // the victim.
  virtual Label predict_metered(const TokenSequence& text, QueryLedger& ledger) const;
};

// An in-process victim that also exposes class probabilities. Only
// score-based baselines use these.
class ScoringOracle : public HardLabelOracle {
 public:
  virtual std::vector<double> probabilities(const TokenSequence& text) const = 0;
  Label predict(const TokenSequence& text) const override;
};

// Per-attack budget. `used` never exceeds `budget`.
class QueryLedger {
 public:
  explicit QueryLedger(std::size_t budget);

  std::size_t budget() const noexcept { return budget_; }
  std::size_t used() const noexcept { return used_; }
  std::size_t remaining() const noexcept { return budget_ - used_; }
  bool exhausted() const noexcept { return used_ >= budget_; }

  // Throws BudgetExhausted when nothing is left.
  void charge();

  Label query(const HardLabelOracle& oracle, const TokenSequence& text);

 private:
  std::size_t budget_;
  std::size_t used_ = 0;
};

inline Label query(const HardLabelOracle& oracle, QueryLedger& ledger, const TokenSequence& text) {
  return ledger.query(oracle, text);
}

// Two-class keyword scorer: class 1 iff the summed weights of the distinct
// words present exceed the threshold.
class LexiconVictim : public HardLabelOracle {
 public:
  LexiconVictim(std::map<std::string, double> keyword_weights, double threshold);

  Label predict(const TokenSequence& text) const override;
  std::size_t num_classes() const override { return 2; }

  double score(const TokenSequence& text) const;
  const std::map<std::string, double>& keyword_weights() const noexcept { return weights_; }
  double threshold() const noexcept { return threshold_; }

  nlohmann::json to_json() const;
  static LexiconVictim from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static LexiconVictim load(const std::filesystem::path& path);

 private:
  std::map<std::string, double> weights_;
  double threshold_;
};

// Multinomial bag-of-words Naive Bayes with add-alpha smoothing.
class NaiveBayesVictim : public ScoringOracle {
 public:
  NaiveBayesVictim(std::vector<double> class_log_priors,
                   std::vector<std::map<std::string, double>> word_log_likelihoods,
                   double alpha);

  std::size_t num_classes() const override { return log_priors_.size(); }
  std::vector<double> probabilities(const TokenSequence& text) const override;
  // Unnormalized log posterior per class; words outside the vocabulary are skipped.
  std::vector<double> log_joint(const TokenSequence& text) const;

  const std::vector<double>& class_log_priors() const noexcept { return log_priors_; }
  const std::vector<std::map<std::string, double>>& word_log_likelihoods() const noexcept {
    return log_likelihoods_;
  }
  bool in_vocabulary(const std::string& word) const;
  std::set<std::string> vocabulary() const;
  double alpha() const noexcept { return alpha_; }

  nlohmann::json to_json() const;
  static NaiveBayesVictim from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static NaiveBayesVictim load(const std::filesystem::path& path);

 private:
  std::vector<double> log_priors_;
  std::vector<std::map<std::string, double>> log_likelihoods_;
  double alpha_;
};

struct LabeledText {
  TokenSequence text;
  Label label;
};

// Throws DegenerateCorpus when fewer than two classes are present or a class
// index below the maximum has no documents.
NaiveBayesVictim train_naive_bayes(std::span<const LabeledText> corpus, double alpha = 1.0);

// Counts every predict call reaching the wrapped oracle. Thread-safe.
class CountingOracle : public HardLabelOracle {
 public:
  explicit CountingOracle(const HardLabelOracle& inner) : inner_(inner) {}

  Label predict(const TokenSequence& text) const override;
  std::size_t num_classes() const override { return inner_.num_classes(); }
  Label predict_metered(const TokenSequence& text, QueryLedger& ledger) const override;

  std::size_t calls() const noexcept { return calls_.load(); }
  void reset() noexcept { calls_ = 0; }

 private:
  const HardLabelOracle& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

struct RemoteOptions {
  std::string url;
  std::chrono::milliseconds timeout{10000};
  int retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::size_t num_classes = 2;
};

// Victim behind HTTP: POST {"text": ...} -> {"label": int, "name": optional}.
class RemoteVictim : public HardLabelOracle {
 public:
  explicit RemoteVictim(RemoteOptions options);

  Label predict(const TokenSequence& text) const override;
  std::size_t num_classes() const override { return options_.num_classes; }
  Label predict_metered(const TokenSequence& text, QueryLedger& ledger) const override;

  const RemoteOptions& options() const noexcept { return options_; }

 private:
  Label request(const TokenSequence& text, QueryLedger* ledger) const;

  RemoteOptions options_;
};

// Resolves the remote endpoint: the explicit URL when non-empty, otherwise
// the VICTIM_ENDPOINT environment variable. Throws InvalidConfig if neither.
std::string resolve_victim_endpoint(const std::string& explicit_url);

}  // namespace limeattack
