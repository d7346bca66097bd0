#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "limeattack/core.hpp"
#include "limeattack/dataset.hpp"
#include "limeattack/search.hpp"

namespace limeattack {

// Which outcomes form the success-rate denominator. `Attacked` drops
// already-misclassified samples; `All` counts every sample.
enum class AsrDenominator { Attacked, All };

struct RunAggregates {
  std::size_t total = 0;
  std::size_t attacked = 0;
  std::size_t successes = 0;
  std::size_t skipped = 0;
  double asr = 0.0;
  double mean_pert = 0.0;     // successes only
  double mean_sim = 0.0;      // successes only
  double mean_queries = 0.0;  // attacked samples only
};

struct RunReport {
  std::vector<AttackOutcome> outcomes;
  AttackConfig config;
  AsrDenominator denominator = AsrDenominator::Attacked;
  nlohmann::json context = nlohmann::json::object();  // run provenance (dataset, victim, ...)
  RunAggregates aggregates;
};

// Throws EmptyRun when the denominator is zero.
double attack_success_rate(std::span<const AttackOutcome> outcomes, AsrDenominator denom = AsrDenominator::Attacked);

// An empty denominator yields asr 0 rather than an error.
RunAggregates aggregate(std::span<const AttackOutcome> outcomes, AsrDenominator denom = AsrDenominator::Attacked);

// Attacks the selected rows (all rows when `indices` is empty) with up to
// `parallel` worker threads. Outcomes are ordered by row index.
std::vector<AttackOutcome> run_attacks(const AttackEngine& engine, std::span<const DatasetRow> rows,
                                       std::span<const std::size_t> indices = {}, unsigned parallel = 1);

RunReport make_report(std::vector<AttackOutcome> outcomes, const AttackConfig& config,
                      AsrDenominator denom = AsrDenominator::Attacked);

struct SweepRow {
  std::size_t value;  // budget or beam size
  RunAggregates aggregates;
};

// One full run per budget with the same seed. Budgets must be strictly
// increasing (InvalidConfig otherwise). An automatic LIME allocation is
// pinned to the smallest budget's so every run ranks words identically.
std::vector<SweepRow> budget_sweep(std::span<const DatasetRow> rows, std::span<const std::size_t> indices,
                                   const HardLabelOracle& oracle, const AttackResources& resources,
                                   const AttackConfig& config, std::span<const std::size_t> budgets,
                                   unsigned parallel = 1, AsrDenominator denom = AsrDenominator::Attacked);

std::vector<SweepRow> beam_sweep(std::span<const DatasetRow> rows, std::span<const std::size_t> indices,
                                 const HardLabelOracle& oracle, const AttackResources& resources,
                                 const AttackConfig& config, std::span<const std::size_t> beams,
                                 unsigned parallel = 1, AsrDenominator denom = AsrDenominator::Attacked);

enum class ReportFormat { Json, Csv };
ReportFormat parse_report_format(std::string_view s);

nlohmann::json config_to_json(const AttackConfig& config);
AttackConfig config_from_json(const nlohmann::json& j);
nlohmann::json aggregates_to_json(const RunAggregates& a);
nlohmann::json outcome_to_json(const AttackOutcome& o);
AttackOutcome outcome_from_json(const nlohmann::json& j);

// Key that carries the wall-clock time; excluded from determinism checks.
inline constexpr const char* kTimestampKey = "generated_at";

nlohmann::json report_to_json(const RunReport& report, bool with_timestamp = true);
RunReport report_from_json(const nlohmann::json& j);

// JSON: one document with config, aggregates and outcomes. CSV: per-outcome
// rows at `path` plus the aggregates at aggregates_path(path).
void write_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format);
RunReport read_report_json(const std::filesystem::path& path);
std::filesystem::path aggregates_path(const std::filesystem::path& csv_path);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& value_name, std::ostream& out);

}  // namespace limeattack
