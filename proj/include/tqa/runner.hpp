#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tqa/backend.hpp"
#include "tqa/dataset.hpp"
#include "tqa/metrics.hpp"
#include "tqa/strategy.hpp"
#include "tqa/trace.hpp"

namespace tqa {

struct RunOptions {
  std::string dataset_path;
  std::string mapping = "tablebench";  // builtin name or mapping-file path
  std::optional<StrategyId> strategy;
  std::optional<AblationId> ablation;  // overrides strategy's template
  std::string backend = "oracle";      // http | oracle | sloppy:<defect>
  BackendConfig backend_config;
  std::optional<AnswerFormat> answer_format;  // default follows the mapping
  std::optional<std::size_t> limit;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string template_dir;
  bool store_prompts = false;
  bool strict = false;
  bool frozen_clock = false;  // pins timestamps/latency for reproducible runs
  int concurrency = 4;
  std::string run_id;  // derived from the inputs when empty
};

struct RunSummary {
  int n_instances = 0;
  int n_new_records = 0;
  int n_resumed = 0;
  int n_backend_errors = 0;
  std::string out_path;
  std::string manifest_path;
};

/// End-to-end run: render -> complete -> parse -> extract -> score, one
/// line-delimited record per instance, ordered by instance id regardless of
/// completion order. Re-invocation with the same inputs resumes, skipping
/// instances already recorded. Per-instance backend failures are recorded
/// (finish_reason=error, scored 0); only unusable inputs/outputs throw.
RunSummary run(const RunOptions& options);

/// Recomputes every metric from the stored raw_text (stored scores are
/// ignored), routes by category and aggregates. Throws IdMismatch when the
/// results reference ids missing from the dataset.
AggregateReport score(const std::string& results_path,
                      const std::string& dataset_path,
                      const std::string& mapping);

enum class ReportLayout { BySubtype, ByTask, Overall };

std::optional<ReportLayout> report_layout_from_name(const std::string& name);

/// Deterministic report rendering; values are printed x100 with 2 decimals.
std::string render_report_text(const AggregateReport& report,
                               ReportLayout layout);
std::string render_report_csv(const AggregateReport& report,
                              ReportLayout layout);

struct TraceValidationSummary {
  int n_records = 0;
  std::string strategy;  // from the run manifest, "unknown" if absent
  std::map<std::string, int> violation_counts;  // code -> count
  std::map<std::string, int> grounding_counts;  // status -> count
  // subtype -> code/status -> count
  std::map<std::string, std::map<std::string, int>> by_subtype;
  int records_with_violations = 0;
};

/// Tabulates compliance violations and grounding statuses recorded in a
/// results file, by strategy and category.
TraceValidationSummary validate_traces(const std::string& results_path);

std::string render_validation_text(const TraceValidationSummary& summary);

/// Parse/extract/score one raw completion against an instance; shared by
/// the in-run scorer and the score subcommand (which makes recomputation
/// equal in-run scoring by construction).
struct ScoredCompletion {
  ComplianceReport compliance;
  ExtractedAnswer answer;
  std::vector<GroundingResult> grounding;  // TGN only
  InstanceScore score;
};

ScoredCompletion score_completion(StrategyId strategy, AnswerFormat fmt,
                                  const std::string& raw_text,
                                  const QaInstance& instance);

/// FNV-1a 64-bit hex digest; binds manifests to exact inputs.
std::string fnv64_hex(const std::string& data);

}  // namespace tqa
