#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tqa/strategy.hpp"
#include "tqa/table.hpp"

namespace tqa {

enum class ViolationCode {
  MissingSection,
  OutOfOrder,
  MissingFinalAnswer,
  DuplicateStep,
  EmptyTrace,
  MultipleFinalAnswers,
};

std::string violation_code_name(ViolationCode c);
std::optional<ViolationCode> violation_code_from_name(const std::string& name);

struct Violation {
  ViolationCode code;
  std::string detail;
  bool operator==(const Violation& other) const {
    return code == other.code && detail == other.detail;
  }
};

/// Structural compliance of a raw completion with its strategy's pattern.
/// An empty violations list means the trace is fully compliant.
struct ComplianceReport {
  StrategyId strategy = StrategyId::DP;
  std::vector<Violation> violations;
  int n_cycles = 0;                // TGN only
  std::set<int> steps_present;     // PIP only

  bool compliant() const { return violations.empty(); }
  bool has(ViolationCode c) const;
  int count(ViolationCode c) const;
};

/// One Analyze/Execute/Validate cycle as found in the raw text. Absent
/// sections are empty optionals.
struct TgnCycle {
  std::optional<std::string> analyze;
  std::optional<std::string> execute;
  std::optional<std::string> validate;
};

struct TgnTrace {
  std::vector<TgnCycle> cycles;
  std::string trailing_text;
};

struct PipTrace {
  std::map<int, std::string> steps;  // step number (1-5) -> text, first kept
  std::string trailing_text;
};

struct ExtractedAnswer {
  enum class Kind { EntityList, Sentence };
  Kind kind = Kind::EntityList;
  std::vector<std::string> entities;  // normalized, nonempty items
  std::string sentence;               // verbatim minus outer whitespace
  std::string raw;                    // answer text before normalization

  bool empty() const {
    return kind == Kind::EntityList ? entities.empty() : sentence.empty();
  }
};

/// Scans for lines opening with "Analyze:" / "Execute:" / "Validate:"
/// (case-insensitive, tolerating leading bullets and bold markers) and
/// groups them greedily into cycles; a new Analyze opens a new cycle.
/// Total: malformed input produces violations, never a failure.
std::pair<TgnTrace, ComplianceReport> parse_tgn_trace(const std::string& raw);

/// Matches lines opening with "Step <k>:" for k in 1..9; k>5 and
/// out-of-order or duplicate step numbers become violations. Total.
std::pair<PipTrace, ComplianceReport> parse_pip_trace(const std::string& raw);

/// Finds the LAST line-opening "Final Answer:" marker (case-insensitive,
/// decoration tolerated). EntityList splits the remainder of that line on
/// top-level commas (digit-grouped numbers and parenthesized text stay
/// whole); Sentence keeps the remainder plus continuation lines until a
/// blank line. Absence is a violation plus an empty answer, never an error.
std::pair<ExtractedAnswer, std::vector<Violation>> extract_final_answer(
    const std::string& raw, AnswerFormat fmt);

/// Canonical entity form: outer trim, inner whitespace collapsed, ASCII
/// lowercase, surrounding quote pairs and trailing periods stripped, numeric
/// strings re-rendered canonically ("1,234" == "1234" == "1234.0").
/// Idempotent.
std::string normalize_entity(const std::string& s);

/// Splits on commas at parenthesis depth zero, keeping digit-grouping
/// commas (d,ddd) intact. Exposed for reference-answer handling.
std::vector<std::string> split_top_level(const std::string& s);

enum class GroundingStatus { Grounded, Ungrounded, Unparseable };

std::string grounding_status_name(GroundingStatus s);

struct GroundingResult {
  int cycle_index = 0;
  GroundingStatus status = GroundingStatus::Unparseable;
  std::string detail;
};

/// Re-runs each cycle's Execute section through the grounding mini-language
/// (AGGREGATE / LOOKUP / COMPARE / COUNT) and checks the claimed value:
/// Grounded iff the cycle's Validate text (or the final answer, for the
/// last cycle) contains the recomputed value; Unparseable when the section
/// is free prose, which is the expected case for real model output.
/// Advisory only: results never affect scores.
std::vector<GroundingResult> ground_execute_steps(const TgnTrace& t,
                                                  const Table& table);

/// Parses one Execute section against the mini-language, returning the
/// TableOp it denotes, or nullopt when it does not match.
std::optional<TableOp> parse_grounding_op(const std::string& section);

}  // namespace tqa
