#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tqa/error.hpp"
#include "tqa/table.hpp"

namespace tqa {

enum class StrategyId { DP, CoT, SCoT, ReAct, ToT, ToTSelfAsk, PIP, TGN };

enum class AblationId { TgnStage1, TgnStage2, PipCase1, PipCase2 };

enum class AnswerFormat { EntityList, Sentence };

/// CLI spelling of a strategy ("dp", "cot", ..., "pip", "tgn").
std::string strategy_name(StrategyId s);
std::optional<StrategyId> strategy_from_name(const std::string& name);

std::string ablation_name(AblationId a);
std::optional<AblationId> ablation_from_name(const std::string& name);

/// Base strategy an ablation applies to (TGN for TgnStage*, PIP for PipCase*).
StrategyId ablation_base(AblationId a);

/// A prompt template in five concatenated parts. The footer carries the
/// {table_str} and {question} slots; the answer-format block is swapped at
/// render time when the Sentence format is requested.
struct PromptTemplate {
  std::string preamble;
  std::string guidelines;
  std::string action_pattern;
  std::string answer_format_block;
  std::string footer;
  bool reconstructed = false;  // true for templates we authored, not shipped verbatim

  std::string text() const;
};

/// Builtin template for a strategy. PIP and TGN ship verbatim; the six
/// baselines are reconstructions sharing the same answer contract and are
/// flagged reconstructed=true.
PromptTemplate builtin_template(StrategyId s);

/// Derives an ablated template from the base strategy's builtin by deleting
/// whole lines from the action pattern (renumbering PIP steps to stay
/// consecutive). Throws MismatchedAblation when `a` does not apply to `base`.
PromptTemplate ablated_template(StrategyId base, AblationId a);

/// Loads "<strategy>.txt" from `dir` if present, validating that the file
/// carries both slot markers. Empty result means no override file exists.
std::optional<PromptTemplate> load_template_override(const std::string& dir,
                                                     StrategyId s);

/// Renders a complete prompt: slots replaced with serialize_for_prompt(table)
/// and the question, answer block selected by `fmt`. Deterministic.
std::string render_prompt(const PromptTemplate& t, const Table& table,
                          const std::string& question, AnswerFormat fmt);

/// The two answer-contract blocks (EntityList / Sentence), exposed for tests.
const std::string& answer_block(AnswerFormat fmt);

}  // namespace tqa
