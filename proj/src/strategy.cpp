#include "tqa/strategy.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace tqa {

namespace {

const std::string kEntityAnswerBlock =
    "The answer should follow the format below:\n"
    "[Answer Format]\n"
    "Final Answer: AnswerName1, AnswerName2...\n"
    "\n"
    "Ensure the final answer format is the last output line and can only be "
    "in the \"Final Answer: AnswerName1, AnswerName2...\" form, no other "
    "form. Ensure the \"AnswerName\" is a number or entity name, as short as "
    "possible, without any explanation.\n"
    "\n";

const std::string kSentenceAnswerBlock =
    "The answer should follow the format below:\n"
    "[Answer Format]\n"
    "Final Answer: AnswerSentence\n"
    "\n"
    "Ensure the final answer format is the last output line and can only be "
    "in the \"Final Answer: AnswerSentence\" form, no other form. Ensure the "
    "\"AnswerSentence\" is a single sentence, as short as possible, without "
    "any explanation.\n"
    "\n";

const std::string kFooter =
    "[TABLE]\n"
    "{table_str}\n"
    "\n"
    "Let's get start!\n"
    "Question: {question}\n";

PromptTemplate make(std::string preamble, std::string guidelines,
                    std::string action_pattern, bool reconstructed) {
  PromptTemplate t;
  t.preamble = std::move(preamble);
  t.guidelines = std::move(guidelines);
  t.action_pattern = std::move(action_pattern);
  t.answer_format_block = kEntityAnswerBlock;
  t.footer = kFooter;
  t.reconstructed = reconstructed;
  return t;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() &&
         std::equal(prefix.begin(), prefix.end(), s.begin());
}

std::size_t count_occurrences(const std::string& haystack,
                              const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

std::string replace_once(const std::string& s, const std::string& slot,
                         const std::string& value) {
  std::size_t pos = s.find(slot);
  if (pos == std::string::npos) return s;
  return s.substr(0, pos) + value + s.substr(pos + slot.size());
}

}  // namespace

std::string strategy_name(StrategyId s) {
  switch (s) {
    case StrategyId::DP: return "dp";
    case StrategyId::CoT: return "cot";
    case StrategyId::SCoT: return "scot";
    case StrategyId::ReAct: return "react";
    case StrategyId::ToT: return "tot";
    case StrategyId::ToTSelfAsk: return "tot-selfask";
    case StrategyId::PIP: return "pip";
    case StrategyId::TGN: return "tgn";
  }
  return "?";
}

std::optional<StrategyId> strategy_from_name(const std::string& name) {
  static const std::vector<StrategyId> all = {
      StrategyId::DP,  StrategyId::CoT, StrategyId::SCoT,
      StrategyId::ReAct, StrategyId::ToT, StrategyId::ToTSelfAsk,
      StrategyId::PIP, StrategyId::TGN};
  for (StrategyId s : all)
    if (strategy_name(s) == name) return s;
  return std::nullopt;
}

std::string ablation_name(AblationId a) {
  switch (a) {
    case AblationId::TgnStage1: return "tgn-stage1";
    case AblationId::TgnStage2: return "tgn-stage2";
    case AblationId::PipCase1: return "pip-case1";
    case AblationId::PipCase2: return "pip-case2";
  }
  return "?";
}

std::optional<AblationId> ablation_from_name(const std::string& name) {
  static const std::vector<AblationId> all = {
      AblationId::TgnStage1, AblationId::TgnStage2, AblationId::PipCase1,
      AblationId::PipCase2};
  for (AblationId a : all)
    if (ablation_name(a) == name) return a;
  return std::nullopt;
}

StrategyId ablation_base(AblationId a) {
  switch (a) {
    case AblationId::TgnStage1:
    case AblationId::TgnStage2: return StrategyId::TGN;
    case AblationId::PipCase1:
    case AblationId::PipCase2: return StrategyId::PIP;
  }
  return StrategyId::TGN;
}

std::string PromptTemplate::text() const {
  return preamble + guidelines + action_pattern + answer_format_block + footer;
}

const std::string& answer_block(AnswerFormat fmt) {
  return fmt == AnswerFormat::Sentence ? kSentenceAnswerBlock
                                       : kEntityAnswerBlock;
}

PromptTemplate builtin_template(StrategyId s) {
  switch (s) {
    case StrategyId::PIP:
      return make(
          "You are a table reasoning assistant. You will be given a table "
          "and a question. Your goal is to progressively reason over the "
          "table before giving the final answer.\n\n",
          "[Guidelines]\n"
          "You should act in following patterns step by step to analyze the "
          "table and then give the final answer:\n",
          "[Action Patterns]\n"
          "Step 1: Identify the table columns and their meaning.\n"
          "Step 2: Identify the question and restate the question in your "
          "own words.\n"
          "Step 3: Extract relevant rows from the table in a sequence.\n"
          "Step 4: Do intermediate analysis, calculations, or comparisons "
          "step by step for each relevant row only once.\n"
          "Step 5: Provide the final answer.\n\n\n",
          /*reconstructed=*/false);
    case StrategyId::TGN:
      return make(
          "You are a table assistant who solves the query by analyzing the "
          "question and executing operations.\n\n",
          "[Guidelines]\n"
          "Use the following format for processing tabular queries:\n\n",
          "Analyze: [reasoning about how to interpret the data grid or "
          "query]\n"
          "Execute: [specific operation to perform on the tabular schema, "
          "e.g., lookup, calculation, or aggregation]\n"
          "Validate: [verification of the result against the data grid]\n"
          "... (repeat Analyze - Execute - Validate as needed to resolve "
          "the query)\n\n\n",
          /*reconstructed=*/false);
    case StrategyId::DP:
      return make(
          "You are a table assistant. Answer the question according to the "
          "given table.\n\n",
          "", "", /*reconstructed=*/true);
    case StrategyId::CoT:
      return make(
          "You are a table assistant. Answer the question according to the "
          "given table.\n\n",
          "[Guidelines]\nLet's think step by step.\n\n", "",
          /*reconstructed=*/true);
    case StrategyId::SCoT:
      return make(
          "You are a table assistant who reasons over the table with "
          "symbolic operations before answering.\n\n",
          "[Guidelines]\n"
          "First translate the question into a plan of symbolic operations "
          "over the table, then carry out the plan step by step:\n\n",
          "Plan: [symbolic operations over rows and columns, e.g., select, "
          "filter, aggregate]\n"
          "Solve: [step-by-step execution of the plan on the table]\n\n\n",
          /*reconstructed=*/true);
    case StrategyId::ReAct:
      return make(
          "You are a table assistant who interleaves reasoning and actions "
          "to resolve the query.\n\n",
          "[Guidelines]\n"
          "Use the following format for processing tabular queries:\n\n",
          "Thought: [reasoning about the current state and what to do "
          "next]\n"
          "Action: [operation to perform on the table, e.g., lookup, "
          "filter, or calculation]\n"
          "Observation: [result of the action]\n"
          "... (repeat Thought - Action - Observation as needed to resolve "
          "the query)\n\n\n",
          /*reconstructed=*/true);
    case StrategyId::ToT:
      return make(
          "You are a table assistant who explores several reasoning "
          "branches before answering.\n\n",
          "[Guidelines]\n"
          "Propose alternative reasoning paths over the table, evaluate "
          "them, and follow the most promising one:\n\n",
          "Branch 1: [one possible way to derive the answer from the "
          "table]\n"
          "Branch 2: [an alternative way to derive the answer]\n"
          "Evaluation: [compare the branches and choose the most promising "
          "one]\n"
          "Best Path: [carry out the chosen branch step by step]\n\n\n",
          /*reconstructed=*/true);
    case StrategyId::ToTSelfAsk:
      return make(
          "You are a table assistant who explores reasoning branches by "
          "asking and answering follow-up questions.\n\n",
          "[Guidelines]\n"
          "Decompose the question into follow-up questions, answer each "
          "from the table, and expand the most promising branch:\n\n",
          "Follow-up: [a sub-question that helps answer the main question]\n"
          "Intermediate Answer: [the answer to the follow-up, taken from "
          "the table]\n"
          "... (repeat Follow-up - Intermediate Answer as needed, then "
          "follow the best branch)\n\n\n",
          /*reconstructed=*/true);
  }
  return PromptTemplate{};
}

PromptTemplate ablated_template(StrategyId base, AblationId a) {
  if (ablation_base(a) != base)
    throw MismatchedAblation(ablation_name(a) + " does not apply to " +
                             strategy_name(base));
  PromptTemplate t = builtin_template(base);
  std::vector<std::string> lines = split_lines(t.action_pattern);
  std::vector<std::string> kept;

  switch (a) {
    case AblationId::TgnStage1:
      for (const auto& line : lines)
        if (!starts_with(line, "Execute:") && !starts_with(line, "Validate:") &&
            !starts_with(line, "... (repeat"))
          kept.push_back(line);
      break;
    case AblationId::TgnStage2:
      for (const auto& line : lines)
        if (!starts_with(line, "Validate:")) kept.push_back(line);
      break;
    case AblationId::PipCase1:
    case AblationId::PipCase2: {
      const bool case1 = (a == AblationId::PipCase1);
      int next_step = 1;
      for (const auto& line : lines) {
        if (starts_with(line, "Step ")) {
          char step = line[5];
          bool drop = case1 ? (step == '1' || step == '4')
                            : (step == '3' || step == '4');
          if (drop) continue;
          kept.push_back("Step " + std::to_string(next_step++) +
                         line.substr(6));
        } else {
          kept.push_back(line);
        }
      }
      break;
    }
  }
  t.action_pattern = join_lines(kept);
  return t;
}

std::optional<PromptTemplate> load_template_override(const std::string& dir,
                                                     StrategyId s) {
  std::filesystem::path path =
      std::filesystem::path(dir) / (strategy_name(s) + ".txt");
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateInvalid("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string body = buf.str();
  if (count_occurrences(body, "{table_str}") != 1 ||
      count_occurrences(body, "{question}") != 1)
    throw TemplateInvalid(path.string() +
                          " must contain {table_str} and {question} exactly once");
  if (body.find("Final Answer:") == std::string::npos)
    throw TemplateInvalid(path.string() +
                          " must contain the \"Final Answer:\" contract");
  PromptTemplate t;
  t.footer = std::move(body);
  return t;
}

std::string render_prompt(const PromptTemplate& t, const Table& table,
                          const std::string& question, AnswerFormat fmt) {
  if (question.empty()) throw TemplateInvalid("question must be nonempty");
  std::string block = t.answer_format_block.empty()
                          ? std::string()
                          : answer_block(fmt);
  std::string text =
      t.preamble + t.guidelines + t.action_pattern + block + t.footer;
  text = replace_once(text, "{table_str}", serialize_for_prompt(table));
  text = replace_once(text, "{question}", question);
  return text;
}

}  // namespace tqa
