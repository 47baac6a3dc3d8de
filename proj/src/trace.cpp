#include "tqa/trace.hpp"

#include <algorithm>
#include <cctype>

namespace tqa {

namespace {

bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(s[b])) ++b;
  while (e > b && is_ws(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  bool in_ws = false;
  for (char c : s) {
    if (is_ws(c)) {
      in_ws = true;
      continue;
    }
    if (in_ws && !out.empty()) out.push_back(' ');
    in_ws = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && cur.back() == '\r') cur.pop_back();
  out.push_back(cur);
  return out;
}

struct LineMarker {
  enum class Kind { None, Analyze, Execute, Validate, Step, FinalAnswer };
  Kind kind = Kind::None;
  int step = 0;
  std::string rest;
};

// Classifies a line as a section marker. Tolerates leading whitespace,
// bullets (- * > #, the UTF-8 bullet) and bold markers; keywords match
// case-insensitively and must be followed by a colon.
LineMarker classify_line(const std::string& line) {
  LineMarker none;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '-' || c == '*' || c == '>' ||
        c == '#') {
      ++i;
      continue;
    }
    if (static_cast<unsigned char>(c) == 0xE2 && i + 2 < line.size() &&
        static_cast<unsigned char>(line[i + 1]) == 0x80 &&
        static_cast<unsigned char>(line[i + 2]) == 0xA2) {
      i += 3;  // bullet •
      continue;
    }
    break;
  }

  auto lower_at = [&](std::size_t j) {
    return static_cast<char>(
        std::tolower(static_cast<unsigned char>(line[j])));
  };
  // Matches a keyword at position i; a ' ' in the keyword requires one or
  // more whitespace characters. Advances i past the keyword on success.
  auto match_keyword = [&](const char* kw) -> bool {
    std::size_t j = i;
    for (std::size_t k = 0; kw[k]; ++k) {
      if (kw[k] == ' ') {
        if (j >= line.size() || !(line[j] == ' ' || line[j] == '\t'))
          return false;
        while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
        continue;
      }
      if (j >= line.size() || lower_at(j) != kw[k]) return false;
      ++j;
    }
    i = j;
    return true;
  };
  // After the keyword: optional bold/space decoration, then the colon.
  auto finish_marker = [&](LineMarker::Kind kind, int step) -> LineMarker {
    std::size_t j = i;
    while (j < line.size() && (line[j] == ' ' || line[j] == '\t' ||
                               line[j] == '*'))
      ++j;
    if (j >= line.size() || line[j] != ':') return LineMarker{};
    ++j;
    while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
    if (j + 1 < line.size() && line[j] == '*' && line[j + 1] == '*') {
      j += 2;
      while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
    }
    LineMarker m;
    m.kind = kind;
    m.step = step;
    m.rest = line.substr(j);
    return m;
  };

  if (match_keyword("analyze")) return finish_marker(LineMarker::Kind::Analyze, 0);
  if (match_keyword("execute")) return finish_marker(LineMarker::Kind::Execute, 0);
  if (match_keyword("validate")) return finish_marker(LineMarker::Kind::Validate, 0);
  if (match_keyword("final answer"))
    return finish_marker(LineMarker::Kind::FinalAnswer, 0);
  if (match_keyword("step ")) {
    std::size_t j = i;
    int value = 0;
    while (j < line.size() &&
           std::isdigit(static_cast<unsigned char>(line[j]))) {
      value = value * 10 + (line[j] - '0');
      if (value > 99) return none;
      ++j;
    }
    if (j == i) return none;
    if (value < 1 || value > 9) return none;
    i = j;
    return finish_marker(LineMarker::Kind::Step, value);
  }
  return none;
}

// Appends a continuation line to an open section buffer.
void append_line(std::string* buf, const std::string& line) {
  if (!buf) return;
  if (!buf->empty()) buf->push_back('\n');
  *buf += line;
}

int count_final_answer_markers(const std::vector<std::string>& lines) {
  int n = 0;
  for (const auto& line : lines)
    if (classify_line(line).kind == LineMarker::Kind::FinalAnswer) ++n;
  return n;
}

void add_final_answer_violations(int marker_count,
                                 std::vector<Violation>* violations) {
  if (marker_count == 0)
    violations->push_back(
        {ViolationCode::MissingFinalAnswer, "no \"Final Answer:\" line"});
  else if (marker_count > 1)
    violations->push_back({ViolationCode::MultipleFinalAnswers,
                           std::to_string(marker_count) + " markers found"});
}

// Boundary-aware containment: `value` must occur in `haystack` with
// non-alphanumeric neighbours, and not as a prefix/suffix of a longer
// decimal number (so "8" never grounds against "8.72").
bool contains_value(const std::string& haystack, const std::string& value) {
  std::string h = to_lower(haystack);
  std::string v = to_lower(trim(value));
  if (v.empty()) return false;
  for (std::size_t pos = h.find(v); pos != std::string::npos;
       pos = h.find(v, pos + 1)) {
    bool left_ok = true, right_ok = true;
    if (pos > 0) {
      unsigned char prev = static_cast<unsigned char>(h[pos - 1]);
      if (std::isalnum(prev)) left_ok = false;
      if (prev == '.' && pos >= 2 &&
          std::isdigit(static_cast<unsigned char>(h[pos - 2])))
        left_ok = false;
    }
    std::size_t end = pos + v.size();
    if (end < h.size()) {
      unsigned char next = static_cast<unsigned char>(h[end]);
      if (std::isalnum(next)) right_ok = false;
      if (next == '.' && end + 1 < h.size() &&
          std::isdigit(static_cast<unsigned char>(h[end + 1])))
        right_ok = false;
    }
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace

std::string violation_code_name(ViolationCode c) {
  switch (c) {
    case ViolationCode::MissingSection: return "MissingSection";
    case ViolationCode::OutOfOrder: return "OutOfOrder";
    case ViolationCode::MissingFinalAnswer: return "MissingFinalAnswer";
    case ViolationCode::DuplicateStep: return "DuplicateStep";
    case ViolationCode::EmptyTrace: return "EmptyTrace";
    case ViolationCode::MultipleFinalAnswers: return "MultipleFinalAnswers";
  }
  return "?";
}

std::optional<ViolationCode> violation_code_from_name(const std::string& name) {
  static const std::vector<ViolationCode> all = {
      ViolationCode::MissingSection,     ViolationCode::OutOfOrder,
      ViolationCode::MissingFinalAnswer, ViolationCode::DuplicateStep,
      ViolationCode::EmptyTrace,         ViolationCode::MultipleFinalAnswers};
  for (ViolationCode c : all)
    if (violation_code_name(c) == name) return c;
  return std::nullopt;
}

bool ComplianceReport::has(ViolationCode c) const {
  return count(c) > 0;
}

int ComplianceReport::count(ViolationCode c) const {
  int n = 0;
  for (const auto& v : violations)
    if (v.code == c) ++n;
  return n;
}

std::pair<TgnTrace, ComplianceReport> parse_tgn_trace(const std::string& raw) {
  TgnTrace trace;
  ComplianceReport report;
  report.strategy = StrategyId::TGN;

  std::vector<std::string> lines = split_lines(raw);
  std::string* open_section = nullptr;
  std::string sink;  // receives duplicate-section text
  std::string trailing;
  int max_rank = 0;  // A=1, E=2, V=3 within the current cycle

  auto open_in_current = [&](std::optional<std::string>* slot, int rank,
                             const char* name, const std::string& rest) {
    std::size_t cycle_idx = trace.cycles.size() - 1;
    if (slot->has_value()) {
      report.violations.push_back(
          {ViolationCode::DuplicateStep,
           "cycle " + std::to_string(cycle_idx) + ": duplicate " + name});
      sink.clear();
      sink = rest;
      open_section = &sink;
      return;
    }
    if (rank < max_rank)
      report.violations.push_back(
          {ViolationCode::OutOfOrder,
           "cycle " + std::to_string(cycle_idx) + ": " + name +
               " appears out of order"});
    max_rank = std::max(max_rank, rank);
    *slot = rest;
    open_section = &slot->value();
  };

  for (const auto& line : lines) {
    LineMarker m = classify_line(line);
    switch (m.kind) {
      case LineMarker::Kind::Analyze:
        trace.cycles.emplace_back();
        max_rank = 0;
        open_in_current(&trace.cycles.back().analyze, 1, "Analyze", m.rest);
        break;
      case LineMarker::Kind::Execute:
        if (trace.cycles.empty()) {
          trace.cycles.emplace_back();
          max_rank = 0;
        }
        open_in_current(&trace.cycles.back().execute, 2, "Execute", m.rest);
        break;
      case LineMarker::Kind::Validate:
        if (trace.cycles.empty()) {
          trace.cycles.emplace_back();
          max_rank = 0;
        }
        open_in_current(&trace.cycles.back().validate, 3, "Validate", m.rest);
        break;
      case LineMarker::Kind::FinalAnswer:
        open_section = nullptr;
        append_line(&trailing, line);
        break;
      case LineMarker::Kind::Step:
      case LineMarker::Kind::None:
        if (open_section)
          append_line(open_section, line);
        else
          append_line(&trailing, line);
        break;
    }
  }
  trace.trailing_text = trailing;

  for (std::size_t i = 0; i < trace.cycles.size(); ++i) {
    const TgnCycle& c = trace.cycles[i];
    auto missing = [&](const char* name) {
      report.violations.push_back(
          {ViolationCode::MissingSection,
           "cycle " + std::to_string(i) + ": missing " + name});
    };
    if (!c.analyze) missing("Analyze");
    if (!c.execute) missing("Execute");
    if (!c.validate) missing("Validate");
  }
  if (trace.cycles.empty())
    report.violations.push_back({ViolationCode::EmptyTrace, "no cycles found"});
  add_final_answer_violations(count_final_answer_markers(lines),
                              &report.violations);
  report.n_cycles = static_cast<int>(trace.cycles.size());
  return {std::move(trace), std::move(report)};
}

std::pair<PipTrace, ComplianceReport> parse_pip_trace(const std::string& raw) {
  PipTrace trace;
  ComplianceReport report;
  report.strategy = StrategyId::PIP;

  std::vector<std::string> lines = split_lines(raw);
  std::string* open_section = nullptr;
  std::string sink;
  std::string trailing;
  int max_step_seen = 0;

  for (const auto& line : lines) {
    LineMarker m = classify_line(line);
    if (m.kind == LineMarker::Kind::Step) {
      if (m.step > 5) {
        report.violations.push_back(
            {ViolationCode::OutOfOrder,
             "Step " + std::to_string(m.step) + " outside the expected 1-5"});
        sink = m.rest;
        open_section = &sink;
        continue;
      }
      if (trace.steps.count(m.step)) {
        report.violations.push_back(
            {ViolationCode::DuplicateStep,
             "Step " + std::to_string(m.step) + " repeated, first kept"});
        sink = m.rest;
        open_section = &sink;
        continue;
      }
      if (m.step < max_step_seen)
        report.violations.push_back(
            {ViolationCode::OutOfOrder,
             "Step " + std::to_string(m.step) + " after Step " +
                 std::to_string(max_step_seen)});
      max_step_seen = std::max(max_step_seen, m.step);
      auto [it, _] = trace.steps.emplace(m.step, m.rest);
      open_section = &it->second;
    } else if (m.kind == LineMarker::Kind::FinalAnswer) {
      open_section = nullptr;
      append_line(&trailing, line);
    } else {
      if (open_section)
        append_line(open_section, line);
      else
        append_line(&trailing, line);
    }
  }
  trace.trailing_text = trailing;

  for (int k = 1; k <= 5; ++k) {
    if (!trace.steps.count(k))
      report.violations.push_back({ViolationCode::MissingSection,
                                   "missing Step " + std::to_string(k)});
    else
      report.steps_present.insert(k);
  }
  if (trace.steps.empty())
    report.violations.push_back({ViolationCode::EmptyTrace, "no steps found"});
  add_final_answer_violations(count_final_answer_markers(lines),
                              &report.violations);
  return {std::move(trace), std::move(report)};
}

std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> items;
  std::string cur;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(') ++depth;
    if (c == ')' && depth > 0) --depth;
    if (c == ',' && depth == 0) {
      bool grouping =
          i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
          i + 3 < s.size() &&
          std::isdigit(static_cast<unsigned char>(s[i + 1])) &&
          std::isdigit(static_cast<unsigned char>(s[i + 2])) &&
          std::isdigit(static_cast<unsigned char>(s[i + 3])) &&
          (i + 4 >= s.size() ||
           !std::isdigit(static_cast<unsigned char>(s[i + 4])));
      if (!grouping) {
        items.push_back(cur);
        cur.clear();
        continue;
      }
    }
    cur.push_back(c);
  }
  items.push_back(cur);
  return items;
}

std::string normalize_entity(const std::string& s) {
  std::string t = to_lower(collapse_ws(trim(s)));
  for (;;) {
    if (t.size() >= 2 &&
        ((t.front() == '"' && t.back() == '"') ||
         (t.front() == '\'' && t.back() == '\''))) {
      t = trim(t.substr(1, t.size() - 2));
      continue;
    }
    if (!t.empty() && t.back() == '.') {
      t.pop_back();
      while (!t.empty() && is_ws(t.back())) t.pop_back();
      continue;
    }
    break;
  }
  Cell c = infer_cell(t);
  if (c.kind == Cell::Kind::Number) return render_number(c.number);
  return t;
}

std::pair<ExtractedAnswer, std::vector<Violation>> extract_final_answer(
    const std::string& raw, AnswerFormat fmt) {
  ExtractedAnswer answer;
  answer.kind = fmt == AnswerFormat::Sentence ? ExtractedAnswer::Kind::Sentence
                                              : ExtractedAnswer::Kind::EntityList;
  std::vector<Violation> violations;

  std::vector<std::string> lines = split_lines(raw);
  int marker_count = 0;
  std::size_t last_idx = 0;
  std::string last_rest;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    LineMarker m = classify_line(lines[i]);
    if (m.kind == LineMarker::Kind::FinalAnswer) {
      ++marker_count;
      last_idx = i;
      last_rest = m.rest;
    }
  }
  add_final_answer_violations(marker_count, &violations);
  if (marker_count == 0) return {std::move(answer), std::move(violations)};

  std::string rest = trim(last_rest);
  if (rest.size() >= 2 && rest.compare(rest.size() - 2, 2, "**") == 0)
    rest = trim(rest.substr(0, rest.size() - 2));

  if (answer.kind == ExtractedAnswer::Kind::EntityList) {
    answer.raw = rest;
    for (const auto& item : split_top_level(rest)) {
      std::string norm = normalize_entity(item);
      if (!norm.empty()) answer.entities.push_back(std::move(norm));
    }
  } else {
    std::string sentence = rest;
    for (std::size_t i = last_idx + 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) break;
      sentence.push_back('\n');
      sentence += lines[i];
    }
    answer.sentence = trim(sentence);
    answer.raw = answer.sentence;
  }
  return {std::move(answer), std::move(violations)};
}

std::optional<TableOp> parse_grounding_op(const std::string& section) {
  std::vector<std::string> lines = split_lines(section);
  if (lines.empty()) return std::nullopt;
  std::string s = trim(lines[0]);
  std::size_t open = s.find('(');
  if (open == std::string::npos || s.empty() || s.back() != ')')
    return std::nullopt;
  std::string name = s.substr(0, open);
  std::string args_text = s.substr(open + 1, s.size() - open - 2);
  std::vector<std::string> args;
  for (auto& a : split_top_level(args_text)) args.push_back(trim(a));

  if (name == "AGGREGATE" && args.size() == 2) {
    AggregateFn fn;
    if (args[0] == "sum") fn = AggregateFn::Sum;
    else if (args[0] == "mean") fn = AggregateFn::Mean;
    else if (args[0] == "min") fn = AggregateFn::Min;
    else if (args[0] == "max") fn = AggregateFn::Max;
    else if (args[0] == "count") fn = AggregateFn::Count;
    else return std::nullopt;
    return TableOp::aggregate(args[1], fn);
  }
  if (name == "LOOKUP" && args.size() == 2) {
    std::size_t eq = args[0].find('=');
    if (eq == std::string::npos) return std::nullopt;
    RowSelector sel{trim(args[0].substr(0, eq)), trim(args[0].substr(eq + 1))};
    return TableOp::lookup(std::move(sel), args[1]);
  }
  if (name == "COMPARE" && args.size() == 3) {
    // Entities address the leftmost column; the executor fills it in.
    return TableOp::compare(RowSelector{"", args[0]}, RowSelector{"", args[1]},
                            args[2], Relation::Greater);
  }
  if (name == "COUNT" && args.size() == 1) {
    std::size_t eq = args[0].find('=');
    if (eq == std::string::npos) return std::nullopt;
    return TableOp::filter_count(trim(args[0].substr(0, eq)),
                                 trim(args[0].substr(eq + 1)));
  }
  return std::nullopt;
}

std::vector<GroundingResult> ground_execute_steps(const TgnTrace& t,
                                                  const Table& table) {
  std::vector<GroundingResult> results;
  for (std::size_t i = 0; i < t.cycles.size(); ++i) {
    const TgnCycle& cycle = t.cycles[i];
    GroundingResult r;
    r.cycle_index = static_cast<int>(i);
    if (!cycle.execute) {
      r.status = GroundingStatus::Unparseable;
      r.detail = "no Execute section";
      results.push_back(std::move(r));
      continue;
    }
    std::optional<TableOp> op = parse_grounding_op(*cycle.execute);
    if (!op) {
      r.status = GroundingStatus::Unparseable;
      r.detail = "Execute text does not match the grounding mini-language";
      results.push_back(std::move(r));
      continue;
    }
    if (op->kind == TableOp::Kind::Compare && !table.columns.empty()) {
      op->selector.column = table.columns[0];
      op->selector_b.column = table.columns[0];
    }
    std::string value;
    try {
      std::vector<Cell> cells = execute_op(table, *op);
      value = cells.empty() ? "" : render_cell(cells[0]);
    } catch (const Error& e) {
      r.status = GroundingStatus::Ungrounded;
      r.detail = e.what();
      results.push_back(std::move(r));
      continue;
    }
    std::string haystack = cycle.validate.value_or("");
    if (i + 1 == t.cycles.size()) {
      haystack.push_back('\n');
      haystack += t.trailing_text;
    }
    if (contains_value(haystack, value)) {
      r.status = GroundingStatus::Grounded;
    } else {
      r.status = GroundingStatus::Ungrounded;
      r.detail = "recomputed value \"" + value + "\" not found";
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::string grounding_status_name(GroundingStatus s) {
  switch (s) {
    case GroundingStatus::Grounded: return "grounded";
    case GroundingStatus::Ungrounded: return "ungrounded";
    case GroundingStatus::Unparseable: return "unparseable";
  }
  return "?";
}

}  // namespace tqa
