#include "tqa/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace tqa {

namespace {

using nlohmann::json;

std::int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string strip_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() >= suffix.size() &&
      s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    return s.substr(0, s.size() - suffix.size());
  return s;
}

}  // namespace

void BackendConfig::validate() const {
  if (temperature < 0.0 || temperature > 2.0)
    throw RunError("temperature must be in [0, 2]");
  if (retry.max_attempts < 1) throw RunError("retry.max_attempts must be >= 1");
  if (retry.base_backoff_ms <= 0 || retry.max_backoff_ms <= 0 ||
      retry.base_backoff_ms > retry.max_backoff_ms)
    throw RunError("retry backoff bounds must be positive and ordered");
  if (max_context_tokens <= 0 || max_output_tokens <= 0)
    throw RunError("token limits must be positive");
}

std::string finish_reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "?";
}

int backoff_delay_ms(const RetryPolicy& retry, int attempt) {
  double delay = static_cast<double>(retry.base_backoff_ms);
  for (int i = 1; i < attempt && delay < retry.max_backoff_ms; ++i)
    delay *= 2.0;
  return static_cast<int>(
      std::min(delay, static_cast<double>(retry.max_backoff_ms)));
}

std::int64_t estimate_tokens(const std::string& text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

RateLimiter::RateLimiter(double requests_per_sec)
    : rate_(requests_per_sec), tokens_(requests_per_sec > 0 ? 1.0 : 0.0),
      last_refill_us_(now_us()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  for (;;) {
    std::int64_t wait_us = 0;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      std::int64_t now = now_us();
      tokens_ = std::min(
          rate_, tokens_ + rate_ * static_cast<double>(now - last_refill_us_) /
                               1e6);
      last_refill_us_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_us = static_cast<std::int64_t>((1.0 - tokens_) / rate_ * 1e6);
    }
    std::this_thread::sleep_for(std::chrono::microseconds(wait_us + 100));
  }
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.api_key_source.empty()) {
    const char* key = std::getenv(config_.api_key_source.c_str());
    if (key) api_key_ = key;
  }
  limiter_ = std::make_unique<RateLimiter>(config_.requests_per_sec);
}

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
  if (request.prompt.empty()) throw RunError("prompt must be nonempty");
  if (config_.check_context) {
    std::int64_t estimated = estimate_tokens(request.prompt);
    if (estimated > config_.max_context_tokens)
      throw ContextOverflow("prompt is ~" + std::to_string(estimated) +
                            " tokens, limit " +
                            std::to_string(config_.max_context_tokens));
  }

  const std::string path = "/v1/chat/completions";
  std::string base = strip_suffix(config_.endpoint_url, path);
  if (!base.empty() && base.back() == '/') base.pop_back();

  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_output_tokens;
  if (config_.top_p) body["top_p"] = *config_.top_p;
  if (config_.top_k) body["top_k"] = *config_.top_k;
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_.empty())
    headers.emplace("Authorization", "Bearer " + api_key_);

  static thread_local std::mt19937_64 jitter_rng(
      std::random_device{}() ^
      std::hash<std::thread::id>{}(std::this_thread::get_id()));

  auto start = std::chrono::steady_clock::now();
  std::string last_failure = "no attempt made";
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    limiter_->acquire();
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));
    auto res = client.Post(path, headers, payload, "application/json");

    bool retryable = false;
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      retryable = true;
    } else if (res->status == 200) {
      json doc = json::parse(res->body, nullptr, false);
      if (doc.is_discarded() || !doc.contains("choices") ||
          doc["choices"].empty())
        throw NetworkError("malformed completion response body");
      const json& choice = doc["choices"][0];
      CompletionResult result;
      if (choice.contains("message") && choice["message"].contains("content"))
        result.raw_text = choice["message"]["content"].get<std::string>();
      std::string reason = choice.value("finish_reason", "stop");
      if (reason == "stop") result.finish_reason = FinishReason::Stop;
      else if (reason == "length") result.finish_reason = FinishReason::Length;
      else result.finish_reason = FinishReason::Error;
      result.attempt_count = attempt;
      result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      return result;
    } else if (res->status == 401 || res->status == 403) {
      throw AuthError("server returned HTTP " + std::to_string(res->status));
    } else if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      retryable = true;
    } else {
      throw NetworkError("unexpected HTTP " + std::to_string(res->status));
    }

    if (retryable && attempt < config_.retry.max_attempts) {
      int delay = backoff_delay_ms(config_.retry, attempt);
      std::int64_t jitter =
          static_cast<std::int64_t>(jitter_rng() % (delay / 8 + 1));
      std::this_thread::sleep_for(std::chrono::milliseconds(delay + jitter));
    }
  }
  throw NetworkError("retries exhausted after " +
                     std::to_string(config_.retry.max_attempts) +
                     " attempts; last failure: " + last_failure);
}

// ---------------------------------------------------------------------------
// Toy grammar

namespace {

// Matches `prefix` + ... + "?" and returns the interior.
std::optional<std::string> interior(const std::string& q,
                                    const std::string& prefix) {
  if (q.size() <= prefix.size() + 1 || q.back() != '?') return std::nullopt;
  if (q.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  return q.substr(prefix.size(), q.size() - prefix.size() - 1);
}

}  // namespace

ToyQuery parse_toy_question(const std::string& q) {
  ToyQuery query;
  if (auto col = interior(q, "What is the sum of ")) {
    query.kind = ToyQuery::Kind::SumOf;
    query.column = *col;
    return query;
  }
  if (auto col = interior(q, "What is the mean of ")) {
    query.kind = ToyQuery::Kind::MeanOf;
    query.column = *col;
    return query;
  }
  if (auto rest = interior(q, "Which has the greater ")) {
    std::size_t colon = rest->find(": ");
    std::size_t or_pos = rest->find(" or ", colon == std::string::npos
                                              ? 0
                                              : colon + 2);
    if (colon != std::string::npos && or_pos != std::string::npos) {
      query.kind = ToyQuery::Kind::GreaterOf;
      query.column = rest->substr(0, colon);
      query.entity_a = rest->substr(colon + 2, or_pos - colon - 2);
      query.entity_b = rest->substr(or_pos + 4);
      return query;
    }
  }
  if (auto rest = interior(q, "Which ")) {
    for (const char* marker : {" has the maximum ", " has the minimum "}) {
      std::size_t pos = rest->find(marker);
      if (pos == std::string::npos) continue;
      query.kind = marker[10] == 'a' ? ToyQuery::Kind::MaxRow
                                     : ToyQuery::Kind::MinRow;
      query.return_column = rest->substr(0, pos);
      query.column = rest->substr(pos + std::string(marker).size());
      return query;
    }
  }
  if (auto rest = interior(q, "How many rows have ")) {
    std::size_t pos = rest->find(" equal to ");
    if (pos != std::string::npos) {
      query.kind = ToyQuery::Kind::CountWhere;
      query.column = rest->substr(0, pos);
      query.key_value = rest->substr(pos + 10);
      return query;
    }
  }
  if (auto rest = interior(q, "What is the ")) {
    std::size_t where_pos = rest->find(" where ");
    if (where_pos != std::string::npos) {
      std::size_t is_pos = rest->find(" is ", where_pos + 7);
      if (is_pos != std::string::npos) {
        query.kind = ToyQuery::Kind::ValueAt;
        query.return_column = rest->substr(0, where_pos);
        query.key_column = rest->substr(where_pos + 7, is_pos - where_pos - 7);
        query.key_value = rest->substr(is_pos + 4);
        return query;
      }
    }
  }
  throw UnrecognizedToyQuestion("\"" + q + "\" is outside the toy grammar");
}

std::vector<TableOp> plan_toy_query(const Table& table, const ToyQuery& q) {
  switch (q.kind) {
    case ToyQuery::Kind::SumOf:
      return {TableOp::aggregate(q.column, AggregateFn::Sum)};
    case ToyQuery::Kind::MeanOf:
      return {TableOp::aggregate(q.column, AggregateFn::Mean)};
    case ToyQuery::Kind::MaxRow:
    case ToyQuery::Kind::MinRow: {
      AggregateFn fn = q.kind == ToyQuery::Kind::MaxRow ? AggregateFn::Max
                                                        : AggregateFn::Min;
      TableOp first = TableOp::aggregate(q.column, fn);
      std::vector<Cell> extreme = execute_op(table, first);
      TableOp second = TableOp::lookup(
          RowSelector{q.column, render_cell(extreme.at(0))}, q.return_column);
      return {std::move(first), std::move(second)};
    }
    case ToyQuery::Kind::CountWhere:
      return {TableOp::filter_count(q.column, q.key_value)};
    case ToyQuery::Kind::ValueAt:
      return {TableOp::lookup(RowSelector{q.key_column, q.key_value},
                              q.return_column)};
    case ToyQuery::Kind::GreaterOf: {
      if (table.columns.empty()) throw NoMatchingRow("empty table");
      const std::string& entity_col = table.columns[0];
      return {TableOp::compare(RowSelector{entity_col, q.entity_a},
                               RowSelector{entity_col, q.entity_b}, q.column,
                               Relation::Greater)};
    }
  }
  throw UnrecognizedToyQuestion("unhandled toy query kind");
}

std::string toy_answer(const Table& table, const std::string& question) {
  ToyQuery q = parse_toy_question(question);
  std::vector<TableOp> plan = plan_toy_query(table, q);
  std::vector<Cell> result = execute_op(table, plan.back());
  return render_cell(result.at(0));
}

// ---------------------------------------------------------------------------
// Oracle trace synthesis

namespace {

std::string aggregate_fn_name(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::Sum: return "sum";
    case AggregateFn::Mean: return "mean";
    case AggregateFn::Min: return "min";
    case AggregateFn::Max: return "max";
    case AggregateFn::Count: return "count";
  }
  return "?";
}

std::string mini_language(const TableOp& op) {
  switch (op.kind) {
    case TableOp::Kind::Aggregate:
      return "AGGREGATE(" + aggregate_fn_name(op.fn) + ", " + op.column + ")";
    case TableOp::Kind::Lookup:
      return "LOOKUP(" + op.selector.column + "=" + op.selector.value + ", " +
             op.column + ")";
    case TableOp::Kind::Compare:
      return "COMPARE(" + op.selector.value + ", " + op.selector_b.value +
             ", " + op.column + ")";
    case TableOp::Kind::FilterCount:
      return "COUNT(" + op.column + "=" + op.selector.value + ")";
  }
  return "?";
}

std::string op_goal(const TableOp& op) {
  switch (op.kind) {
    case TableOp::Kind::Aggregate:
      return "The query needs the " + aggregate_fn_name(op.fn) +
             " of column \"" + op.column + "\".";
    case TableOp::Kind::Lookup:
      return "The query needs the \"" + op.column +
             "\" value of the row where \"" + op.selector.column + "\" is " +
             op.selector.value + ".";
    case TableOp::Kind::Compare:
      return "The query compares " + op.selector.value + " and " +
             op.selector_b.value + " on column \"" + op.column + "\".";
    case TableOp::Kind::FilterCount:
      return "The query counts rows where \"" + op.column + "\" equals " +
             op.selector.value + ".";
  }
  return "?";
}

std::string op_summary(const TableOp& op) {
  switch (op.kind) {
    case TableOp::Kind::Aggregate:
      return "the " + aggregate_fn_name(op.fn) + " of \"" + op.column + "\"";
    case TableOp::Kind::Lookup:
      return "the \"" + op.column + "\" value where \"" + op.selector.column +
             "\" is " + op.selector.value;
    case TableOp::Kind::Compare:
      return "the comparison of " + op.selector.value + " and " +
             op.selector_b.value + " on \"" + op.column + "\"";
    case TableOp::Kind::FilterCount:
      return "the count of rows where \"" + op.column + "\" equals " +
             op.selector.value;
  }
  return "?";
}

std::string column_list(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ", ";
    out += t.columns[i];
  }
  return out;
}

struct OracleTrace {
  std::string text;
  std::string answer;
};

OracleTrace synthesize(const Table& table, const std::string& question,
                       StrategyId strategy) {
  ToyQuery q = parse_toy_question(question);
  std::vector<TableOp> plan = plan_toy_query(table, q);
  std::vector<std::string> values;
  for (const auto& op : plan)
    values.push_back(render_cell(execute_op(table, op).at(0)));
  std::string answer = values.back();

  std::ostringstream out;
  switch (strategy) {
    case StrategyId::TGN:
      for (std::size_t i = 0; i < plan.size(); ++i) {
        out << "Analyze: " << op_goal(plan[i]) << "\n";
        out << "Execute: " << mini_language(plan[i]) << "\n";
        out << "Validate: The result is " << values[i]
            << ", consistent with the data grid.\n";
      }
      break;
    case StrategyId::PIP: {
      out << "Step 1: The table has columns: " << column_list(table) << ".\n";
      out << "Step 2: The question asks: " << question << "\n";
      out << "Step 3: The relevant rows are the " << table.n_rows()
          << " data rows of the table.\n";
      out << "Step 4: Processing each relevant row once, ";
      for (std::size_t i = 0; i < plan.size(); ++i) {
        if (i) out << "; then ";
        out << op_summary(plan[i]) << " gives " << values[i];
      }
      out << ".\n";
      out << "Step 5: The final answer is " << answer << ".\n";
      break;
    }
    default: {
      out << "The needed values can be read directly from the table. "
          << "Computing ";
      for (std::size_t i = 0; i < plan.size(); ++i) {
        if (i) out << ", then ";
        out << op_summary(plan[i]) << " gives " << values[i];
      }
      out << ".\n";
      break;
    }
  }
  out << "Final Answer: " << answer << "\n";
  return {out.str(), answer};
}

}  // namespace

CompletionResult OracleBackend::complete(const CompletionRequest& request) {
  if (!request.table) throw RunError("oracle backend needs the table");
  OracleTrace trace = synthesize(*request.table, request.question,
                                 request.strategy);
  CompletionResult result;
  result.raw_text = std::move(trace.text);
  result.finish_reason = FinishReason::Stop;
  return result;
}

std::string sloppy_defect_name(SloppyDefect d) {
  switch (d) {
    case SloppyDefect::DropValidate: return "drop_validate";
    case SloppyDefect::WrongMarker: return "wrong_marker";
    case SloppyDefect::NoFinalLine: return "no_final_line";
    case SloppyDefect::OffByTenPercent: return "off_by_ten_percent";
  }
  return "?";
}

std::optional<SloppyDefect> sloppy_defect_from_name(const std::string& name) {
  std::string key = name;
  for (char& c : key)
    if (c == '-') c = '_';
  static const std::vector<SloppyDefect> all = {
      SloppyDefect::DropValidate, SloppyDefect::WrongMarker,
      SloppyDefect::NoFinalLine, SloppyDefect::OffByTenPercent};
  for (SloppyDefect d : all)
    if (sloppy_defect_name(d) == key) return d;
  return std::nullopt;
}

CompletionResult SloppyBackend::complete(const CompletionRequest& request) {
  if (!request.table) throw RunError("sloppy backend needs the table");
  OracleTrace trace = synthesize(*request.table, request.question,
                                 request.strategy);
  const std::string final_line = "Final Answer: " + trace.answer + "\n";

  std::string text = trace.text;
  switch (defect_) {
    case SloppyDefect::NoFinalLine: {
      std::size_t pos = text.rfind(final_line);
      if (pos != std::string::npos) text.erase(pos, final_line.size());
      break;
    }
    case SloppyDefect::WrongMarker: {
      std::size_t pos = text.rfind("Final Answer:");
      if (pos != std::string::npos)
        text = text.substr(0, pos) + "Answer:" + text.substr(pos + 13);
      break;
    }
    case SloppyDefect::DropValidate: {
      std::istringstream in(text);
      std::ostringstream out;
      std::string line;
      while (std::getline(in, line))
        if (line.rfind("Validate:", 0) != 0) out << line << "\n";
      text = out.str();
      break;
    }
    case SloppyDefect::OffByTenPercent: {
      // Numeric answers drift by +9% (inside the 10% tolerance band, outside
      // exact match); text answers gain a hedge suffix. Intermediate
      // Validate lines keep the true values: the failure is confined to the
      // final answer, after correct intermediate computation.
      Cell parsed = infer_cell(trace.answer);
      std::string wrong =
          parsed.kind == Cell::Kind::Number
              ? render_number(parsed.number * 1.09)
              : trace.answer + " (approx.)";
      std::size_t pos = text.rfind(final_line);
      if (pos != std::string::npos)
        text = text.substr(0, pos) + "Final Answer: " + wrong + "\n";
      break;
    }
  }
  CompletionResult result;
  result.raw_text = std::move(text);
  result.finish_reason = FinishReason::Stop;
  return result;
}

}  // namespace tqa
