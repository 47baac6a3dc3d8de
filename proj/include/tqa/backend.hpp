#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tqa/error.hpp"
#include "tqa/strategy.hpp"
#include "tqa/table.hpp"

namespace tqa {

struct RetryPolicy {
  int max_attempts = 3;
  int base_backoff_ms = 250;
  int max_backoff_ms = 4000;
};

struct BackendConfig {
  std::string endpoint_url = "http://localhost:8000";
  std::string model_name = "default";
  double temperature = 0.7;
  int max_context_tokens = 8000;
  int max_output_tokens = 2048;
  int timeout_ms = 120000;
  RetryPolicy retry;
  std::string api_key_source = "TQA_API_KEY";
  std::optional<double> top_p;  // sent only when set; server defaults otherwise
  std::optional<int> top_k;
  double requests_per_sec = 0.0;  // 0 disables rate limiting
  bool check_context = true;      // chars/4 context gate, advisory

  void validate() const;  // throws on out-of-range fields
};

enum class FinishReason { Stop, Length, Error };

std::string finish_reason_name(FinishReason r);

struct CompletionResult {
  std::string raw_text;
  FinishReason finish_reason = FinishReason::Stop;
  std::int64_t latency_ms = 0;
  int attempt_count = 1;
};

/// What a backend needs to answer: the rendered prompt for networked
/// backends, the structured question for the scripted ones.
struct CompletionRequest {
  std::string prompt;
  const Table* table = nullptr;
  std::string question;
  StrategyId strategy = StrategyId::DP;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Nominal (jitter-free) backoff delay before retry `attempt` (1-based):
/// base * 2^(attempt-1), capped at max_backoff_ms. Non-decreasing.
int backoff_delay_ms(const RetryPolicy& retry, int attempt);

/// chars/4 token estimate used by the advisory context gate.
std::int64_t estimate_tokens(const std::string& text);

/// Thread-safe token bucket; acquire() blocks until a slot is available.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_sec);
  void acquire();

 private:
  double rate_;
  double tokens_;
  std::int64_t last_refill_us_;
  std::mutex mutex_;
};

/// Client for OpenAI-compatible chat-completions endpoints. Sends one user
/// message; retries 429/5xx/transport failures with exponential backoff and
/// jitter; 401/403 fail immediately (AuthError). Safe to call concurrently.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(BackendConfig config);
  CompletionResult complete(const CompletionRequest& request) override;
  std::string name() const override { return "http"; }

  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  std::string api_key_;
  std::unique_ptr<RateLimiter> limiter_;
};

// ---------------------------------------------------------------------------
// Toy question grammar for the scripted backends.

struct ToyQuery {
  enum class Kind {
    SumOf,
    MeanOf,
    MaxRow,
    MinRow,
    CountWhere,
    ValueAt,
    GreaterOf
  };
  Kind kind = Kind::SumOf;
  std::string column;         // aggregated / compared / counted column
  std::string return_column;  // MaxRow / MinRow / ValueAt
  std::string key_column;     // ValueAt
  std::string key_value;      // ValueAt / CountWhere
  std::string entity_a;       // GreaterOf
  std::string entity_b;       // GreaterOf
};

/// Parses the fixed toy grammar:
///   "What is the sum of <col>?" / "What is the mean of <col>?"
///   "Which <rc> has the maximum <col>?" / "... minimum ..."
///   "How many rows have <col> equal to <val>?"
///   "What is the <rc> where <kc> is <val>?"
///   "Which has the greater <col>: <a> or <b>?"
/// Throws UnrecognizedToyQuestion.
ToyQuery parse_toy_question(const std::string& q);

/// The grounded execution plan for a toy query: one or two table operations
/// whose final result is the answer.
std::vector<TableOp> plan_toy_query(const Table& table, const ToyQuery& q);

/// The exact answer string for a toy query, computed via execute_op.
std::string toy_answer(const Table& table, const std::string& question);

/// Synthesizes a fully compliant trace for the strategy with the correct
/// final answer: Analyze/Execute/Validate cycles whose Execute lines use
/// the grounding mini-language for TGN, Steps 1-5 for PIP, minimal free
/// text otherwise. Deterministic fixed wording.
class OracleBackend : public CompletionBackend {
 public:
  CompletionResult complete(const CompletionRequest& request) override;
  std::string name() const override { return "oracle"; }
};

enum class SloppyDefect {
  DropValidate,
  WrongMarker,
  NoFinalLine,
  OffByTenPercent
};

std::string sloppy_defect_name(SloppyDefect d);
std::optional<SloppyDefect> sloppy_defect_from_name(const std::string& name);

/// Oracle output perturbed by exactly one named defect, reproducing the
/// failure modes the compliance checker and scorer must detect.
class SloppyBackend : public CompletionBackend {
 public:
  explicit SloppyBackend(SloppyDefect defect) : defect_(defect) {}
  CompletionResult complete(const CompletionRequest& request) override;
  std::string name() const override {
    return "sloppy:" + sloppy_defect_name(defect_);
  }

 private:
  SloppyDefect defect_;
};

}  // namespace tqa
