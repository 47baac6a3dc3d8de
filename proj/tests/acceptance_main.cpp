// Acceptance suite: runs each release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "support/toy_suite.hpp"
#include "tqa/backend.hpp"
#include "tqa/metrics.hpp"
#include "tqa/runner.hpp"
#include "tqa/strategy.hpp"
#include "tqa/trace.hpp"

using namespace tqa;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string golden(const std::string& name) {
  return read_file(std::string(TQA_TEST_GOLDEN_DIR) + "/" + name);
}

std::string suite_path() {
  static std::string path = testsupport::write_temp_file(
      "acceptance_suite.jsonl", testsupport::toy_suite_jsonl());
  return path;
}

std::string fresh_out(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "tqa-tests" / "acceptance";
  fs::create_directories(dir);
  fs::path path = dir / name;
  fs::remove(path);
  fs::remove(fs::path(path.string() + ".manifest.json"));
  return path.string();
}

RunOptions suite_run(const std::string& out_name, StrategyId strategy,
                     const std::string& backend = "oracle") {
  RunOptions options;
  options.dataset_path = suite_path();
  options.mapping = "tablebench";
  options.strategy = strategy;
  options.backend = backend;
  options.out_path = fresh_out(out_name);
  options.frozen_clock = true;
  options.concurrency = 4;
  return options;
}

std::vector<nlohmann::json> read_records(const std::string& path) {
  std::vector<nlohmann::json> records;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) records.push_back(nlohmann::json::parse(line));
  return records;
}

// --- independent oracles -----------------------------------------------

int lcs_brute(const std::vector<std::string>& a,
              const std::vector<std::string>& b) {
  std::vector<std::vector<int>> memo(a.size() + 1,
                                     std::vector<int>(b.size() + 1, -1));
  std::function<int(std::size_t, std::size_t)> go =
      [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size() || j == b.size()) return 0;
    int& m = memo[i][j];
    if (m >= 0) return m;
    if (a[i] == b[j]) return m = 1 + go(i + 1, j + 1);
    return m = std::max(go(i + 1, j), go(i, j + 1));
  };
  return go(0, 0);
}

struct ExhaustiveAlignment {
  const std::vector<std::string>& pred;
  const std::vector<std::string>& ref;
  std::vector<int> assignment;
  std::vector<bool> used;
  int best_matches = 0;
  int best_chunks = 0;

  ExhaustiveAlignment(const std::vector<std::string>& p,
                      const std::vector<std::string>& r)
      : pred(p), ref(r), assignment(p.size(), -1), used(r.size(), false) {}

  void consider() {
    int matches = 0, chunks = 0, prev = -5;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (assignment[i] < 0) {
        prev = -5;
        continue;
      }
      ++matches;
      if (assignment[i] != prev + 1) ++chunks;
      prev = assignment[i];
    }
    if (matches > best_matches ||
        (matches == best_matches && chunks < best_chunks)) {
      best_matches = matches;
      best_chunks = chunks;
    }
  }

  void go(std::size_t pos) {
    if (pos == pred.size()) {
      consider();
      return;
    }
    assignment[pos] = -1;
    go(pos + 1);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used[j] || ref[j] != pred[pos]) continue;
      used[j] = true;
      assignment[pos] = static_cast<int>(j);
      go(pos + 1);
      assignment[pos] = -1;
      used[j] = false;
    }
  }
};

std::vector<std::string> random_tokens(std::mt19937_64& rng,
                                       std::size_t max_len, int vocabulary) {
  std::vector<std::string> t;
  std::size_t len = rng() % (max_len + 1);
  for (std::size_t i = 0; i < len; ++i)
    t.push_back("w" + std::to_string(rng() % vocabulary));
  return t;
}

// --- criteria ------------------------------------------------------------

Check template_fidelity() {
  Check c;
  Table t = testsupport::fixture_table_2x2();
  std::string question = "What is the sum of gold?";
  std::string pip = render_prompt(builtin_template(StrategyId::PIP), t,
                                  question, AnswerFormat::EntityList);
  std::string tgn = render_prompt(builtin_template(StrategyId::TGN), t,
                                  question, AnswerFormat::EntityList);
  c.expect(pip == golden("pip_prompt.txt"), "PIP prompt differs from golden");
  c.expect(tgn == golden("tgn_prompt.txt"), "TGN prompt differs from golden");
  c.expect(pip.find("Step 1: Identify the table columns and their meaning.") !=
               std::string::npos,
           "PIP schema-identification line missing");
  c.expect(tgn.find("repeat Analyze - Execute - Validate as needed") !=
               std::string::npos,
           "TGN repeat instruction missing");
  return c;
}

Check metric_oracle_equivalence() {
  Check c;
  std::mt19937_64 rng(4001);
  for (int compared = 0; compared < 1000;) {
    auto a = random_tokens(rng, 12, 5);
    auto b = random_tokens(rng, 12, 5);
    if (a.empty() || b.empty()) continue;
    ++compared;
    int lcs = lcs_brute(a, b);
    double p = static_cast<double>(lcs) / a.size();
    double r = static_cast<double>(lcs) / b.size();
    double expected = lcs == 0 ? 0.0 : 2 * p * r / (p + r);
    if (rouge_l(a, b) != expected) {
      c.expect(false, "ROUGE-L LCS diverges from brute force at pair " +
                          std::to_string(compared));
      break;
    }
  }
  for (int i = 0; i < 400; ++i) {
    auto a = random_tokens(rng, 8, 3);
    auto b = random_tokens(rng, 8, 3);
    int m = 0;
    int chunks = meteor_alignment(a, b, &m);
    ExhaustiveAlignment oracle(a, b);
    oracle.go(0);
    if (m != oracle.best_matches ||
        (m > 0 && chunks != oracle.best_chunks)) {
      c.expect(false, "METEOR alignment diverges from exhaustive search at "
                      "pair " +
                          std::to_string(i));
      break;
    }
  }
  return c;
}

Check metric_fixtures() {
  Check c;
  double r = rouge_l(tokenize("police killed the gunman"),
                     tokenize("police kill the gunman"));
  c.expect(std::abs(r - 0.75) <= 1e-9, "rouge_l fixture != 0.75");
  c.expect(em_with_error_10({"109"}, {"100"}) == 1, "109 vs 100 must pass");
  c.expect(em_with_error_10({"111"}, {"100"}) == 0, "111 vs 100 must fail");
  std::vector<std::vector<std::string>> same = {
      {"the", "cat", "sat", "on", "the", "mat"}};
  c.expect(std::abs(bleu(same, same) - 1.0) <= 1e-9,
           "perfect-match BLEU != 1.0");
  return c;
}

Check oracle_end_to_end() {
  Check c;
  for (StrategyId s : {StrategyId::TGN, StrategyId::PIP}) {
    RunOptions options =
        suite_run(std::string("e2e_") + strategy_name(s) + ".jsonl", s);
    RunSummary summary = run(options);
    c.expect(summary.n_instances == testsupport::kToySuiteSize,
             "suite size mismatch");
    c.expect(summary.n_backend_errors == 0, "backend errors in oracle run");
    AggregateReport agg =
        score(options.out_path, options.dataset_path, "tablebench");
    c.expect(std::abs(agg.overall_mean - 1.0) <= 1e-12,
             std::string(strategy_name(s)) + " overall EM != 1.000");
    TraceValidationSummary traces = validate_traces(options.out_path);
    c.expect(traces.violation_counts.empty(),
             std::string(strategy_name(s)) + " run has violations");
    if (s == StrategyId::TGN) {
      c.expect(traces.grounding_counts.count("ungrounded") == 0 &&
                   traces.grounding_counts.count("unparseable") == 0 &&
                   traces.grounding_counts.at("grounded") > 0,
               "not every TGN Execute step grounded");
    }
  }
  return c;
}

Check ablation_plumbing() {
  Check c;
  auto lines_of = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == '\n') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };
  auto removed_lines = [&](StrategyId base, AblationId a) {
    auto base_lines = lines_of(builtin_template(base).text());
    auto abl_lines = lines_of(ablated_template(base, a).text());
    std::vector<std::string> removed;
    auto it = abl_lines.begin();
    for (const auto& line : base_lines) {
      if (it != abl_lines.end() && *it == line)
        ++it;
      else
        removed.push_back(line);
    }
    return std::make_pair(removed, it == abl_lines.end());
  };

  {
    auto [removed, subsequence] =
        removed_lines(StrategyId::TGN, AblationId::TgnStage1);
    c.expect(subsequence, "tgn-stage1 is not a line-subsequence of the base");
    c.expect(removed.size() == 3 && removed[0].rfind("Execute:", 0) == 0 &&
                 removed[1].rfind("Validate:", 0) == 0 &&
                 removed[2].rfind("... (repeat", 0) == 0,
             "tgn-stage1 deletions differ from the rule");
  }
  {
    auto [removed, subsequence] =
        removed_lines(StrategyId::TGN, AblationId::TgnStage2);
    c.expect(subsequence && removed.size() == 1 &&
                 removed[0].rfind("Validate:", 0) == 0,
             "tgn-stage2 deletions differ from the rule");
  }
  // PIP ablations renumber, so check the surviving step texts directly.
  auto step_lines = [&](AblationId a) {
    std::vector<std::string> steps;
    for (const auto& line :
         lines_of(ablated_template(StrategyId::PIP, a).action_pattern))
      if (line.rfind("Step ", 0) == 0) steps.push_back(line);
    return steps;
  };
  c.expect(step_lines(AblationId::PipCase1) ==
               std::vector<std::string>{
                   "Step 1: Identify the question and restate the question "
                   "in your own words.",
                   "Step 2: Extract relevant rows from the table in a "
                   "sequence.",
                   "Step 3: Provide the final answer."},
           "pip-case1 steps differ from the rule");
  c.expect(step_lines(AblationId::PipCase2) ==
               std::vector<std::string>{
                   "Step 1: Identify the table columns and their meaning.",
                   "Step 2: Identify the question and restate the question "
                   "in your own words.",
                   "Step 3: Provide the final answer."},
           "pip-case2 steps differ from the rule");

  for (AblationId a : {AblationId::TgnStage1, AblationId::TgnStage2,
                       AblationId::PipCase1, AblationId::PipCase2}) {
    RunOptions options = suite_run(
        std::string("abl_") + ablation_name(a) + ".jsonl", ablation_base(a));
    options.ablation = a;
    run(options);
    AggregateReport agg =
        score(options.out_path, options.dataset_path, "tablebench");
    c.expect(std::abs(agg.overall_mean - 1.0) <= 1e-12,
             std::string(ablation_name(a)) + " oracle run not exact");
  }
  return c;
}

Check error_mode_detection() {
  Check c;
  const int n = testsupport::kToySuiteSize;

  auto run_defect = [&](const std::string& defect) {
    RunOptions options = suite_run("defect_" + defect + ".jsonl",
                                   StrategyId::TGN, "sloppy:" + defect);
    run(options);
    return options.out_path;
  };

  {
    auto records = read_records(run_defect("drop_validate"));
    int detected = 0;
    for (const auto& rec : records)
      for (const auto& v : rec["compliance"]["violations"])
        if (v["code"] == "MissingSection") {
          ++detected;
          break;
        }
    c.expect(detected == n, "drop_validate recall below 100%");
  }
  for (const std::string defect : {"no_final_line", "wrong_marker"}) {
    auto records = read_records(run_defect(defect));
    int detected = 0;
    for (const auto& rec : records)
      for (const auto& v : rec["compliance"]["violations"])
        if (v["code"] == "MissingFinalAnswer") {
          ++detected;
          break;
        }
    c.expect(detected == n, defect + " recall below 100%");
  }
  {
    auto records = read_records(run_defect("off_by_ten_percent"));
    int em_wrong = 0, tolerant_categories = 0, tolerant_pass = 0;
    for (const auto& rec : records) {
      if (rec["scores"]["em"].get<double>() == 0.0) ++em_wrong;
      std::string subtype = rec["subtype"].get<std::string>();
      if (subtype == "DA-C" || subtype == "DA-Tr" || subtype == "DA-St") {
        ++tolerant_categories;
        if (rec["scores"]["em_with_error_10"].get<double>() == 1.0)
          ++tolerant_pass;
      }
    }
    c.expect(em_wrong == n, "off_by_ten_percent EM recall below 100%");
    c.expect(tolerant_categories > 0, "suite has no numeric-tolerance rows");
    c.expect(tolerant_pass == tolerant_categories,
             "off_by_ten_percent rejected by the 10% tolerance");
  }
  return c;
}

Check aggregation_arithmetic() {
  Check c;
  std::vector<std::pair<Category, InstanceScore>> scores;
  for (int i = 0; i < 96; ++i) {
    InstanceScore s;
    s.values[kMetricEm] = i < 82 ? 1.0 : 0.0;
    s.applied_metrics = {kMetricEm};
    s.primary_metric = kMetricEm;
    scores.emplace_back(
        Category{Task::FactChecking, i % 2 ? "FC-MB" : "FC-MH"}, s);
  }
  AggregateReport agg = aggregate(scores);
  c.expect(render_report_text(agg, ReportLayout::Overall) == "overall  85.42\n",
           "overall line is not \"overall  85.42\"");

  int n_from_subtypes = 0;
  double weighted = 0.0;
  for (const auto& s : agg.subtypes) {
    n_from_subtypes += s.n;
    weighted += s.primary_mean * s.n;
  }
  c.expect(n_from_subtypes == agg.n_total, "subtype n identity broken");
  c.expect(std::abs(agg.overall_mean - weighted / agg.n_total) <= 1e-12,
           "overall micro-mean identity broken");
  int n_from_tasks = 0;
  for (const auto& t : agg.tasks) n_from_tasks += t.n;
  c.expect(n_from_tasks == agg.n_total, "task n identity broken");
  return c;
}

Check determinism_and_resume() {
  Check c;
  RunOptions k1 = suite_run("det_k1.jsonl", StrategyId::TGN);
  k1.concurrency = 1;
  run(k1);
  RunOptions k8 = suite_run("det_k8.jsonl", StrategyId::TGN);
  k8.concurrency = 8;
  run(k8);
  c.expect(read_file(k1.out_path) == read_file(k8.out_path),
           "concurrency 1 vs 8 results differ");

  RunOptions resumable = suite_run("det_resume.jsonl", StrategyId::TGN);
  run(resumable);
  std::string full = read_file(resumable.out_path);
  {
    std::istringstream in(full);
    std::ostringstream head;
    std::string line;
    for (int i = 0; i < 20 && std::getline(in, line); ++i) head << line << "\n";
    std::ofstream out(resumable.out_path, std::ios::binary | std::ios::trunc);
    out << head.str();
  }
  run(resumable);
  c.expect(read_file(resumable.out_path) == full,
           "resumed output differs from uninterrupted output");
  return c;
}

Check parser_totality() {
  Check c;
  std::mt19937_64 rng(31337);
  try {
    for (int i = 0; i < 10000; ++i) {
      std::size_t len = rng() % 256;
      std::string s;
      s.reserve(len);
      for (std::size_t k = 0; k < len; ++k)
        s.push_back(static_cast<char>(rng() % 256));
      parse_tgn_trace(s);
      parse_pip_trace(s);
      extract_final_answer(s, AnswerFormat::EntityList);
      extract_final_answer(s, AnswerFormat::Sentence);
    }
  } catch (...) {
    c.expect(false, "a parser threw on fuzz input");
  }
  return c;
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Check()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"template-fidelity", 1.0, template_fidelity},
      {"metric-oracle-equivalence", 30.0, metric_oracle_equivalence},
      {"metric-fixtures", 1.0, metric_fixtures},
      {"oracle-end-to-end", 5.0, oracle_end_to_end},
      {"ablation-plumbing", 5.0, ablation_plumbing},
      {"error-mode-detection", 5.0, error_mode_detection},
      {"aggregation-arithmetic", 1.0, aggregation_arithmetic},
      {"determinism-and-resume", 10.0, determinism_and_resume},
      {"parser-totality", 30.0, parser_totality},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criterion.body();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed > criterion.budget_seconds) {
      c.ok = false;
      if (c.detail.empty())
        c.detail = "exceeded " + std::to_string(criterion.budget_seconds) +
                   "s budget";
    }
    std::printf("[%s] %-28s (%.2fs)%s%s\n", c.ok ? "PASS" : "FAIL",
                criterion.name, elapsed, c.detail.empty() ? "" : " — ",
                c.detail.c_str());
    if (!c.ok) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
