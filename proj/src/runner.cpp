#include "tqa/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace tqa {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string iso_timestamp(bool frozen) {
  if (frozen) return "1970-01-01T00:00:00Z";
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string format_x100(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << value * 100.0;
  return out.str();
}

struct ResolvedRun {
  StrategyId strategy;                  // base strategy (parsing/oracle key)
  std::optional<AblationId> ablation;   // template variant
  PromptTemplate prompt_template;
  std::string template_source;          // "builtin" | "ablated" | file path
  AnswerFormat answer_format;
};

ResolvedRun resolve_run(const RunOptions& options,
                        const FieldMapping& mapping) {
  ResolvedRun r{};
  if (options.ablation) {
    r.ablation = options.ablation;
    r.strategy = ablation_base(*options.ablation);
    if (options.strategy && *options.strategy != r.strategy)
      throw MismatchedAblation(ablation_name(*options.ablation) +
                               " does not apply to " +
                               strategy_name(*options.strategy));
  } else if (options.strategy) {
    r.strategy = *options.strategy;
  } else {
    throw RunError("no strategy selected");
  }

  if (!options.template_dir.empty()) {
    if (auto t = load_template_override(options.template_dir, r.strategy)) {
      r.prompt_template = *t;
      r.template_source = options.template_dir + "/" +
                          strategy_name(r.strategy) + ".txt";
    }
  }
  if (r.template_source.empty()) {
    if (r.ablation) {
      r.prompt_template = ablated_template(r.strategy, *r.ablation);
      r.template_source = "ablated:" + ablation_name(*r.ablation);
    } else {
      r.prompt_template = builtin_template(r.strategy);
      r.template_source = "builtin";
    }
  }

  if (options.answer_format) {
    r.answer_format = *options.answer_format;
  } else {
    // Free-form-mapped datasets answer in sentences, everything else in
    // entity lists.
    r.answer_format = (task_from_name(mapping.default_task) == Task::FreeForm)
                          ? AnswerFormat::Sentence
                          : AnswerFormat::EntityList;
  }
  return r;
}

std::unique_ptr<CompletionBackend> make_backend(const RunOptions& options) {
  if (options.backend == "oracle") return std::make_unique<OracleBackend>();
  if (options.backend.rfind("sloppy:", 0) == 0) {
    auto defect = sloppy_defect_from_name(options.backend.substr(7));
    if (!defect)
      throw RunError("unknown sloppy defect \"" + options.backend + "\"");
    return std::make_unique<SloppyBackend>(*defect);
  }
  if (options.backend == "http")
    return std::make_unique<HttpBackend>(options.backend_config);
  throw RunError("unknown backend \"" + options.backend + "\"");
}

ordered_json manifest_json(const RunOptions& options, const ResolvedRun& run,
                           const std::string& dataset_hash,
                           const std::string& run_id) {
  ordered_json m;
  m["run_id"] = run_id;
  m["created_at"] = iso_timestamp(options.frozen_clock);
  m["strategy"] = strategy_name(run.strategy);
  m["ablation"] = run.ablation ? json(ablation_name(*run.ablation)) : json();
  ordered_json backend;
  backend["kind"] = options.backend;
  if (options.backend == "http") {
    const BackendConfig& c = options.backend_config;
    backend["endpoint_url"] = c.endpoint_url;
    backend["model_name"] = c.model_name;
    backend["temperature"] = c.temperature;
    backend["max_context_tokens"] = c.max_context_tokens;
    backend["max_output_tokens"] = c.max_output_tokens;
    backend["api_key_source"] = c.api_key_source;  // the key itself never lands on disk
  }
  m["backend"] = backend;
  m["dataset"] = {{"path", options.dataset_path}, {"fnv64", dataset_hash}};
  m["mapping"] = options.mapping;
  m["answer_format"] =
      run.answer_format == AnswerFormat::Sentence ? "sentence" : "entities";
  if (options.limit)
    m["sample"] = {{"limit", *options.limit}, {"seed", options.seed}};
  else
    m["sample"] = json();
  m["template"] = {{"source", run.template_source},
                   {"fnv64", fnv64_hex(run.prompt_template.text())}};
  return m;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double best_over_references(
    const QaInstance& instance,
    const std::function<double(const std::string&)>& score_one) {
  double best = 0.0;
  for (const auto& ref : instance.references)
    best = std::max(best, score_one(ref));
  return best;
}

}  // namespace

std::string fnv64_hex(const std::string& data) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

ScoredCompletion score_completion(StrategyId strategy, AnswerFormat fmt,
                                  const std::string& raw_text,
                                  const QaInstance& instance) {
  ScoredCompletion result;

  if (strategy == StrategyId::TGN) {
    auto [trace, report] = parse_tgn_trace(raw_text);
    result.compliance = report;
    result.grounding = ground_execute_steps(trace, instance.table);
    auto [answer, violations] = extract_final_answer(raw_text, fmt);
    result.answer = std::move(answer);
  } else if (strategy == StrategyId::PIP) {
    auto [trace, report] = parse_pip_trace(raw_text);
    result.compliance = report;
    auto [answer, violations] = extract_final_answer(raw_text, fmt);
    result.answer = std::move(answer);
  } else {
    auto [answer, violations] = extract_final_answer(raw_text, fmt);
    result.compliance.strategy = strategy;
    result.compliance.violations = violations;
    result.answer = std::move(answer);
  }

  const Category& cat = instance.category;
  InstanceScore& score = result.score;
  score.applied_metrics = select_metric_for_category(cat);
  score.primary_metric = primary_metric_for_category(cat);

  auto ref_entities = [](const std::string& ref) {
    std::vector<std::string> out;
    for (const auto& item : split_top_level(ref)) {
      std::string norm = normalize_entity(item);
      if (!norm.empty()) out.push_back(std::move(norm));
    }
    return out;
  };
  const std::vector<std::string> pred_tokens = tokenize(result.answer.raw);

  auto compute = [&](const std::string& name) -> double {
    if (name == kMetricEm)
      return best_over_references(instance, [&](const std::string& ref) {
        return exact_match(result.answer.entities, ref_entities(ref));
      });
    if (name == kMetricEm10)
      return best_over_references(instance, [&](const std::string& ref) {
        return em_with_error_10(result.answer.entities, ref_entities(ref));
      });
    if (name == kMetricRougeL)
      return best_over_references(instance, [&](const std::string& ref) {
        return rouge_l(pred_tokens, tokenize(ref));
      });
    if (name == kMetricRouge1)
      return best_over_references(instance, [&](const std::string& ref) {
        return rouge_n(1, pred_tokens, tokenize(ref));
      });
    if (name == kMetricRouge2)
      return best_over_references(instance, [&](const std::string& ref) {
        return rouge_n(2, pred_tokens, tokenize(ref));
      });
    if (name == kMetricBleu)
      return best_over_references(instance, [&](const std::string& ref) {
        return bleu({pred_tokens}, {tokenize(ref)});
      });
    if (name == kMetricMeteor)
      return best_over_references(instance, [&](const std::string& ref) {
        return meteor_lite(pred_tokens, tokenize(ref));
      });
    throw UnknownCategory("unknown metric \"" + name + "\"");
  };

  for (const auto& name : score.applied_metrics)
    score.values[name] = compute(name);
  // Diagnostics alongside the routed metrics: EM-family values are recorded
  // for every entity-format instance (the error analysis needs them).
  if (result.answer.kind == ExtractedAnswer::Kind::EntityList) {
    if (!score.values.count(kMetricEm)) score.values[kMetricEm] = compute(kMetricEm);
    if (!score.values.count(kMetricEm10))
      score.values[kMetricEm10] = compute(kMetricEm10);
  }
  return result;
}

namespace {

ordered_json record_json(const QaInstance& instance,
                         const std::string& prompt, bool store_prompt,
                         const CompletionResult& completion,
                         const ScoredCompletion& scored,
                         const std::string& backend_error, bool frozen_clock) {
  ordered_json rec;
  rec["id"] = instance.id;
  rec["task"] = task_name(instance.category.task);
  rec["subtype"] = instance.category.subtype;
  rec["prompt_hash"] = fnv64_hex(prompt);
  if (store_prompt) rec["prompt"] = prompt;
  rec["raw_text"] = completion.raw_text;
  rec["finish_reason"] = finish_reason_name(completion.finish_reason);
  if (!backend_error.empty()) rec["backend_error"] = backend_error;
  rec["latency_ms"] = frozen_clock ? 0 : completion.latency_ms;
  rec["attempt_count"] = completion.attempt_count;

  ordered_json compliance;
  ordered_json violations = ordered_json::array();
  for (const auto& v : scored.compliance.violations)
    violations.push_back({{"code", violation_code_name(v.code)},
                          {"detail", v.detail}});
  compliance["violations"] = violations;
  if (scored.compliance.strategy == StrategyId::TGN)
    compliance["n_cycles"] = scored.compliance.n_cycles;
  if (scored.compliance.strategy == StrategyId::PIP) {
    ordered_json steps = ordered_json::array();
    for (int s : scored.compliance.steps_present) steps.push_back(s);
    compliance["steps_present"] = steps;
  }
  rec["compliance"] = compliance;

  ordered_json answer;
  answer["kind"] = scored.answer.kind == ExtractedAnswer::Kind::Sentence
                       ? "sentence"
                       : "entities";
  if (scored.answer.kind == ExtractedAnswer::Kind::EntityList)
    answer["entities"] = scored.answer.entities;
  else
    answer["sentence"] = scored.answer.sentence;
  answer["text"] = scored.answer.raw;
  rec["answer"] = answer;

  ordered_json grounding = ordered_json::array();
  for (const auto& g : scored.grounding)
    grounding.push_back({{"cycle", g.cycle_index},
                         {"status", grounding_status_name(g.status)}});
  rec["grounding"] = grounding;

  ordered_json values;
  for (const auto& [name, v] : scored.score.values) values[name] = v;
  rec["scores"] = values;
  ordered_json applied = ordered_json::array();
  for (const auto& name : scored.score.applied_metrics)
    applied.push_back(name);
  rec["applied_metrics"] = applied;
  rec["primary_metric"] = scored.score.primary_metric;
  return rec;
}

}  // namespace

RunSummary run(const RunOptions& options) {
  FieldMapping mapping = resolve_mapping(options.mapping);
  ResolvedRun resolved = resolve_run(options, mapping);

  LoadReport loaded = load_dataset(options.dataset_path, mapping);
  if (options.strict && !loaded.errors.empty()) {
    std::ostringstream msg;
    msg << loaded.errors.size() << " malformed record(s); first at line "
        << loaded.errors.front().line << ": " << loaded.errors.front().reason;
    throw Error("StrictValidation", msg.str());
  }
  std::vector<QaInstance> instances = std::move(loaded.instances);
  std::sort(instances.begin(), instances.end(),
            [](const QaInstance& a, const QaInstance& b) { return a.id < b.id; });
  if (options.limit) {
    std::size_t n = std::min(*options.limit, instances.size());
    instances = sample(instances, n, options.seed);
  }
  if (instances.empty()) throw RunError("no instances to run");

  std::string dataset_hash = fnv64_hex(read_file(options.dataset_path));
  std::string run_id = options.run_id;
  if (run_id.empty()) {
    std::string fingerprint =
        dataset_hash + "|" + strategy_name(resolved.strategy) + "|" +
        (resolved.ablation ? ablation_name(*resolved.ablation) : "") + "|" +
        options.backend + "|" +
        (resolved.answer_format == AnswerFormat::Sentence ? "s" : "e") + "|" +
        (options.limit ? std::to_string(*options.limit) : "all") + "|" +
        std::to_string(options.seed);
    run_id = "run-" + fnv64_hex(fingerprint);
  }

  ordered_json manifest =
      manifest_json(options, resolved, dataset_hash, run_id);
  std::string manifest_path = options.out_path + ".manifest.json";

  // Resume: an existing results file must belong to the same run and hold a
  // prefix (in id order) of the planned instances.
  std::vector<std::string> existing = read_lines(options.out_path);
  std::size_t resume_from = 0;
  if (!existing.empty()) {
    json old_manifest = json::parse(read_file(manifest_path), nullptr, false);
    if (old_manifest.is_discarded() ||
        old_manifest.value("run_id", "") != run_id)
      throw RunError("existing results at " + options.out_path +
                     " come from a different run; refusing to mix");
    if (existing.size() > instances.size())
      throw RunError("existing results have more records than instances");
    for (std::size_t i = 0; i < existing.size(); ++i) {
      json rec = json::parse(existing[i], nullptr, false);
      if (rec.is_discarded() || rec.value("id", "") != instances[i].id)
        throw RunError("existing results do not form a prefix of this run");
    }
    resume_from = existing.size();
  }

  {
    std::ofstream mf(manifest_path, std::ios::binary | std::ios::trunc);
    if (!mf) throw RunError("cannot write manifest " + manifest_path);
    mf << manifest.dump(2) << "\n";
  }

  std::unique_ptr<CompletionBackend> backend = make_backend(options);

  const std::size_t total = instances.size();
  std::vector<std::string> lines(total);
  std::vector<char> ready(total, 0);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{resume_from};
  std::atomic<int> backend_errors{0};

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      const QaInstance& instance = instances[i];
      std::string line;
      try {
        std::string prompt = render_prompt(resolved.prompt_template,
                                           instance.table, instance.question,
                                           resolved.answer_format);
        CompletionResult completion;
        std::string backend_error;
        try {
          CompletionRequest request;
          request.prompt = prompt;
          request.table = &instance.table;
          request.question = instance.question;
          request.strategy = resolved.strategy;
          completion = backend->complete(request);
        } catch (const Error& e) {
          completion = CompletionResult{};
          completion.finish_reason = FinishReason::Error;
          backend_error = e.what();
          backend_errors.fetch_add(1);
        }
        ScoredCompletion scored =
            score_completion(resolved.strategy, resolved.answer_format,
                             completion.raw_text, instance);
        ordered_json rec =
            record_json(instance, prompt, options.store_prompts, completion,
                        scored, backend_error, options.frozen_clock);
        // replace handler: raw completions are not guaranteed valid UTF-8
        line = rec.dump(-1, ' ', false,
                        nlohmann::json::error_handler_t::replace);
      } catch (const std::exception& e) {
        backend_errors.fetch_add(1);
        ordered_json rec;
        rec["id"] = instance.id;
        rec["task"] = task_name(instance.category.task);
        rec["subtype"] = instance.category.subtype;
        rec["finish_reason"] = finish_reason_name(FinishReason::Error);
        rec["backend_error"] = e.what();
        line = rec.dump();
      }
      {
        std::lock_guard<std::mutex> lock(mu);
        lines[i] = std::move(line);
        ready[i] = 1;
      }
      cv.notify_all();
    }
  };

  int n_workers = std::max(1, options.concurrency);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  std::ofstream out(options.out_path, std::ios::binary | std::ios::app);
  if (!out) {
    next.store(total);  // stop workers
    cv.notify_all();
    for (auto& t : pool) t.join();
    throw RunError("cannot write results to " + options.out_path);
  }
  for (std::size_t i = resume_from; i < total; ++i) {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return ready[i] != 0; });
    out << lines[i] << "\n";
    out.flush();
  }
  for (auto& t : pool) t.join();

  RunSummary summary;
  summary.n_instances = static_cast<int>(total);
  summary.n_new_records = static_cast<int>(total - resume_from);
  summary.n_resumed = static_cast<int>(resume_from);
  summary.n_backend_errors = backend_errors.load();
  summary.out_path = options.out_path;
  summary.manifest_path = manifest_path;
  return summary;
}

AggregateReport score(const std::string& results_path,
                      const std::string& dataset_path,
                      const std::string& mapping_name) {
  FieldMapping mapping = resolve_mapping(mapping_name);
  LoadReport loaded = load_dataset(dataset_path, mapping);
  std::unordered_map<std::string, const QaInstance*> by_id;
  for (const auto& inst : loaded.instances) by_id[inst.id] = &inst;

  json manifest =
      json::parse(read_file(results_path + ".manifest.json"), nullptr, false);
  if (manifest.is_discarded())
    throw RunError("missing or unreadable manifest for " + results_path);
  auto strategy = strategy_from_name(manifest.value("strategy", ""));
  if (!strategy)
    throw RunError("manifest does not name a valid strategy");
  AnswerFormat fmt = manifest.value("answer_format", "entities") == "sentence"
                         ? AnswerFormat::Sentence
                         : AnswerFormat::EntityList;

  std::vector<std::string> lines = read_lines(results_path);
  if (lines.empty()) throw RunError("no records in " + results_path);

  std::vector<std::string> orphans;
  std::vector<std::pair<Category, InstanceScore>> scores;
  std::map<std::string, int> violation_counts;
  for (const auto& line : lines) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) continue;
    std::string id = rec.value("id", "");
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      orphans.push_back(id);
      continue;
    }
    const QaInstance& instance = *it->second;
    ScoredCompletion scored = score_completion(
        *strategy, fmt, rec.value("raw_text", ""), instance);
    for (const auto& v : scored.compliance.violations)
      ++violation_counts[violation_code_name(v.code)];
    scores.emplace_back(instance.category, scored.score);
  }
  if (!orphans.empty()) {
    std::string joined;
    for (const auto& id : orphans) joined += (joined.empty() ? "" : ", ") + id;
    throw IdMismatch("results reference unknown ids: " + joined);
  }
  AggregateReport report = aggregate(scores);
  report.violation_counts = violation_counts;
  return report;
}

std::optional<ReportLayout> report_layout_from_name(const std::string& name) {
  if (name == "by_subtype" || name == "by-subtype") return ReportLayout::BySubtype;
  if (name == "by_task" || name == "by-task") return ReportLayout::ByTask;
  if (name == "overall") return ReportLayout::Overall;
  return std::nullopt;
}

std::string render_report_text(const AggregateReport& report,
                               ReportLayout layout) {
  std::ostringstream out;
  switch (layout) {
    case ReportLayout::Overall:
      if (report.n_total == 0)
        out << "overall  no instances\n";
      else
        out << "overall  " << format_x100(report.overall_mean) << "\n";
      break;
    case ReportLayout::ByTask: {
      static const Task kTasks[] = {Task::FactChecking,
                                    Task::NumericalReasoning,
                                    Task::DataAnalysis, Task::FreeForm};
      out << std::left << std::setw(20) << "task" << std::right
          << std::setw(6) << "n" << std::setw(10) << "score" << "\n";
      for (Task task : kTasks) {
        const TaskAggregate* found = nullptr;
        for (const auto& t : report.tasks)
          if (t.task == task) found = &t;
        out << std::left << std::setw(20) << task_name(task) << std::right;
        if (!found)
          out << std::setw(6) << 0 << "  no instances\n";
        else
          out << std::setw(6) << found->n << std::setw(10)
              << format_x100(found->primary_mean) << "\n";
      }
      out << std::left << std::setw(20) << "overall" << std::right
          << std::setw(6) << report.n_total << std::setw(10)
          << format_x100(report.overall_mean) << "\n";
      break;
    }
    case ReportLayout::BySubtype: {
      int unknown_n = 0;
      out << std::left << std::setw(8) << "subtype" << std::right
          << std::setw(6) << "n" << "  metrics" << "\n";
      for (const auto& s : report.subtypes) {
        if (s.category.is_unknown_subtype()) {
          unknown_n += s.n;
          continue;
        }
        out << std::left << std::setw(8) << s.category.subtype << std::right
            << std::setw(6) << s.n << "  ";
        bool first = true;
        for (const auto& [name, mm] : s.metrics) {
          if (!first) out << "  ";
          first = false;
          out << name << "=" << format_x100(mm.mean);
        }
        out << "\n";
      }
      if (report.subtypes.empty()) out << "no instances\n";
      if (unknown_n > 0)
        out << "(unknown-subtype instances counted in overall: " << unknown_n
            << ")\n";
      break;
    }
  }
  return out.str();
}

std::string render_report_csv(const AggregateReport& report,
                              ReportLayout layout) {
  std::ostringstream out;
  out << "scope,name,n,metric,value\n";
  switch (layout) {
    case ReportLayout::Overall:
      out << "overall,," << report.n_total << ",primary,"
          << format_x100(report.overall_mean) << "\n";
      break;
    case ReportLayout::ByTask:
      for (const auto& t : report.tasks)
        out << "task," << task_name(t.task) << "," << t.n << ",primary,"
            << format_x100(t.primary_mean) << "\n";
      out << "overall,," << report.n_total << ",primary,"
          << format_x100(report.overall_mean) << "\n";
      break;
    case ReportLayout::BySubtype:
      for (const auto& s : report.subtypes)
        for (const auto& [name, mm] : s.metrics)
          out << "subtype," << s.category.subtype << "," << s.n << "," << name
              << "," << format_x100(mm.mean) << "\n";
      break;
  }
  return out.str();
}

TraceValidationSummary validate_traces(const std::string& results_path) {
  TraceValidationSummary summary;
  json manifest =
      json::parse(read_file(results_path + ".manifest.json"), nullptr, false);
  summary.strategy = manifest.is_discarded()
                         ? "unknown"
                         : manifest.value("strategy", "unknown");

  for (const auto& line : read_lines(results_path)) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) continue;
    ++summary.n_records;
    std::string subtype = rec.value("subtype", "UNK");
    bool any = false;
    if (rec.contains("compliance") && rec["compliance"].contains("violations"))
      for (const auto& v : rec["compliance"]["violations"]) {
        std::string code = v.value("code", "?");
        ++summary.violation_counts[code];
        ++summary.by_subtype[subtype][code];
        any = true;
      }
    if (rec.contains("grounding"))
      for (const auto& g : rec["grounding"]) {
        std::string status = g.value("status", "?");
        ++summary.grounding_counts[status];
        ++summary.by_subtype[subtype]["grounding." + status];
      }
    if (any) ++summary.records_with_violations;
  }
  return summary;
}

std::string render_validation_text(const TraceValidationSummary& summary) {
  std::ostringstream out;
  out << "strategy: " << summary.strategy << "\n";
  out << "records: " << summary.n_records << "\n";
  out << "records with violations: " << summary.records_with_violations
      << "\n";
  out << "violations:\n";
  if (summary.violation_counts.empty()) out << "  (none)\n";
  for (const auto& [code, n] : summary.violation_counts)
    out << "  " << std::left << std::setw(22) << code << std::right
        << std::setw(6) << n << "\n";
  if (!summary.grounding_counts.empty()) {
    out << "grounding:\n";
    for (const auto& [status, n] : summary.grounding_counts)
      out << "  " << std::left << std::setw(22) << status << std::right
          << std::setw(6) << n << "\n";
  }
  out << "by subtype:\n";
  for (const auto& [subtype, counts] : summary.by_subtype) {
    out << "  " << subtype << ":";
    for (const auto& [code, n] : counts) out << " " << code << "=" << n;
    out << "\n";
  }
  return out.str();
}

}  // namespace tqa
