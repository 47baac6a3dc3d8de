#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tqa/backend.hpp"
#include "tqa/dataset.hpp"
#include "tqa/runner.hpp"
#include "tqa/strategy.hpp"

namespace {

using namespace tqa;

struct CommonStrategyFlags {
  std::string strategy = "tgn";
  std::string ablation;
  std::string template_dir;
  std::string answer_format;
};

void add_strategy_flags(CLI::App* cmd, CommonStrategyFlags* flags) {
  cmd->add_option("--strategy", flags->strategy,
                  "dp|cot|scot|react|tot|tot-selfask|pip|tgn")
      ->default_val("tgn");
  cmd->add_option("--ablation", flags->ablation,
                  "tgn-stage1|tgn-stage2|pip-case1|pip-case2");
  cmd->add_option("--template-dir", flags->template_dir,
                  "directory with <strategy>.txt template overrides");
  cmd->add_option("--answer-format", flags->answer_format,
                  "entities|sentence (default follows the mapping)");
}

int apply_strategy_flags(const CommonStrategyFlags& flags, RunOptions* options) {
  if (!flags.ablation.empty()) {
    auto a = ablation_from_name(flags.ablation);
    if (!a) {
      std::cerr << "unknown ablation: " << flags.ablation << "\n";
      return 1;
    }
    options->ablation = a;
  }
  auto s = strategy_from_name(flags.strategy);
  if (!s) {
    std::cerr << "unknown strategy: " << flags.strategy << "\n";
    return 1;
  }
  options->strategy = s;
  options->template_dir = flags.template_dir;
  if (!flags.answer_format.empty()) {
    if (flags.answer_format == "entities")
      options->answer_format = AnswerFormat::EntityList;
    else if (flags.answer_format == "sentence")
      options->answer_format = AnswerFormat::Sentence;
    else {
      std::cerr << "unknown answer format: " << flags.answer_format << "\n";
      return 1;
    }
  }
  return 0;
}

int run_command(const RunOptions& options) {
  RunSummary summary = run(options);
  std::cout << "run complete: " << summary.n_instances << " instance(s), "
            << summary.n_new_records << " new record(s)";
  if (summary.n_resumed > 0)
    std::cout << ", " << summary.n_resumed << " resumed";
  if (summary.n_backend_errors > 0)
    std::cout << ", " << summary.n_backend_errors << " backend error(s)";
  std::cout << "\nresults: " << summary.out_path
            << "\nmanifest: " << summary.manifest_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"table-QA prompting harness: structured prompt strategies, "
               "trace parsing and benchmark scoring"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run a strategy over a dataset");
  RunOptions run_options;
  CommonStrategyFlags run_strategy;
  double temperature = 0.7;
  bool deterministic = false;
  long long limit = -1;
  long long seed = 0;
  run_cmd->add_option("--dataset", run_options.dataset_path, "dataset JSONL")
      ->required();
  run_cmd->add_option("--mapping", run_options.mapping,
                      "tablebench|fetaqa|mapping-file.json")
      ->default_val("tablebench");
  add_strategy_flags(run_cmd, &run_strategy);
  run_cmd->add_option("--backend", run_options.backend,
                      "http|oracle|sloppy:<defect>")
      ->default_val("oracle");
  run_cmd->add_option("--endpoint", run_options.backend_config.endpoint_url,
                      "chat-completions base URL");
  run_cmd->add_option("--model", run_options.backend_config.model_name,
                      "model name sent to the endpoint");
  run_cmd->add_option("--temperature", temperature, "sampling temperature")
      ->default_val(0.7);
  run_cmd->add_flag("--deterministic", deterministic,
                    "force temperature 0 for reproducible runs");
  run_cmd->add_option("--max-output-tokens",
                      run_options.backend_config.max_output_tokens,
                      "completion token cap")
      ->default_val(2048);
  run_cmd->add_option("--max-context-tokens",
                      run_options.backend_config.max_context_tokens,
                      "advisory context gate (chars/4 estimate)")
      ->default_val(8000);
  run_cmd->add_option("--rate-limit",
                      run_options.backend_config.requests_per_sec,
                      "requests per second, 0 = unlimited")
      ->default_val(0.0);
  run_cmd->add_option("--api-key-env", run_options.backend_config.api_key_source,
                      "environment variable holding the API key")
      ->default_val("TQA_API_KEY");
  run_cmd->add_option("--concurrency", run_options.concurrency, "worker count")
      ->default_val(4);
  run_cmd->add_option("--limit", limit, "sample this many instances");
  run_cmd->add_option("--seed", seed, "sampling seed")->default_val(0);
  run_cmd->add_option("--out", run_options.out_path, "results JSONL path")
      ->required();
  run_cmd->add_option("--run-id", run_options.run_id,
                      "explicit run id (default derived from inputs)");
  run_cmd->add_flag("--store-prompts", run_options.store_prompts,
                    "store full prompt text in records");
  run_cmd->add_flag("--strict", run_options.strict,
                    "fail on malformed dataset records");
  run_cmd->add_flag("--frozen-clock", run_options.frozen_clock,
                    "pin timestamps and latencies for byte-stable output");

  // score
  auto* score_cmd =
      app.add_subcommand("score", "recompute metrics from a results file");
  std::string score_results, score_dataset, score_mapping = "tablebench";
  std::string score_out;
  score_cmd->add_option("--results", score_results, "results JSONL")->required();
  score_cmd->add_option("--dataset", score_dataset, "dataset JSONL")->required();
  score_cmd->add_option("--mapping", score_mapping, "mapping name or file")
      ->default_val("tablebench");
  score_cmd->add_option("--out", score_out,
                        "write the aggregate as JSON to this path");

  // report
  auto* report_cmd =
      app.add_subcommand("report", "render an aggregate as text or CSV");
  std::string report_results, report_dataset, report_mapping = "tablebench";
  std::string report_layout = "by_task", report_format = "text";
  report_cmd->add_option("--results", report_results, "results JSONL")
      ->required();
  report_cmd->add_option("--dataset", report_dataset, "dataset JSONL")
      ->required();
  report_cmd->add_option("--mapping", report_mapping, "mapping name or file")
      ->default_val("tablebench");
  report_cmd->add_option("--layout", report_layout,
                         "by_subtype|by_task|overall")
      ->default_val("by_task");
  report_cmd->add_option("--format", report_format, "text|csv")
      ->default_val("text");

  // validate-traces
  auto* validate_cmd = app.add_subcommand(
      "validate-traces", "tabulate compliance violations and grounding");
  std::string validate_results;
  validate_cmd->add_option("--results", validate_results, "results JSONL")
      ->required();

  // render
  auto* render_cmd =
      app.add_subcommand("render", "print a rendered prompt for inspection");
  std::string render_dataset, render_mapping = "tablebench", render_id;
  long long render_index = 0;
  CommonStrategyFlags render_strategy;
  render_cmd->add_option("--dataset", render_dataset, "dataset JSONL")
      ->required();
  render_cmd->add_option("--mapping", render_mapping, "mapping name or file")
      ->default_val("tablebench");
  render_cmd->add_option("--id", render_id, "instance id (default: by index)");
  render_cmd->add_option("--index", render_index, "instance index")
      ->default_val(0);
  add_strategy_flags(render_cmd, &render_strategy);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      if (int rc = apply_strategy_flags(run_strategy, &run_options)) return rc;
      run_options.backend_config.temperature = deterministic ? 0.0 : temperature;
      if (limit >= 0) run_options.limit = static_cast<std::size_t>(limit);
      run_options.seed = static_cast<std::uint64_t>(seed);
      return run_command(run_options);
    }
    if (*score_cmd) {
      AggregateReport agg = score(score_results, score_dataset, score_mapping);
      std::cout << render_report_text(agg, ReportLayout::ByTask);
      if (!score_out.empty()) {
        nlohmann::ordered_json doc;
        doc["n_total"] = agg.n_total;
        doc["overall_mean"] = agg.overall_mean;
        nlohmann::ordered_json subtypes = nlohmann::ordered_json::array();
        for (const auto& s : agg.subtypes) {
          nlohmann::ordered_json row;
          row["subtype"] = s.category.subtype;
          row["task"] = task_name(s.category.task);
          row["n"] = s.n;
          row["primary_mean"] = s.primary_mean;
          for (const auto& [name, mm] : s.metrics) row[name] = mm.mean;
          subtypes.push_back(row);
        }
        doc["subtypes"] = subtypes;
        std::ofstream out(score_out, std::ios::binary | std::ios::trunc);
        if (!out) throw RunError("cannot write " + score_out);
        out << doc.dump(2) << "\n";
      }
      return 0;
    }
    if (*report_cmd) {
      AggregateReport agg =
          score(report_results, report_dataset, report_mapping);
      auto layout = report_layout_from_name(report_layout);
      if (!layout) {
        std::cerr << "unknown layout: " << report_layout << "\n";
        return 1;
      }
      std::cout << (report_format == "csv"
                        ? render_report_csv(agg, *layout)
                        : render_report_text(agg, *layout));
      return 0;
    }
    if (*validate_cmd) {
      std::cout << render_validation_text(validate_traces(validate_results));
      return 0;
    }
    if (*render_cmd) {
      RunOptions options;
      if (int rc = apply_strategy_flags(render_strategy, &options)) return rc;
      FieldMapping mapping = resolve_mapping(render_mapping);
      LoadReport loaded = load_dataset(render_dataset, mapping);
      const QaInstance* instance = nullptr;
      if (!render_id.empty()) {
        for (const auto& inst : loaded.instances)
          if (inst.id == render_id) instance = &inst;
        if (!instance) throw IdMismatch("no instance with id " + render_id);
      } else {
        if (render_index < 0 ||
            static_cast<std::size_t>(render_index) >= loaded.instances.size())
          throw IdMismatch("index out of range");
        instance = &loaded.instances[static_cast<std::size_t>(render_index)];
      }
      PromptTemplate tmpl;
      StrategyId base = options.ablation ? ablation_base(*options.ablation)
                                         : *options.strategy;
      if (!options.template_dir.empty()) {
        auto t = load_template_override(options.template_dir, base);
        if (t) tmpl = *t;
      }
      if (tmpl.text().empty())
        tmpl = options.ablation ? ablated_template(base, *options.ablation)
                                : builtin_template(base);
      AnswerFormat fmt = options.answer_format.value_or(
          task_from_name(mapping.default_task) == Task::FreeForm
              ? AnswerFormat::Sentence
              : AnswerFormat::EntityList);
      std::cout << render_prompt(tmpl, instance->table, instance->question,
                                 fmt);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == "StrictValidation" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
