#include "tqa/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "table_internal.hpp"

namespace tqa {

namespace {

using nlohmann::json;

std::string normalize_key(const std::string& s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

const json* resolve_path(const json& record, const std::string& path) {
  if (path.empty()) return nullptr;
  const json* node = &record;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t dot = path.find('.', start);
    std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (node->is_object() && node->contains(key)) {
      node = &(*node)[key];
    } else {
      return nullptr;
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node;
}

std::string scalar_to_string(const json& node) {
  if (node.is_string()) return node.get<std::string>();
  if (node.is_number_integer()) return std::to_string(node.get<long long>());
  if (node.is_number()) return render_number(node.get<double>());
  if (node.is_boolean()) return node.get<bool>() ? "true" : "false";
  return node.dump();
}

Table table_from_row_list(const json& rows, bool first_row_is_header,
                          const std::vector<std::string>& null_tokens) {
  if (!rows.is_array() || rows.empty())
    throw MalformedTable("table rows must form a nonempty array");
  json doc;
  if (first_row_is_header) {
    json cols = json::array();
    for (const auto& cell : rows[0]) cols.push_back(scalar_to_string(cell));
    doc["columns"] = cols;
    doc["data"] = json::array();
    for (std::size_t i = 1; i < rows.size(); ++i) doc["data"].push_back(rows[i]);
  } else {
    json cols = json::array();
    std::size_t width = rows[0].is_array() ? rows[0].size() : 0;
    for (std::size_t i = 0; i < width; ++i)
      cols.push_back("col" + std::to_string(i + 1));
    doc["columns"] = cols;
    doc["data"] = rows;
  }
  return table_from_json(doc, null_tokens);
}

Table extract_table(const json& record, const FieldMapping& m) {
  if (!m.table_columns.empty() || !m.table_data.empty()) {
    const json* cols = resolve_path(record, m.table_columns);
    const json* data = resolve_path(record, m.table_data);
    if (!cols || !data)
      throw MalformedTable("table_columns/table_data paths not found");
    json doc;
    doc["columns"] = *cols;
    doc["data"] = *data;
    return table_from_json(doc, m.null_tokens);
  }
  const json* node = resolve_path(record, m.table);
  if (!node) throw MalformedTable("table path \"" + m.table + "\" not found");
  if (node->is_string()) {
    json doc = json::parse(node->get<std::string>(), nullptr, false);
    if (doc.is_discarded())
      throw MalformedTable("table field is not valid JSON");
    if (doc.is_array())
      return table_from_row_list(doc, m.first_row_is_header, m.null_tokens);
    return table_from_json(doc, m.null_tokens);
  }
  if (node->is_array())
    return table_from_row_list(*node, m.first_row_is_header, m.null_tokens);
  return table_from_json(*node, m.null_tokens);
}

Category extract_category(const json& record, const FieldMapping& m,
                          std::string* error) {
  std::string task_src = m.default_task;
  if (!m.category_task.empty()) {
    const json* node = resolve_path(record, m.category_task);
    if (node) task_src = scalar_to_string(*node);
  }
  std::optional<Task> task = task_from_name(task_src);
  if (!task) {
    *error = "unrecognized task \"" + task_src + "\"";
    return Category{};
  }
  std::string subtype_src = m.default_subtype;
  if (!m.category_subtype.empty()) {
    const json* node = resolve_path(record, m.category_subtype);
    if (node) subtype_src = scalar_to_string(*node);
  }
  std::optional<Category> cat = resolve_subtype(*task, subtype_src);
  if (!cat) return Category{*task, "UNK"};
  return *cat;
}

}  // namespace

std::string task_name(Task t) {
  switch (t) {
    case Task::FactChecking: return "FactChecking";
    case Task::NumericalReasoning: return "NumericalReasoning";
    case Task::DataAnalysis: return "DataAnalysis";
    case Task::FreeForm: return "FreeForm";
  }
  return "?";
}

std::optional<Task> task_from_name(const std::string& name) {
  std::string key = normalize_key(name);
  if (key == "factchecking" || key == "fc") return Task::FactChecking;
  if (key == "numericalreasoning" || key == "nr")
    return Task::NumericalReasoning;
  if (key == "dataanalysis" || key == "da") return Task::DataAnalysis;
  if (key == "freeform" || key == "ff") return Task::FreeForm;
  return std::nullopt;
}

const std::vector<SubtypeInfo>& subtype_registry() {
  static const std::vector<SubtypeInfo> registry = {
      {"FC-MB", Task::FactChecking, "Match-Based"},
      {"FC-MH", Task::FactChecking, "Multi-Hop"},
      {"NR-A", Task::NumericalReasoning, "Aggregation"},
      {"NR-MH", Task::NumericalReasoning, "Multi-Hop"},
      {"NR-Cn", Task::NumericalReasoning, "Counting"},
      {"NR-Dm", Task::NumericalReasoning, "Domain-Specific"},
      {"NR-T", Task::NumericalReasoning, "Time-based Calculation"},
      {"NR-Ar", Task::NumericalReasoning, "Arithmetic Calculation"},
      {"NR-Rk", Task::NumericalReasoning, "Ranking"},
      {"NR-Cp", Task::NumericalReasoning, "Comparison"},
      {"DA-I", Task::DataAnalysis, "Impact Analysis"},
      {"DA-C", Task::DataAnalysis, "Correlation Analysis"},
      {"DA-Ds", Task::DataAnalysis, "Descriptive Analysis"},
      {"DA-An", Task::DataAnalysis, "Anomaly Detection"},
      {"DA-Tr", Task::DataAnalysis, "Trend Forecasting"},
      {"DA-St", Task::DataAnalysis, "Statistical Analysis"},
      {"FF", Task::FreeForm, "Free-Form"},
  };
  return registry;
}

std::optional<Category> resolve_subtype(Task task, const std::string& source) {
  std::string key = normalize_key(source);
  if (key.empty()) {
    if (task == Task::FreeForm) return Category{task, "FF"};
    return std::nullopt;
  }
  for (const auto& info : subtype_registry()) {
    if (info.task != task) continue;
    if (normalize_key(info.code) == key) return Category{task, info.code};
    std::string long_key = normalize_key(info.long_name);
    if (long_key == key) return Category{task, info.code};
    // Source datasets often embed the task in the subtype name
    // ("Multi-hop FactChecking", "CausalAnalysis" vs "Correlation Analysis").
    if (key == long_key + normalize_key(task_name(task)) ||
        key == normalize_key(task_name(task)) + long_key)
      return Category{task, info.code};
  }
  if (task == Task::DataAnalysis && key == "causalanalysis")
    return Category{task, "DA-C"};
  return std::nullopt;
}

FieldMapping resolve_mapping(const std::string& name_or_path) {
  if (name_or_path == "tablebench") {
    FieldMapping m;
    m.category_task = "qtype";
    m.category_subtype = "qsubtype";
    return m;
  }
  if (name_or_path == "fetaqa") {
    FieldMapping m;
    m.id = "feta_id";
    m.table = "table_array";
    m.first_row_is_header = true;
    m.default_task = "FreeForm";
    m.default_subtype = "FF";
    m.passthrough = {"highlighted_cell_ids"};
    return m;
  }
  std::ifstream in(name_or_path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot open mapping file " + name_or_path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw FileUnreadable("mapping file is not valid JSON: " + name_or_path);
  FieldMapping m;
  auto get_str = [&](const char* key, std::string* out) {
    if (doc.contains(key) && doc[key].is_string()) *out = doc[key];
  };
  get_str("id", &m.id);
  get_str("question", &m.question);
  get_str("answer", &m.answer);
  get_str("table", &m.table);
  get_str("table_columns", &m.table_columns);
  get_str("table_data", &m.table_data);
  get_str("category_task", &m.category_task);
  get_str("category_subtype", &m.category_subtype);
  get_str("default_task", &m.default_task);
  get_str("default_subtype", &m.default_subtype);
  if (doc.contains("first_row_is_header"))
    m.first_row_is_header = doc["first_row_is_header"].get<bool>();
  if (doc.contains("null_tokens")) {
    m.null_tokens.clear();
    for (const auto& t : doc["null_tokens"])
      m.null_tokens.push_back(t.get<std::string>());
  }
  if (doc.contains("passthrough"))
    for (const auto& p : doc["passthrough"])
      m.passthrough.push_back(p.get<std::string>());
  return m;
}

LoadReport load_dataset(const std::string& path, const FieldMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot open dataset file " + path);

  LoadReport report;
  std::unordered_set<std::string> seen_ids;
  double total_columns = 0.0, total_rows = 0.0;
  double numeric_cells = 0.0, total_cells = 0.0;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = line;
    if (!stripped.empty() && stripped.back() == '\r') stripped.pop_back();
    if (stripped.find_first_not_of(" \t") == std::string::npos) continue;
    ++report.summary.n_records;

    auto fail = [&](const std::string& reason) {
      report.errors.push_back({line_no, reason});
    };

    json record = json::parse(stripped, nullptr, false);
    if (record.is_discarded()) {
      fail("record is not valid JSON");
      continue;
    }
    try {
      QaInstance inst;
      const json* id_node = resolve_path(record, mapping.id);
      if (!id_node) {
        fail("missing id field \"" + mapping.id + "\"");
        continue;
      }
      inst.id = scalar_to_string(*id_node);
      if (inst.id.empty()) {
        fail("empty id");
        continue;
      }
      if (!seen_ids.insert(inst.id).second) {
        fail("duplicate id \"" + inst.id + "\"");
        continue;
      }
      const json* q_node = resolve_path(record, mapping.question);
      if (!q_node || scalar_to_string(*q_node).empty()) {
        fail("missing or empty question");
        continue;
      }
      inst.question = scalar_to_string(*q_node);
      const json* a_node = resolve_path(record, mapping.answer);
      if (!a_node) {
        fail("missing answer field \"" + mapping.answer + "\"");
        continue;
      }
      if (a_node->is_array()) {
        for (const auto& a : *a_node)
          inst.references.push_back(scalar_to_string(a));
      } else {
        inst.references.push_back(scalar_to_string(*a_node));
      }
      if (inst.references.empty() ||
          (inst.references.size() == 1 && inst.references[0].empty())) {
        fail("empty reference answer");
        continue;
      }
      std::string cat_error;
      inst.category = extract_category(record, mapping, &cat_error);
      if (!cat_error.empty()) {
        fail(cat_error);
        continue;
      }
      inst.table = extract_table(record, mapping);
      for (const auto& p : mapping.passthrough) {
        const json* node = resolve_path(record, p);
        if (node) inst.passthrough[p] = node->dump();
      }

      total_columns += static_cast<double>(inst.table.n_columns());
      total_rows += static_cast<double>(inst.table.n_rows());
      for (const auto& row : inst.table.rows)
        for (const auto& cell : row) {
          total_cells += 1.0;
          if (cell.kind == Cell::Kind::Number) numeric_cells += 1.0;
        }
      report.instances.push_back(std::move(inst));
    } catch (const Error& e) {
      fail(e.what());
    }
  }

  report.summary.n_loaded = static_cast<int>(report.instances.size());
  if (report.summary.n_loaded > 0) {
    report.summary.mean_columns =
        total_columns / report.summary.n_loaded;
    report.summary.mean_rows = total_rows / report.summary.n_loaded;
  }
  if (total_cells > 0.0)
    report.summary.numeric_cell_fraction = numeric_cells / total_cells;
  return report;
}

std::vector<QaInstance> sample(const std::vector<QaInstance>& instances,
                               std::size_t n, std::uint64_t seed) {
  if (n > instances.size())
    throw NOutOfRange("sample size " + std::to_string(n) + " exceeds " +
                      std::to_string(instances.size()) + " instances");
  std::vector<std::size_t> idx(instances.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Fisher-Yates with raw engine draws; the mt19937_64 stream is fully
  // specified, so the selection is reproducible across platforms.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < idx.size() && i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<QaInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(instances[idx[i]]);
  std::sort(out.begin(), out.end(),
            [](const QaInstance& a, const QaInstance& b) { return a.id < b.id; });
  return out;
}

}  // namespace tqa
