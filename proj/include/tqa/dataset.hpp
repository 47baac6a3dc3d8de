#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tqa/dataset_types.hpp"
#include "tqa/error.hpp"
#include "tqa/table.hpp"

namespace tqa {

/// One question over one table with its reference answer(s).
struct QaInstance {
  std::string id;
  Table table;
  std::string question;
  std::vector<std::string> references;  // >= 1
  Category category;
  std::map<std::string, std::string> passthrough;  // opaque extra fields
};

/// Maps source-record fields onto QaInstance fields. Paths are dot
/// expressions into each JSON record. The table is taken either from a
/// single `table` path (an object with columns/data, or a JSON string of
/// the same) or from `table_columns` + `table_data`; `first_row_is_header`
/// treats a plain row-list table as header + body.
struct FieldMapping {
  std::string id = "id";
  std::string question = "question";
  std::string answer = "answer";
  std::string table = "table";
  std::string table_columns;
  std::string table_data;
  bool first_row_is_header = false;
  std::string category_task;     // path; empty -> use default_task
  std::string category_subtype;  // path; empty -> use default_subtype
  std::string default_task;
  std::string default_subtype;
  std::vector<std::string> null_tokens = {"", "-", "n/a"};
  std::vector<std::string> passthrough;  // paths preserved verbatim
};

/// Builtin mappings: "tablebench" and "fetaqa". Anything else is treated as
/// a path to a JSON mapping file. Throws FileUnreadable on a bad path.
FieldMapping resolve_mapping(const std::string& name_or_path);

struct RecordError {
  int line = 0;  // 1-based line number in the source file
  std::string reason;
};

struct DatasetSummary {
  int n_records = 0;
  int n_loaded = 0;
  double mean_columns = 0.0;
  double mean_rows = 0.0;
  double numeric_cell_fraction = 0.0;
};

struct LoadReport {
  std::vector<QaInstance> instances;
  std::vector<RecordError> errors;  // MalformedRecord per bad line
  DatasetSummary summary;
};

/// Loads line-delimited records. Per-record failures are collected in the
/// report, not thrown; only an unreadable file throws (FileUnreadable).
/// With strict=true the caller is expected to treat a nonempty error list
/// as fatal.
LoadReport load_dataset(const std::string& path, const FieldMapping& mapping);

/// Deterministic sample of n instances for a fixed seed (std::mt19937_64
/// selection), returned in stable order by id. Throws NOutOfRange.
std::vector<QaInstance> sample(const std::vector<QaInstance>& instances,
                               std::size_t n, std::uint64_t seed);

}  // namespace tqa
