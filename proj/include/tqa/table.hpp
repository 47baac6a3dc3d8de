#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tqa/error.hpp"

namespace tqa {

/// One table cell: free text, a finite number, or nothing.
struct Cell {
  enum class Kind { Text, Number, Empty };

  Kind kind = Kind::Empty;
  std::string text;     // valid when kind == Text
  double number = 0.0;  // valid when kind == Number; always finite

  static Cell make_text(std::string s);
  static Cell make_number(double v);
  static Cell make_empty();

  bool operator==(const Cell& other) const;
};

/// Column-named, row-major grid of typed cells. Immutable by convention:
/// build it once (parse_table / make_table) and share freely.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t n_columns() const { return columns.size(); }
  std::size_t n_rows() const { return rows.size(); }

  /// Index of a column by exact name. Throws ColumnNotFound.
  std::size_t column_index(const std::string& name) const;

  bool operator==(const Table& other) const;
};

/// Selects the first row whose cell in `column` matches `value`.
struct RowSelector {
  std::string column;
  std::string value;
};

enum class AggregateFn { Sum, Mean, Min, Max, Count };
enum class Relation { Greater, Less };

/// A grounded operation over a table. The harness-side executor for these
/// is execute_op below.
struct TableOp {
  enum class Kind { Lookup, Aggregate, Compare, FilterCount };

  Kind kind;

  // Lookup: cell at (first row matching `selector`, `column`).
  RowSelector selector;
  std::string column;

  // Aggregate: `fn` over `column`.
  AggregateFn fn = AggregateFn::Count;

  // Compare: entities selected by `selector` and `selector_b`; the winner
  // under `relation` on `column` is reported by its selector-column cell.
  RowSelector selector_b;
  Relation relation = Relation::Greater;

  // FilterCount: rows where `column` matches `selector.value`.

  static TableOp lookup(RowSelector sel, std::string return_column);
  static TableOp aggregate(std::string column, AggregateFn fn);
  static TableOp compare(RowSelector a, RowSelector b, std::string column,
                         Relation rel);
  static TableOp filter_count(std::string column, std::string equals);
};

/// Canonical rendering for a finite double: integers without a decimal
/// point, everything else in shortest round-trip form.
std::string render_number(double v);

/// Canonical rendering of a cell: Text verbatim, Number via render_number,
/// Empty as "".
std::string render_cell(const Cell& c);

/// Types a raw string: Number after stripping outer whitespace, one leading
/// currency symbol, "," thousands grouping and one trailing "%" (percent
/// values are stored divided by 100); Empty for "" and null tokens
/// ("-", "n/a" case-insensitive); Text otherwise. Total and deterministic.
Cell infer_cell(const std::string& raw);

/// infer_cell with a caller-supplied null-token set (dataset mappings can
/// override the default {"", "-", "n/a"}).
Cell infer_cell_with(const std::string& raw,
                     const std::vector<std::string>& null_tokens);

/// Parses the serialized-table text format: an object with a "columns"
/// array of strings and a "data" array of equal-length arrays. String cells
/// go through infer_cell; JSON numbers become Number cells directly.
/// Duplicate column names are disambiguated by appending "#2", "#3", ...
/// Throws MalformedTable / RaggedRows.
Table parse_table(const std::string& text);

/// Canonical single-line serialization: {"columns":[...],"data":[[...]...]}
/// with no insignificant whitespace. The leftmost column is rendered as
/// strings (entity-column convention); other columns render Number cells as
/// JSON numbers with no trailing zeros, Empty as "". Round-trips through
/// parse_table to an equal Table.
std::string serialize_for_prompt(const Table& t);

/// Deterministic grounded executor. Aggregate ignores non-Number cells
/// except Count (which counts all non-Empty); Lookup returns the cell at
/// the first matching row; Compare returns the winning entity cell.
/// Throws ColumnNotFound / NoMatchingRow / NonNumericAggregate.
std::vector<Cell> execute_op(const Table& t, const TableOp& op);

}  // namespace tqa
