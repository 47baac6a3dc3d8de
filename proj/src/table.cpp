#include "tqa/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "json.hpp"
#include "table_internal.hpp"

namespace tqa {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(b, e - b + 1);
}

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// One leading currency glyph: $, or the UTF-8 sequences for €, £, ¥.
std::size_t currency_prefix_len(const std::string& s) {
  if (s.empty()) return 0;
  if (s[0] == '$') return 1;
  auto starts = [&](const char* seq, std::size_t n) {
    return s.size() >= n && std::equal(seq, seq + n, s.begin());
  };
  if (starts("\xE2\x82\xAC", 3)) return 3;  // €
  if (starts("\xC2\xA3", 2)) return 2;      // £
  if (starts("\xC2\xA5", 2)) return 2;      // ¥
  return 0;
}

bool is_digits(const std::string& s, std::size_t b, std::size_t e) {
  if (b >= e) return false;
  for (std::size_t i = b; i < e; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

// Removes "," thousands separators when the integer part follows the
// 1-3 digits + (,ddd)+ grouping pattern; otherwise leaves the string alone.
std::string strip_thousands(const std::string& s) {
  if (s.find(',') == std::string::npos) return s;
  std::size_t b = 0;
  if (b < s.size() && (s[b] == '+' || s[b] == '-')) ++b;
  std::size_t int_end = s.size();
  for (std::size_t i = b; i < s.size(); ++i) {
    if (s[i] == '.' || s[i] == 'e' || s[i] == 'E') {
      int_end = i;
      break;
    }
  }
  // Validate grouping over [b, int_end).
  std::size_t first_group_end = s.find(',', b);
  if (first_group_end == std::string::npos || first_group_end >= int_end) return s;
  std::size_t first_len = first_group_end - b;
  if (first_len < 1 || first_len > 3 || !is_digits(s, b, first_group_end)) return s;
  std::size_t pos = first_group_end;
  while (pos < int_end) {
    if (s[pos] != ',') return s;
    if (pos + 4 > int_end || !is_digits(s, pos + 1, pos + 4)) return s;
    pos += 4;
  }
  std::string out = s.substr(0, b);
  for (std::size_t i = b; i < s.size(); ++i)
    if (!(s[i] == ',' && i < int_end)) out.push_back(s[i]);
  return out;
}

// Strict decimal parse: optional sign, digits with optional fraction and
// exponent, whole string consumed, finite result. No hex, no inf/nan.
bool parse_decimal(const std::string& s, double* out) {
  if (s.empty()) return false;
  std::size_t b = 0;
  if (s[0] == '+') b = 1;  // from_chars rejects a leading '+'
  const char* first = s.data() + b;
  const char* last = s.data() + s.size();
  if (first == last) return false;
  // Reject inf/nan spellings, which from_chars would accept.
  char c0 = static_cast<char>(std::tolower(static_cast<unsigned char>(*first)));
  char c1 = (s.size() > b + 1)
                ? static_cast<char>(std::tolower(static_cast<unsigned char>(s[b + 1])))
                : '\0';
  if (c0 == 'i' || c0 == 'n' || ((c0 == '-') && (c1 == 'i' || c1 == 'n')))
    return false;
  double v = 0.0;
  auto res = std::from_chars(first, last, v, std::chars_format::general);
  if (res.ec != std::errc() || res.ptr != last) return false;
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

bool cell_matches(const Cell& c, const std::string& key) {
  std::string rendered = render_cell(c);
  if (rendered == key) return true;
  if (to_lower(rendered) == to_lower(trim(key))) return true;
  double a = 0.0, b = 0.0;
  if (c.kind == Cell::Kind::Number && parse_decimal(trim(key), &b)) {
    a = c.number;
    return a == b;
  }
  return false;
}

}  // namespace

Cell Cell::make_text(std::string s) {
  Cell c;
  c.kind = Kind::Text;
  c.text = std::move(s);
  return c;
}

Cell Cell::make_number(double v) {
  Cell c;
  c.kind = Kind::Number;
  c.number = v;
  return c;
}

Cell Cell::make_empty() { return Cell{}; }

bool Cell::operator==(const Cell& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case Kind::Text: return text == other.text;
    case Kind::Number: return number == other.number;
    case Kind::Empty: return true;
  }
  return false;
}

std::size_t Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw ColumnNotFound("no column named \"" + name + "\"");
}

bool Table::operator==(const Table& other) const {
  return columns == other.columns && rows == other.rows;
}

TableOp TableOp::lookup(RowSelector sel, std::string return_column) {
  TableOp op;
  op.kind = Kind::Lookup;
  op.selector = std::move(sel);
  op.column = std::move(return_column);
  return op;
}

TableOp TableOp::aggregate(std::string column, AggregateFn fn) {
  TableOp op;
  op.kind = Kind::Aggregate;
  op.column = std::move(column);
  op.fn = fn;
  return op;
}

TableOp TableOp::compare(RowSelector a, RowSelector b, std::string column,
                         Relation rel) {
  TableOp op;
  op.kind = Kind::Compare;
  op.selector = std::move(a);
  op.selector_b = std::move(b);
  op.column = std::move(column);
  op.relation = rel;
  return op;
}

TableOp TableOp::filter_count(std::string column, std::string equals) {
  TableOp op;
  op.kind = Kind::FilterCount;
  op.column = std::move(column);
  op.selector = RowSelector{op.column, std::move(equals)};
  return op;
}

std::string render_number(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  constexpr double kMaxExactInt = 9007199254740992.0;  // 2^53
  if (std::nearbyint(v) == v && std::abs(v) <= kMaxExactInt)
    return std::to_string(static_cast<long long>(v));
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string render_cell(const Cell& c) {
  switch (c.kind) {
    case Cell::Kind::Text: return c.text;
    case Cell::Kind::Number: return render_number(c.number);
    case Cell::Kind::Empty: return "";
  }
  return "";
}

Cell infer_cell(const std::string& raw) {
  static const std::vector<std::string> kDefaultNullTokens = {"", "-", "n/a"};
  return infer_cell_with(raw, kDefaultNullTokens);
}

Cell infer_cell_with(const std::string& raw,
                     const std::vector<std::string>& null_tokens) {
  std::string s = trim(raw);
  std::string lowered = to_lower(s);
  for (const auto& tok : null_tokens)
    if (lowered == to_lower(tok)) return Cell::make_empty();

  std::string t = s.substr(currency_prefix_len(s));
  bool percent = false;
  if (!t.empty() && t.back() == '%') {
    percent = true;
    t.pop_back();
  }
  t = strip_thousands(trim(t));
  double v = 0.0;
  if (parse_decimal(trim(t), &v))
    return Cell::make_number(percent ? v / 100.0 : v);
  return Cell::make_text(s);
}

namespace {

Cell cell_from_json(const json& node,
                    const std::vector<std::string>& null_tokens) {
  if (node.is_string())
    return infer_cell_with(node.get<std::string>(), null_tokens);
  if (node.is_number()) {
    double v = node.get<double>();
    if (!std::isfinite(v)) throw MalformedTable("non-finite number cell");
    return Cell::make_number(v);
  }
  if (node.is_null()) return Cell::make_empty();
  if (node.is_boolean()) return Cell::make_text(node.get<bool>() ? "true" : "false");
  throw MalformedTable("cell is not a scalar: " + node.dump());
}

std::vector<std::string> disambiguate_columns(std::vector<std::string> names) {
  std::unordered_set<std::string> used;
  for (auto& name : names) {
    if (used.insert(name).second) continue;
    int k = 2;
    std::string candidate;
    do {
      candidate = name + "#" + std::to_string(k++);
    } while (used.count(candidate));
    name = candidate;
    used.insert(name);
  }
  return names;
}

}  // namespace

Table table_from_json(const json& doc) {
  static const std::vector<std::string> kDefaultNullTokens = {"", "-", "n/a"};
  return table_from_json(doc, kDefaultNullTokens);
}

Table table_from_json(const json& doc,
                      const std::vector<std::string>& null_tokens) {
  if (!doc.is_object() || !doc.contains("columns") || !doc.contains("data"))
    throw MalformedTable("expected an object with \"columns\" and \"data\"");
  const json& cols = doc["columns"];
  const json& data = doc["data"];
  if (!cols.is_array() || cols.empty())
    throw MalformedTable("\"columns\" must be a nonempty array");
  if (!data.is_array()) throw MalformedTable("\"data\" must be an array");

  Table t;
  for (const auto& c : cols) {
    if (!c.is_string()) throw MalformedTable("column names must be strings");
    t.columns.push_back(c.get<std::string>());
  }
  t.columns = disambiguate_columns(std::move(t.columns));

  for (std::size_t r = 0; r < data.size(); ++r) {
    const json& row = data[r];
    if (!row.is_array())
      throw MalformedTable("row " + std::to_string(r) + " is not an array");
    if (row.size() != t.columns.size())
      throw RaggedRows("row " + std::to_string(r) + " has " +
                       std::to_string(row.size()) + " cells, expected " +
                       std::to_string(t.columns.size()));
    std::vector<Cell> cells;
    cells.reserve(row.size());
    for (const auto& node : row)
      cells.push_back(cell_from_json(node, null_tokens));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table parse_table(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw MalformedTable("input is not valid JSON");
  return table_from_json(doc);
}

std::string serialize_for_prompt(const Table& t) {
  ordered_json j;
  j["columns"] = t.columns;
  ordered_json data = ordered_json::array();
  constexpr double kMaxExactInt = 9007199254740992.0;  // 2^53
  for (const auto& row : t.rows) {
    ordered_json out_row = ordered_json::array();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& c = row[i];
      if (i == 0) {
        out_row.push_back(render_cell(c));
        continue;
      }
      switch (c.kind) {
        case Cell::Kind::Text:
          out_row.push_back(c.text);
          break;
        case Cell::Kind::Empty:
          out_row.push_back("");
          break;
        case Cell::Kind::Number:
          if (std::nearbyint(c.number) == c.number &&
              std::abs(c.number) <= kMaxExactInt)
            out_row.push_back(static_cast<std::int64_t>(c.number));
          else
            out_row.push_back(c.number);
          break;
      }
    }
    data.push_back(std::move(out_row));
  }
  j["data"] = std::move(data);
  return j.dump();
}

namespace {

std::size_t find_row(const Table& t, const RowSelector& sel) {
  std::size_t col = t.column_index(sel.column);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (cell_matches(t.rows[r][col], sel.value)) return r;
  throw NoMatchingRow("no row where \"" + sel.column + "\" matches \"" +
                      sel.value + "\"");
}

}  // namespace

std::vector<Cell> execute_op(const Table& t, const TableOp& op) {
  switch (op.kind) {
    case TableOp::Kind::Lookup: {
      std::size_t col = t.column_index(op.column);
      std::size_t row = find_row(t, op.selector);
      return {t.rows[row][col]};
    }
    case TableOp::Kind::Aggregate: {
      std::size_t col = t.column_index(op.column);
      if (op.fn == AggregateFn::Count) {
        long long n = 0;
        for (const auto& row : t.rows)
          if (row[col].kind != Cell::Kind::Empty) ++n;
        return {Cell::make_number(static_cast<double>(n))};
      }
      std::vector<double> values;
      for (const auto& row : t.rows)
        if (row[col].kind == Cell::Kind::Number)
          values.push_back(row[col].number);
      if (values.empty())
        throw NonNumericAggregate("column \"" + op.column +
                                  "\" has no numeric cells");
      double result = 0.0;
      switch (op.fn) {
        case AggregateFn::Sum:
        case AggregateFn::Mean: {
          double sum = 0.0;
          for (double v : values) sum += v;
          result = (op.fn == AggregateFn::Sum)
                       ? sum
                       : sum / static_cast<double>(values.size());
          break;
        }
        case AggregateFn::Min:
          result = *std::min_element(values.begin(), values.end());
          break;
        case AggregateFn::Max:
          result = *std::max_element(values.begin(), values.end());
          break;
        case AggregateFn::Count:
          break;  // handled above
      }
      return {Cell::make_number(result)};
    }
    case TableOp::Kind::Compare: {
      std::size_t value_col = t.column_index(op.column);
      std::size_t row_a = find_row(t, op.selector);
      std::size_t row_b = find_row(t, op.selector_b);
      const Cell& va = t.rows[row_a][value_col];
      const Cell& vb = t.rows[row_b][value_col];
      if (va.kind != Cell::Kind::Number || vb.kind != Cell::Kind::Number)
        throw NonNumericAggregate("compare on non-numeric cells in \"" +
                                  op.column + "\"");
      bool a_wins = (op.relation == Relation::Greater) ? va.number >= vb.number
                                                       : va.number <= vb.number;
      std::size_t winner = a_wins ? row_a : row_b;
      const RowSelector& winner_sel = a_wins ? op.selector : op.selector_b;
      return {t.rows[winner][t.column_index(winner_sel.column)]};
    }
    case TableOp::Kind::FilterCount: {
      std::size_t col = t.column_index(op.column);
      long long n = 0;
      for (const auto& row : t.rows)
        if (cell_matches(row[col], op.selector.value)) ++n;
      return {Cell::make_number(static_cast<double>(n))};
    }
  }
  throw MalformedTable("unknown table operation");
}

}  // namespace tqa
