#include <cmath>
#include <random>

#include "doctest.h"
#include "support/toy_suite.hpp"
#include "tqa/table.hpp"

using namespace tqa;

namespace {

// Independent brute-force executor: naive loops, no shared code with
// execute_op beyond the Cell type.
std::vector<Cell> brute_force(const Table& t, const TableOp& op) {
  auto col_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (t.columns[i] == name) return i;
    throw ColumnNotFound(name);
  };
  auto matches = [&](const Cell& c, const std::string& key) {
    return render_cell(c) == key;
  };
  switch (op.kind) {
    case TableOp::Kind::Aggregate: {
      std::size_t c = col_of(op.column);
      if (op.fn == AggregateFn::Count) {
        double n = 0;
        for (const auto& row : t.rows)
          if (row[c].kind != Cell::Kind::Empty) n += 1;
        return {Cell::make_number(n)};
      }
      std::vector<double> vals;
      for (const auto& row : t.rows)
        if (row[c].kind == Cell::Kind::Number) vals.push_back(row[c].number);
      if (vals.empty()) throw NonNumericAggregate(op.column);
      double out = vals[0];
      if (op.fn == AggregateFn::Sum || op.fn == AggregateFn::Mean) {
        out = 0;
        for (double v : vals) out += v;
        if (op.fn == AggregateFn::Mean) out /= static_cast<double>(vals.size());
      } else {
        for (double v : vals)
          out = op.fn == AggregateFn::Min ? std::min(out, v) : std::max(out, v);
      }
      return {Cell::make_number(out)};
    }
    case TableOp::Kind::Lookup: {
      std::size_t key_col = col_of(op.selector.column);
      std::size_t ret_col = col_of(op.column);
      for (const auto& row : t.rows)
        if (matches(row[key_col], op.selector.value)) return {row[ret_col]};
      throw NoMatchingRow(op.selector.value);
    }
    case TableOp::Kind::FilterCount: {
      std::size_t c = col_of(op.column);
      double n = 0;
      for (const auto& row : t.rows)
        if (matches(row[c], op.selector.value)) n += 1;
      return {Cell::make_number(n)};
    }
    case TableOp::Kind::Compare: {
      std::size_t value_col = col_of(op.column);
      std::size_t key_a = col_of(op.selector.column);
      std::size_t key_b = col_of(op.selector_b.column);
      const std::vector<Cell>* row_a = nullptr;
      const std::vector<Cell>* row_b = nullptr;
      for (const auto& row : t.rows) {
        if (!row_a && matches(row[key_a], op.selector.value)) row_a = &row;
        if (!row_b && matches(row[key_b], op.selector_b.value)) row_b = &row;
      }
      if (!row_a || !row_b) throw NoMatchingRow("compare");
      if ((*row_a)[value_col].kind != Cell::Kind::Number ||
          (*row_b)[value_col].kind != Cell::Kind::Number)
        throw NonNumericAggregate(op.column);
      double va = (*row_a)[value_col].number, vb = (*row_b)[value_col].number;
      bool a_wins = op.relation == Relation::Greater ? va >= vb : va <= vb;
      const std::vector<Cell>& winner = a_wins ? *row_a : *row_b;
      return {winner[a_wins ? key_a : key_b]};
    }
  }
  throw MalformedTable("bad op");
}

Table random_table(std::mt19937_64& rng, int max_rows, int max_cols) {
  Table t;
  int n_cols = 1 + static_cast<int>(rng() % max_cols);
  int n_rows = static_cast<int>(rng() % (max_rows + 1));
  for (int c = 0; c < n_cols; ++c) t.columns.push_back("c" + std::to_string(c));
  for (int r = 0; r < n_rows; ++r) {
    std::vector<Cell> row;
    for (int c = 0; c < n_cols; ++c) {
      switch (rng() % 4) {
        case 0: row.push_back(Cell::make_empty()); break;
        case 1:
          row.push_back(Cell::make_text("w" + std::to_string(rng() % 8)));
          break;
        case 2:
          row.push_back(
              Cell::make_number(static_cast<double>(rng() % 200) - 100));
          break;
        default:
          row.push_back(Cell::make_number(
              (static_cast<double>(rng() % 4000) - 2000) / 8.0));
          break;
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

TEST_CASE("infer_cell types raw strings") {
  CHECK(infer_cell("1,234") == Cell::make_number(1234));
  CHECK(infer_cell("") == Cell::make_empty());
  CHECK(infer_cell("-") == Cell::make_empty());
  CHECK(infer_cell("N/A") == Cell::make_empty());
  CHECK(infer_cell("n/a") == Cell::make_empty());
  CHECK(infer_cell("Helsinki") == Cell::make_text("Helsinki"));
  CHECK(infer_cell("  Helsinki  ") == Cell::make_text("Helsinki"));
  CHECK(infer_cell("$5") == Cell::make_number(5));
  CHECK(infer_cell("$1,234.50") == Cell::make_number(1234.5));
  CHECK(infer_cell("15%") == Cell::make_number(0.15));
  CHECK(infer_cell("-3.5") == Cell::make_number(-3.5));
  CHECK(infer_cell("+7") == Cell::make_number(7));
  CHECK(infer_cell("1e3") == Cell::make_number(1000));
  // grouping pattern violations stay text
  CHECK(infer_cell("1,23") == Cell::make_text("1,23"));
  CHECK(infer_cell("12,34,56") == Cell::make_text("12,34,56"));
  // inf/nan spellings never become numbers
  CHECK(infer_cell("inf") == Cell::make_text("inf"));
  CHECK(infer_cell("nan") == Cell::make_text("nan"));
  CHECK(infer_cell("-inf") == Cell::make_text("-inf"));
  // multibyte currency glyphs
  CHECK(infer_cell("\xE2\x82\xAC" "3.50") == Cell::make_number(3.5));  // €
  CHECK(infer_cell("\xC2\xA3" "1,000") == Cell::make_number(1000));    // £
  CHECK(infer_cell("\xC2\xA5" "12") == Cell::make_number(12));         // ¥
}

TEST_CASE("infer_cell is deterministic") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    for (std::size_t k = 0; k < rng() % 12; ++k)
      s.push_back(static_cast<char>(' ' + rng() % 95));
    CHECK(infer_cell(s) == infer_cell(s));
  }
}

TEST_CASE("parse_table basic shapes") {
  Table empty_rows = parse_table(R"({"columns":["a"],"data":[]})");
  CHECK(empty_rows.n_columns() == 1);
  CHECK(empty_rows.n_rows() == 0);

  Table t = testsupport::fixture_table_2x2();
  CHECK(t.n_columns() == 2);
  CHECK(t.n_rows() == 2);
  CHECK(t.rows[0][1] == Cell::make_number(3));
  CHECK(t.rows[1][1] == Cell::make_number(5));

  CHECK_THROWS_AS(parse_table(R"({"columns":["a","b"],"data":[["x"]]})"),
                  RaggedRows);
  CHECK_THROWS_AS(parse_table("not json"), MalformedTable);
  CHECK_THROWS_AS(parse_table(R"({"data":[]})"), MalformedTable);
  CHECK_THROWS_AS(parse_table(R"({"columns":[],"data":[]})"), MalformedTable);
  CHECK_THROWS_AS(parse_table(R"({"columns":["a"],"data":[[["nested"]]]})"),
                  MalformedTable);
  CHECK(parse_table(R"({"columns":["a"],"data":[[null]]})").rows[0][0] ==
        Cell::make_empty());
}

TEST_CASE("duplicate column names are disambiguated in order") {
  Table t = parse_table(
      R"({"columns":["a","a","a","b"],"data":[["1","2","3","4"]]})");
  CHECK(t.columns == std::vector<std::string>{"a", "a#2", "a#3", "b"});
  // disambiguated names survive a round trip unchanged
  CHECK(parse_table(serialize_for_prompt(t)) == t);
  // later columns colliding with a generated name get suffixed in turn
  Table clash = parse_table(
      R"({"columns":["a","a","a#2"],"data":[["1","2","3"]]})");
  CHECK(clash.columns == std::vector<std::string>{"a", "a#2", "a#2#2"});
}

TEST_CASE("serialize_for_prompt matches the canonical form") {
  Table t = testsupport::fixture_table_2x2();
  CHECK(serialize_for_prompt(t) ==
        R"({"columns":["year","gold"],"data":[["2004",3],["2008",5]]})");

  Table with_empty =
      parse_table(R"({"columns":["a","b"],"data":[["x","-"]]})");
  CHECK(serialize_for_prompt(with_empty) ==
        R"({"columns":["a","b"],"data":[["x",""]]})");
}

TEST_CASE("serialize round-trips and is idempotent") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    Table t = random_table(rng, 8, 5);
    std::string s = serialize_for_prompt(t);
    Table back = parse_table(s);
    CHECK(back == t);
    CHECK(serialize_for_prompt(back) == s);
  }
}

TEST_CASE("execute_op on the fixture") {
  Table t = testsupport::fixture_table_2x2();
  auto sum = execute_op(t, TableOp::aggregate("gold", AggregateFn::Sum));
  CHECK(sum.at(0) == Cell::make_number(8));
  auto count = execute_op(t, TableOp::aggregate("gold", AggregateFn::Count));
  CHECK(count.at(0) == Cell::make_number(2));
  auto looked =
      execute_op(t, TableOp::lookup(RowSelector{"year", "2004"}, "gold"));
  CHECK(looked.at(0) == Cell::make_number(3));

  CHECK_THROWS_AS(execute_op(t, TableOp::aggregate("nope", AggregateFn::Sum)),
                  ColumnNotFound);
  CHECK_THROWS_AS(
      execute_op(t, TableOp::lookup(RowSelector{"year", "1999"}, "gold")),
      NoMatchingRow);
  Table text_only = parse_table(R"({"columns":["a"],"data":[["x"],["y"]]})");
  CHECK_THROWS_AS(
      execute_op(text_only, TableOp::aggregate("a", AggregateFn::Sum)),
      NonNumericAggregate);
}

TEST_CASE("column statistics identities") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    Table t = random_table(rng, 20, 6);
    for (const auto& col : t.columns) {
      bool has_numeric = false;
      for (const auto& row : t.rows)
        if (row[t.column_index(col)].kind == Cell::Kind::Number)
          has_numeric = true;
      if (!has_numeric) continue;
      double mn = execute_op(t, TableOp::aggregate(col, AggregateFn::Min))
                      .at(0).number;
      double mx = execute_op(t, TableOp::aggregate(col, AggregateFn::Max))
                      .at(0).number;
      double mean = execute_op(t, TableOp::aggregate(col, AggregateFn::Mean))
                        .at(0).number;
      double sum = execute_op(t, TableOp::aggregate(col, AggregateFn::Sum))
                       .at(0).number;
      int numeric_count = 0;
      for (const auto& row : t.rows)
        if (row[t.column_index(col)].kind == Cell::Kind::Number)
          ++numeric_count;
      CHECK(mn <= mean + 1e-12);
      CHECK(mean <= mx + 1e-12);
      CHECK(sum == doctest::Approx(mean * numeric_count).epsilon(1e-9));
    }
  }
}

TEST_CASE("execute_op agrees with the brute-force executor") {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (int i = 0; i < 120; ++i) {
    Table t = random_table(rng, 20, 10);
    std::vector<TableOp> ops;
    for (const auto& col : t.columns) {
      for (AggregateFn fn : {AggregateFn::Sum, AggregateFn::Mean,
                             AggregateFn::Min, AggregateFn::Max,
                             AggregateFn::Count})
        ops.push_back(TableOp::aggregate(col, fn));
      if (!t.rows.empty()) {
        // Lookups and counts keyed on every distinct rendering in the column.
        for (const auto& row : t.rows) {
          std::string key = render_cell(row[t.column_index(col)]);
          ops.push_back(
              TableOp::lookup(RowSelector{col, key}, t.columns.back()));
          ops.push_back(TableOp::filter_count(col, key));
        }
      }
    }
    if (t.rows.size() >= 2) {
      std::string a = render_cell(t.rows[0][0]);
      std::string b = render_cell(t.rows[1][0]);
      for (const auto& col : t.columns)
        for (Relation rel : {Relation::Greater, Relation::Less})
          ops.push_back(TableOp::compare(RowSelector{t.columns[0], a},
                                         RowSelector{t.columns[0], b}, col,
                                         rel));
    }
    for (const auto& op : ops) {
      std::vector<Cell> expected, actual;
      bool expected_threw = false, actual_threw = false;
      std::string expected_code, actual_code;
      try {
        expected = brute_force(t, op);
      } catch (const Error& e) {
        expected_threw = true;
        expected_code = e.code();
      }
      try {
        actual = execute_op(t, op);
      } catch (const Error& e) {
        actual_threw = true;
        actual_code = e.code();
      }
      REQUIRE(expected_threw == actual_threw);
      if (expected_threw) {
        CHECK(expected_code == actual_code);
      } else {
        CHECK(expected == actual);
      }
      ++checked;
    }
  }
  CHECK(checked > 5000);
}
