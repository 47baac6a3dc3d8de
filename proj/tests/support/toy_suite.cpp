#include "support/toy_suite.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tqa/backend.hpp"

namespace tqa::testsupport {

namespace {

using nlohmann::ordered_json;
using namespace tqa;

const std::vector<std::string> kCities = {
    "Lima",  "Oslo",  "Cairo", "Quito", "Accra", "Hanoi", "Sofia",
    "Rabat", "Dakar", "Tunis", "Seoul", "Kyoto", "Turin", "Porto",
    "Malmo", "Gdansk", "Bergen", "Leeds", "Basel", "Ghent"};

const std::vector<std::string> kNumericCats = {
    "NR-A", "NR-Cn", "NR-Ar", "NR-Cp", "NR-MH", "NR-T",
    "NR-Dm", "FC-MH", "DA-C",  "DA-Tr", "DA-St"};

const std::vector<std::string> kTextCats = {"FC-MB", "DA-I", "DA-Ds", "DA-An",
                                            "NR-Rk"};

std::string task_for_code(const std::string& code) {
  if (code.rfind("NR", 0) == 0) return "NumericalReasoning";
  if (code.rfind("FC", 0) == 0) return "FactChecking";
  return "DataAnalysis";
}

Table make_table(int i) {
  Table t;
  t.columns = {"city", "year", "gold", "rate"};
  int n_rows = 4 + (i % 3);
  for (int r = 0; r < n_rows; ++r) {
    std::vector<Cell> row;
    row.push_back(Cell::make_text(kCities[(i * 7 + r) % kCities.size()]));
    row.push_back(Cell::make_number(1980 + i * 5 + r));
    row.push_back(Cell::make_number(3 + r * 2 + (i % 4)));
    row.push_back(Cell::make_number(1.5 + r * 0.75 + i * 0.25));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string city_at(const Table& t, int row) {
  return t.rows[static_cast<std::size_t>(row)][0].text;
}

}  // namespace

Table fixture_table_2x2() {
  return parse_table(
      R"({"columns":["year","gold"],"data":[["2004","3"],["2008","5"]]})");
}

std::string toy_suite_jsonl() {
  std::ostringstream out;
  std::size_t numeric_cursor = 0;
  std::size_t text_cursor = 0;
  for (int i = 0; i < 10; ++i) {
    Table table = make_table(i);
    std::vector<std::pair<std::string, bool>> questions;  // question, numeric?
    if (i % 2 == 0) {
      questions = {
          {"What is the sum of gold?", true},
          {"Which city has the maximum gold?", false},
          {"What is the gold where city is " + city_at(table, 1) + "?", true},
          {"What is the mean of rate?", true},
          {"Which has the greater gold: " + city_at(table, 0) + " or " +
               city_at(table, 1) + "?",
           false},
      };
    } else {
      questions = {
          {"How many rows have city equal to " + city_at(table, 0) + "?",
           true},
          {"Which city has the minimum gold?", false},
          {"What is the rate where city is " + city_at(table, 2) + "?", true},
          {"What is the sum of rate?", true},
          {"Which has the greater rate: " + city_at(table, 0) + " or " +
               city_at(table, 1) + "?",
           false},
      };
    }
    for (std::size_t q = 0; q < questions.size(); ++q) {
      const auto& [question, numeric] = questions[q];
      std::string code =
          numeric ? kNumericCats[numeric_cursor++ % kNumericCats.size()]
                  : kTextCats[text_cursor++ % kTextCats.size()];
      ordered_json rec;
      char id[16];
      std::snprintf(id, sizeof(id), "t%02d-q%zu", i, q);
      rec["id"] = id;
      rec["qtype"] = task_for_code(code);
      rec["qsubtype"] = code;
      rec["question"] = question;
      rec["answer"] = toy_answer(table, question);
      rec["table"] = nlohmann::ordered_json::parse(serialize_for_prompt(table));
      out << rec.dump() << "\n";
    }
  }
  return out.str();
}

std::string write_temp_file(const std::string& name,
                            const std::string& content) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tqa-tests";
  fs::create_directories(dir);
  fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  return path.string();
}

}  // namespace tqa::testsupport
