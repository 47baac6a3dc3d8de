#pragma once

#include <string>
#include <vector>

#include "tqa/table.hpp"

namespace tqa::testsupport {

/// The small year/gold fixture used across suites.
tqa::Table fixture_table_2x2();

/// Serialized line-delimited dataset (tablebench field layout) of 50 toy
/// questions over 10 deterministic tables. Every answer is nonzero; the
/// numeric-tolerance categories (DA-C, DA-Tr, DA-St) are assigned only to
/// numeric-answer questions. Reference answers are the grounded-executor
/// results.
std::string toy_suite_jsonl();

/// Number of questions in the toy suite.
constexpr int kToySuiteSize = 50;

/// Writes content to a fresh file under the system temp directory and
/// returns its path.
std::string write_temp_file(const std::string& name,
                            const std::string& content);

}  // namespace tqa::testsupport
