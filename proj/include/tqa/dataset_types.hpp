#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tqa {

enum class Task { FactChecking, NumericalReasoning, DataAnalysis, FreeForm };

std::string task_name(Task t);
std::optional<Task> task_from_name(const std::string& name);

/// One benchmark category: the task plus a closed-set subtype code
/// (NR-A, FC-MB, DA-Tr, ... or FF). Unrecognized source subtypes bucket to
/// the synthetic code "UNK" under their task.
struct Category {
  Task task = Task::FactChecking;
  std::string subtype;

  bool operator==(const Category& other) const {
    return task == other.task && subtype == other.subtype;
  }
  bool is_unknown_subtype() const { return subtype == "UNK"; }
};

/// All known subtype codes with their task and long name.
struct SubtypeInfo {
  std::string code;
  Task task;
  std::string long_name;
};

const std::vector<SubtypeInfo>& subtype_registry();

/// Resolves a source subtype string (a code like "NR-A" or a long name like
/// "Aggregation", case- and punctuation-insensitive) under a task. Names
/// shared across tasks ("Multi-Hop") resolve through the task. Returns
/// nullopt for unrecognized strings.
std::optional<Category> resolve_subtype(Task task, const std::string& source);

}  // namespace tqa
