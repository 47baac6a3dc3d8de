#pragma once

#include "json.hpp"
#include "tqa/table.hpp"

namespace tqa {

// Builds a Table from an already-parsed JSON document of the canonical
// {"columns", "data"} shape. Shared by parse_table and the dataset loader,
// which may override the null-token set used for cell typing.
Table table_from_json(const nlohmann::json& doc);
Table table_from_json(const nlohmann::json& doc,
                      const std::vector<std::string>& null_tokens);

}  // namespace tqa
