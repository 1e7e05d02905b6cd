#pragma once

#include <string>
#include <vector>

#include "promptstream/continual.hpp"

namespace promptstream {

// Markdown comparison table over run records: mode, AA, FM, parameter ratio
// and the config keys on which the records differ.
std::string render_report_table(const std::vector<RunRecord>& records);

// CSV of one record's accuracy matrix; exactly T(T+1)/2 populated cells.
std::string render_matrix_csv(const RunRecord& record);

// Flattened dotted-path view of a config snapshot, for diffing.
std::vector<std::pair<std::string, std::string>> flatten_config(const nlohmann::json& config);
std::vector<std::string> differing_config_keys(const std::vector<RunRecord>& records);

}  // namespace promptstream
