#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortshap/aggregate.hpp"
#include "cohortshap/audit.hpp"
#include "cohortshap/shapley.hpp"

namespace cohortshap::cli {

using ordered_json = nlohmann::ordered_json;

// {name: value} in column order.
ordered_json named_values(const std::vector<std::string>& names,
                          const std::vector<double>& values);

// {method, target (1-based, when set), phi, total, std_error?, permutations?}
ordered_json to_json(const Attribution& a, const std::vector<std::string>& names);
// {method, phi, total}
ordered_json to_json(const GlobalAttribution& g, const std::vector<std::string>& names);
// Attribution fields plus phi_realistic, phi_unrealistic, unrealistic_share.
ordered_json to_json(const SplitAttribution& s, const std::vector<std::string>& names);

// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

std::string dump(const ordered_json& j);

}  // namespace cohortshap::cli
