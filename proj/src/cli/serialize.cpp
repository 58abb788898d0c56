#include "cohortshap/cli/serialize.hpp"

#include <fstream>

#include "cohortshap/error.hpp"

namespace cohortshap::cli {

ordered_json named_values(const std::vector<std::string>& names,
                          const std::vector<double>& values) {
  ordered_json j = ordered_json::object();
  for (std::size_t k = 0; k < names.size() && k < values.size(); ++k) {
    j[names[k]] = values[k];
  }
  return j;
}

ordered_json to_json(const Attribution& a, const std::vector<std::string>& names) {
  ordered_json j;
  j["method"] = std::string(to_string(a.method));
  if (a.target) j["target"] = *a.target + 1;
  j["phi"] = named_values(names, a.phi);
  j["total"] = a.total;
  if (a.std_error) j["std_error"] = named_values(names, *a.std_error);
  if (a.permutations) j["permutations"] = *a.permutations;
  return j;
}

ordered_json to_json(const GlobalAttribution& g, const std::vector<std::string>& names) {
  ordered_json j;
  j["method"] = std::string(to_string(g.method));
  j["phi"] = named_values(names, g.phi_var);
  j["total"] = g.total_variance;
  return j;
}

ordered_json to_json(const SplitAttribution& s, const std::vector<std::string>& names) {
  ordered_json j = to_json(s.full, names);
  j["phi_realistic"] = named_values(names, s.phi_realistic);
  j["phi_unrealistic"] = named_values(names, s.phi_unrealistic);
  j["unrealistic_share"] = s.unrealistic_share();
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace cohortshap::cli
