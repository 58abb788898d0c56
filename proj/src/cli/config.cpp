#include "cohortshap/cli/config.hpp"

#include <fstream>
#include <set>

#include "cohortshap/error.hpp"

namespace cohortshap::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

std::int64_t get_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<std::int64_t>();
}

std::size_t get_count(const json& j, const std::string& where) {
  const auto v = get_integer(j, where);
  if (v < 0) throw ConfigError(where + ": must not be negative");
  return static_cast<std::size_t>(v);
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(get_number(j[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<std::size_t> one_based(const json& j, const std::string& where) {
  std::vector<std::size_t> out;
  auto take = [&](const json& v, const std::string& at) {
    const auto t = get_integer(v, at);
    if (t < 1) throw ConfigError(at + ": subjects are numbered from 1");
    out.push_back(static_cast<std::size_t>(t - 1));
  };
  if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) {
      take(j[k], where + "[" + std::to_string(k) + "]");
    }
  } else {
    take(j, where);
  }
  return out;
}

std::map<std::string, SimilarityRule> parse_rule_map(
    const json& j, const std::string& where,
    std::optional<SimilarityRule>* fallback) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::map<std::string, SimilarityRule> out;
  for (const auto& [name, rule] : j.items()) {
    auto parsed = parse_rule(rule, where + "." + name);
    if (name == "*") {
      if (!fallback) throw ConfigError(where + ": '*' is not allowed here");
      *fallback = parsed;
    } else {
      out.emplace(name, parsed);
    }
  }
  return out;
}

ModelSpec parse_model(const json& j) {
  const std::string where = "model";
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError("model: expected an object with a 'kind'");
  }
  const auto kind = get_string(j["kind"], "model.kind");
  if (kind == "linear" || kind == "logistic") {
    only_keys(j, where, {"kind", "coefficients", "intercept"});
    if (!j.contains("coefficients")) throw ConfigError("model.coefficients is required");
    auto coef = get_numbers(j["coefficients"], "model.coefficients");
    const double b0 = j.contains("intercept") ? get_number(j["intercept"], "model.intercept") : 0.0;
    if (kind == "linear") return LinearSpec{std::move(coef), b0};
    return LogisticSpec{std::move(coef), b0};
  }
  if (kind == "external") {
    only_keys(j, where, {"kind", "command", "workers"});
    if (!j.contains("command")) throw ConfigError("model.command is required");
    ExternalSpec s{get_string(j["command"], "model.command"), 1};
    if (j.contains("workers")) s.workers = get_count(j["workers"], "model.workers");
    if (s.workers == 0) throw ConfigError("model.workers must be at least 1");
    return s;
  }
  if (kind == "fit_logistic") {
    only_keys(j, where, {"kind", "label", "max_iterations", "tolerance"});
    if (!j.contains("label")) throw ConfigError("model.label is required");
    FitLogisticSpec s{get_string(j["label"], "model.label")};
    if (j.contains("max_iterations")) {
      s.max_iterations = static_cast<int>(get_count(j["max_iterations"], "model.max_iterations"));
    }
    if (j.contains("tolerance")) s.tolerance = get_number(j["tolerance"], "model.tolerance");
    return s;
  }
  if (kind == "fit_linear") {
    only_keys(j, where, {"kind", "response", "exclude"});
    if (!j.contains("response")) throw ConfigError("model.response is required");
    FitLinearSpec s{get_string(j["response"], "model.response"), {}};
    if (j.contains("exclude")) {
      if (!j["exclude"].is_array()) throw ConfigError("model.exclude: expected an array");
      for (const auto& e : j["exclude"]) s.exclude.push_back(get_string(e, "model.exclude"));
    }
    return s;
  }
  throw ConfigError("model.kind: unknown kind '" + kind +
                    "' (expected linear, logistic, external, fit_logistic or fit_linear)");
}

PredictionSpec parse_predictions(const json& j, const std::filesystem::path& base) {
  PredictionSpec p;
  if (j.is_string() && j.get<std::string>() == "model") return p;
  only_keys(j, "predictions", {"column", "file"});
  if (!j.contains("column")) throw ConfigError("predictions.column is required");
  p.column = get_string(j["column"], "predictions.column");
  if (j.contains("file")) {
    p.source = PredictionSpec::Source::file;
    p.file = resolve(base, get_string(j["file"], "predictions.file"));
  } else {
    p.source = PredictionSpec::Source::column;
  }
  return p;
}

EngineConfig parse_engine(const json& j) {
  EngineConfig e;
  if (j.is_string()) {
    const auto kind = j.get<std::string>();
    if (kind == "exact") return e;
    if (kind == "mc") {
      e.kind = EngineKind::mc;
      return e;
    }
    throw ConfigError("engine: expected 'exact' or 'mc'");
  }
  only_keys(j, "engine", {"kind", "permutations", "seed", "exact_cap"});
  if (j.contains("kind")) e = parse_engine(j["kind"]);
  if (j.contains("permutations")) e.permutations = get_count(j["permutations"], "engine.permutations");
  if (j.contains("seed")) e.seed = get_count(j["seed"], "engine.seed");
  if (j.contains("exact_cap")) {
    e.exact_cap = static_cast<int>(get_count(j["exact_cap"], "engine.exact_cap"));
  }
  return e;
}

AuditSpec parse_audit(const json& j) {
  only_keys(j, "audit", {"thresholds", "fractions", "runs", "seed", "samples",
                         "similarity", "split_targets", "split_method"});
  AuditSpec a;
  if (j.contains("thresholds")) a.thresholds = get_numbers(j["thresholds"], "audit.thresholds");
  if (j.contains("fractions")) a.fractions = get_numbers(j["fractions"], "audit.fractions");
  if (j.contains("runs")) a.runs = get_count(j["runs"], "audit.runs");
  if (j.contains("seed")) a.seed = get_count(j["seed"], "audit.seed");
  if (j.contains("samples")) a.samples = get_count(j["samples"], "audit.samples");
  if (j.contains("similarity")) {
    a.rules = parse_rule_map(j["similarity"], "audit.similarity", nullptr);
  }
  if (j.contains("split_targets")) a.split_targets = one_based(j["split_targets"], "audit.split_targets");
  if (j.contains("split_method")) {
    a.split_method = parse_method(get_string(j["split_method"], "audit.split_method"));
    if (a.split_method != Method::bs && a.split_method != Method::bs2 &&
        a.split_method != Method::abs && a.split_method != Method::abs2) {
      throw ConfigError("audit.split_method must be bs, bs2, abs or abs2");
    }
  }
  if (a.runs < 1) throw ConfigError("audit.runs must be at least 1");
  for (double t : a.thresholds) {
    if (!(t >= 0.0)) throw ConfigError("audit.thresholds must be nonnegative");
  }
  for (double f : a.fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("audit.fractions must lie in (0, 1)");
  }
  return a;
}

CubeSpec parse_cube(const json& j) {
  only_keys(j, "cube", {"d", "values", "marginals", "weights"});
  if (!j.contains("values")) throw ConfigError("cube.values is required");
  CubeSpec c;
  c.values = get_numbers(j["values"], "cube.values");
  if (j.contains("d")) {
    c.d = static_cast<int>(get_count(j["d"], "cube.d"));
  } else {
    while ((std::size_t{1} << c.d) < c.values.size() && c.d < 30) ++c.d;
  }
  if (c.d < 1 || c.d > kDefaultExactCap || c.values.size() != (std::size_t{1} << c.d)) {
    throw ConfigError("cube.values must hold 2^d values for 1 <= d <= " +
                      std::to_string(kDefaultExactCap) + " (got " +
                      std::to_string(c.values.size()) + ")");
  }
  if (j.contains("marginals")) c.marginals = get_numbers(j["marginals"], "cube.marginals");
  if (j.contains("weights")) c.weights = get_numbers(j["weights"], "cube.weights");
  if (c.marginals && c.weights) throw ConfigError("cube: give marginals or weights, not both");
  return c;
}

}  // namespace

SimilarityRule parse_rule(const json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "identity") return IdentityRule{};
    throw ConfigError(where + ": only 'identity' may be given as a string");
  }
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError(where + ": expected an object with a 'kind'");
  }
  const auto kind = get_string(j["kind"], where + ".kind");
  if (kind == "identity") {
    only_keys(j, where, {"kind"});
    return IdentityRule{};
  }
  if (kind == "abs") {
    only_keys(j, where, {"kind", "delta"});
    if (!j.contains("delta")) throw ConfigError(where + ".delta is required");
    return AbsoluteThreshold{get_number(j["delta"], where + ".delta")};
  }
  if (kind == "relative") {
    only_keys(j, where, {"kind", "delta"});
    if (!j.contains("delta")) throw ConfigError(where + ".delta is required");
    return RelativeThreshold{get_number(j["delta"], where + ".delta")};
  }
  if (kind == "range_fraction") {
    only_keys(j, where, {"kind", "fraction", "lo_q", "hi_q"});
    RangeFraction r;
    if (j.contains("fraction")) r.fraction = get_number(j["fraction"], where + ".fraction");
    if (j.contains("lo_q")) r.lo_q = get_number(j["lo_q"], where + ".lo_q");
    if (j.contains("hi_q")) r.hi_q = get_number(j["hi_q"], where + ".hi_q");
    return r;
  }
  throw ConfigError(where + ".kind: unknown kind '" + kind +
                    "' (expected identity, abs, range_fraction or relative)");
}

std::vector<SimilarityRule> rules_for_schema(
    const std::vector<ColumnSchema>& schema,
    const std::map<std::string, SimilarityRule>& by_name,
    const std::optional<SimilarityRule>& fallback) {
  for (const auto& [name, rule] : by_name) {
    bool found = false;
    for (const auto& c : schema) found = found || c.name == name;
    if (!found) throw ConfigError("similarity: no column named '" + name + "'");
  }
  std::vector<SimilarityRule> rules;
  for (const auto& c : schema) {
    if (auto it = by_name.find(c.name); it != by_name.end()) {
      rules.push_back(it->second);
    } else if (c.kind != ColumnKind::numeric) {
      rules.push_back(IdentityRule{});
    } else if (fallback) {
      rules.push_back(*fallback);
    } else {
      throw ConfigError("similarity: no rule for column '" + c.name +
                        "' and no '*' default");
    }
  }
  return rules;
}

std::optional<std::vector<std::size_t>> parse_targets(const std::string& text) {
  if (text == "all") return std::nullopt;
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  auto number = [&](const std::string& s) -> std::size_t {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 1) {
      throw ConfigError("targets: '" + s + "' is not a subject number (1-based)");
    }
    return static_cast<std::size_t>(v);
  };
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (const auto dash = item.find('-'); dash != std::string::npos) {
      const auto lo = number(item.substr(0, dash));
      const auto hi = number(item.substr(dash + 1));
      if (hi < lo) throw ConfigError("targets: empty range '" + item + "'");
      for (auto t = lo; t <= hi; ++t) out.push_back(t - 1);
    } else {
      out.push_back(number(item) - 1);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  only_keys(j, "config", {"data", "schema", "similarity", "predictions", "model",
                          "method", "targets", "engine", "baseline", "audit",
                          "cube", "per_subject", "threads", "out"});
  RunConfig c;
  if (j.contains("data")) c.data = resolve(base_dir, get_string(j["data"], "data"));
  if (j.contains("schema")) {
    const auto& s = j["schema"];
    if (!s.is_array()) throw ConfigError("schema: expected an array of {name, kind}");
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::string where = "schema[" + std::to_string(k) + "]";
      only_keys(s[k], where, {"name", "kind"});
      if (!s[k].contains("name")) throw ConfigError(where + ".name is required");
      ColumnSchema col{get_string(s[k]["name"], where + ".name"), ColumnKind::numeric};
      if (s[k].contains("kind")) {
        try {
          col.kind = parse_column_kind(get_string(s[k]["kind"], where + ".kind"));
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& e) {
          throw ConfigError(where + ".kind: " + e.what());
        }
      }
      c.schema.push_back(std::move(col));
    }
  }
  if (j.contains("similarity")) {
    c.similarity = parse_rule_map(j["similarity"], "similarity", &c.default_rule);
  }
  if (j.contains("predictions")) c.predictions = parse_predictions(j["predictions"], base_dir);
  if (j.contains("model")) c.model = parse_model(j["model"]);
  if (j.contains("method")) c.method = parse_method(get_string(j["method"], "method"));
  if (j.contains("targets")) {
    const auto& t = j["targets"];
    if (t.is_string()) {
      c.targets = parse_targets(t.get<std::string>());
    } else {
      c.targets = one_based(t, "targets");
    }
  }
  if (j.contains("engine")) c.engine = parse_engine(j["engine"]);
  if (j.contains("baseline")) {
    const auto& b = j["baseline"];
    if (b.is_string()) {
      if (b.get<std::string>() != "mean") {
        throw ConfigError("baseline: expected 'mean' or an array of values");
      }
    } else {
      c.baseline = get_numbers(b, "baseline");
    }
  }
  if (j.contains("audit")) c.audit = parse_audit(j["audit"]);
  if (j.contains("cube")) c.cube = parse_cube(j["cube"]);
  if (j.contains("per_subject")) {
    if (!j["per_subject"].is_boolean()) throw ConfigError("per_subject: expected true or false");
    c.per_subject = j["per_subject"].get<bool>();
  }
  if (j.contains("threads")) c.threads = static_cast<int>(get_count(j["threads"], "threads"));
  if (j.contains("out")) c.out = resolve(base_dir, get_string(j["out"], "out"));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

void apply_overrides(RunConfig& c, const Overrides& o) {
  if (o.data) c.data = *o.data;
  if (o.method) c.method = parse_method(*o.method);
  if (o.engine) {
    if (*o.engine == "exact") {
      c.engine.kind = EngineKind::exact;
    } else if (*o.engine == "mc") {
      c.engine.kind = EngineKind::mc;
    } else {
      throw ConfigError("--engine: expected 'exact' or 'mc'");
    }
  }
  if (o.permutations) c.engine.permutations = *o.permutations;
  if (o.seed) {
    c.engine.seed = *o.seed;
    c.audit.seed = *o.seed;
  }
  if (o.threads) c.threads = *o.threads;
  if (o.out) c.out = *o.out;
  if (o.targets) c.targets = parse_targets(*o.targets);
}

}  // namespace cohortshap::cli
