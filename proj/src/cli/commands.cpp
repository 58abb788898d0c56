#include "cohortshap/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cohortshap/aggregate.hpp"
#include "cohortshap/audit.hpp"
#include "cohortshap/cli/serialize.hpp"
#include "cohortshap/csv.hpp"
#include "cohortshap/cube.hpp"
#include "cohortshap/error.hpp"
#include "cohortshap/format.hpp"
#include "cohortshap/parallel.hpp"

namespace cohortshap::cli {

namespace {

class PhaseTimer {
 public:
  PhaseTimer(std::ostream& log, std::string phase)
      : log_(log), phase_(std::move(phase)), start_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
    log_ << "time " << phase_ << ": " << std::fixed << std::setprecision(3)
         << dt.count() << " s\n";
    log_.unsetf(std::ios::floatfield);
  }

 private:
  std::ostream& log_;
  std::string phase_;
  std::chrono::steady_clock::time_point start_;
};

bool needs_model(Method m) {
  return m == Method::bs || m == Method::bs2 || m == Method::abs || m == Method::abs2;
}

void require_data(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("no data file given (config 'data' or --data)");
}

Method local_method(const RunConfig& c) {
  const Method m = c.method.value_or(Method::cs);
  if (m == Method::var) {
    throw ConfigError("method 'var' is global; use the 'global' command");
  }
  if (needs_model(m) && !c.model) {
    throw ConfigError("method '" + std::string(to_string(m)) +
                      "' needs a model (config 'model')");
  }
  if ((m == Method::cs || m == Method::cs2) && !c.predictions && !c.model) {
    throw ConfigError("cohort methods need predictions (config 'predictions' or 'model')");
  }
  return m;
}

void check_engine(const RunConfig& c, std::size_t d) {
  if (c.engine.kind == EngineKind::exact &&
      d > static_cast<std::size_t>(c.engine.exact_cap)) {
    throw ConfigError("the exact engine handles at most " +
                      std::to_string(c.engine.exact_cap) + " features (data has " +
                      std::to_string(d) + "); use --engine mc");
  }
  if (c.engine.kind == EngineKind::mc && c.engine.permutations == 1) {
    throw ConfigError("the permutation engine needs at least 2 permutations");
  }
}

void check_targets(const std::vector<std::size_t>& targets, std::size_t n) {
  for (std::size_t t : targets) {
    if (t >= n) {
      throw ConfigError("target " + std::to_string(t + 1) + " is outside 1.." +
                        std::to_string(n));
    }
  }
}

SimilarityRules build_rules(const Dataset& ds,
                            const std::map<std::string, SimilarityRule>& by_name,
                            const std::optional<SimilarityRule>& fallback) {
  try {
    return SimilarityRules(ds, rules_for_schema(ds.schema(), by_name, fallback));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("similarity: ") + e.what());
  }
}

std::size_t column_of(const Dataset& ds, const std::string& name) {
  auto j = ds.find_column(name);
  if (!j) throw ConfigError("no column named '" + name + "' in the schema");
  return *j;
}

std::shared_ptr<const Model> build_model(const ModelSpec& spec, const Dataset& ds,
                                         const CsvTable& table) {
  const std::size_t d = ds.cols();
  auto check_len = [&](std::size_t k) {
    if (k != d) {
      throw ConfigError("model has " + std::to_string(k) +
                        " coefficients but the schema has " + std::to_string(d) +
                        " columns");
    }
  };
  if (auto* s = std::get_if<LinearSpec>(&spec)) {
    check_len(s->coefficients.size());
    return std::make_shared<LinearModel>(s->coefficients, s->intercept);
  }
  if (auto* s = std::get_if<LogisticSpec>(&spec)) {
    check_len(s->coefficients.size());
    return std::make_shared<LogisticModel>(s->coefficients, s->intercept);
  }
  if (auto* s = std::get_if<ExternalSpec>(&spec)) {
    return std::make_shared<ExternalCommandModel>(s->command, d, s->workers);
  }
  if (auto* s = std::get_if<FitLogisticSpec>(&spec)) {
    const auto labels = numeric_column(table, s->label);
    return std::make_shared<LogisticModel>(
        fit_logistic(ds, labels, {s->max_iterations, s->tolerance}));
  }
  const auto& s = std::get<FitLinearSpec>(spec);
  std::vector<std::size_t> excluded;
  for (const auto& name : s.exclude) excluded.push_back(column_of(ds, name));
  return std::make_shared<LinearModel>(
      fit_linear(ds, numeric_column(table, s.response), excluded));
}

std::vector<std::size_t> targets_or_all(const RunConfig& c, std::size_t n) {
  auto t = c.targets ? *c.targets : all_targets(n);
  check_targets(t, n);
  return t;
}

void emit(const RunConfig& c, const std::string& file, const std::string& text,
          std::ostream& out) {
  if (c.out) {
    write_text(*c.out / file, text);
  } else {
    out << text;
  }
}

}  // namespace

std::vector<ColumnSchema> resolve_schema(const RunConfig& config,
                                         const CsvTable& table) {
  if (!config.schema.empty()) return config.schema;
  std::set<std::string> skip;
  if (config.predictions && !config.predictions->column.empty() &&
      config.predictions->source == PredictionSpec::Source::column) {
    skip.insert(config.predictions->column);
  }
  if (config.model) {
    if (auto* s = std::get_if<FitLogisticSpec>(&*config.model)) skip.insert(s->label);
    if (auto* s = std::get_if<FitLinearSpec>(&*config.model)) skip.insert(s->response);
  }
  std::vector<ColumnSchema> schema;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (skip.count(name)) continue;
    bool numeric = true;
    for (const auto& rec : table.records) {
      if (c < rec.size() && !parse_double(rec[c])) {
        numeric = false;
        break;
      }
    }
    schema.push_back({name, numeric ? ColumnKind::numeric : ColumnKind::categorical});
  }
  if (schema.empty()) throw ConfigError("the data file has no predictor columns");
  return schema;
}

Workspace load_data(const RunConfig& config) {
  require_data(config);
  Workspace w;
  w.table = read_csv(config.data);
  const auto schema = resolve_schema(config, w.table);
  std::optional<std::string> ycol;
  if (config.predictions && config.predictions->source == PredictionSpec::Source::column) {
    ycol = config.predictions->column;
  }
  try {
    w.data = std::make_unique<Dataset>(dataset_from_table(w.table, schema, ycol));
  } catch (const DataError& e) {
    throw DataError(config.data.string() + ": " + e.what());
  }
  if (config.baseline && config.baseline->size() != w.data->cols()) {
    throw ConfigError("baseline has " + std::to_string(config.baseline->size()) +
                      " values but the schema has " + std::to_string(w.data->cols()) +
                      " columns");
  }
  return w;
}

void attach_model(const RunConfig& config, Workspace& w) {
  if (config.model) w.model = build_model(*config.model, *w.data, w.table);
  if (config.predictions && config.predictions->source == PredictionSpec::Source::file) {
    const auto t = read_csv(config.predictions->file);
    *w.data = attach_predictions(*w.data, numeric_column(t, config.predictions->column));
  } else if (!w.data->has_predictions() && w.model) {
    *w.data = attach_predictions(*w.data,
                                 predict(*w.model, PointMatrix::from_dataset(*w.data)));
  }
}

Workspace load_workspace(const RunConfig& config) {
  Workspace w = load_data(config);
  attach_model(config, w);
  return w;
}

int cmd_local(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const Method method = local_method(config);
  Workspace w = load_data(config);
  check_engine(config, w.data->cols());
  const auto targets = targets_or_all(config, w.data->rows());
  LocalGameFactory::Inputs inputs;
  if (method == Method::cs || method == Method::cs2) {
    inputs.rules = build_rules(*w.data, config.similarity, config.default_rule);
  }
  attach_model(config, w);
  const Dataset& ds = *w.data;
  inputs.model = w.model;
  if (config.baseline) inputs.baseline = *config.baseline;

  std::vector<Attribution> attributions;
  {
    PhaseTimer t(log, "attribute " + std::string(to_string(method)));
    const LocalGameFactory factory(ds, method, std::move(inputs));
    attributions = attribute_targets(factory, targets, config.engine);
  }
  const auto names = ds.column_names();
  ordered_json j;
  j["method"] = std::string(to_string(method));
  j["features"] = names;
  j["attributions"] = ordered_json::array();
  for (const auto& a : attributions) j["attributions"].push_back(to_json(a, names));
  emit(config, "attributions.json", dump(j), out);

  if (!config.targets && config.out) {
    std::ostringstream csv;
    write_panel_csv(make_panel(ds, attributions), csv);
    write_text(*config.out / "panel.csv", csv.str());
  }
  return 0;
}

int cmd_global(const RunConfig& config, std::ostream& out, std::ostream& log) {
  if (config.method && *config.method != Method::var) {
    throw ConfigError("the global command computes method 'var' only");
  }
  if (!config.predictions && !config.model) {
    throw ConfigError("variance Shapley needs predictions (config 'predictions' or 'model')");
  }
  Workspace w = load_data(config);
  check_engine(config, w.data->cols());
  const auto rules = build_rules(*w.data, config.similarity, config.default_rule);
  {
    PhaseTimer t(log, "model");
    attach_model(config, w);
  }
  const Dataset& ds = *w.data;

  GlobalAttribution direct, aggregated;
  {
    PhaseTimer t(log, "variance shapley");
    direct = variance_shapley(ds, rules, config.engine);
  }
  {
    PhaseTimer t(log, "squared cohort shapley, all subjects");
    aggregated = aggregate_squared_cs(ds, rules, config.engine, config.per_subject);
  }
  const double residual = disaggregation_residual(direct, aggregated);
  log << "disaggregation residual: " << format_double(residual) << "\n";

  const auto names = ds.column_names();
  ordered_json j = to_json(direct, names);
  j["aggregated_phi"] = named_values(names, aggregated.phi_var);
  j["disaggregation_residual"] = residual;
  emit(config, "global.json", dump(j), out);

  if (config.per_subject && config.out && aggregated.per_subject) {
    std::ostringstream csv;
    write_panel_csv(make_panel(ds, *aggregated.per_subject), csv);
    write_text(*config.out / "per_subject.csv", csv.str());
  }
  return 0;
}

int cmd_audit(const RunConfig& config, std::ostream& out, std::ostream& log) {
  Workspace w = load_data(config);
  const auto rules = config.audit.rules
                         ? build_rules(*w.data, *config.audit.rules, config.default_rule)
                         : build_rules(*w.data, config.similarity, config.default_rule);
  std::vector<std::size_t> split_targets = config.audit.split_targets;
  if (split_targets.empty() && config.model) {
    split_targets = config.targets ? *config.targets : std::vector<std::size_t>{0};
  }
  check_targets(split_targets, w.data->rows());
  if (!split_targets.empty()) {
    check_engine(config, w.data->cols());
    if (config.engine.kind == EngineKind::mc &&
        (config.audit.split_method == Method::abs ||
         config.audit.split_method == Method::abs2)) {
      throw ConfigError("the all-baseline realism split supports the exact engine only");
    }
  }
  {
    PhaseTimer t(log, "model");
    attach_model(config, w);
  }
  const Dataset& ds = *w.data;

  RealismConfig rc;
  rc.thresholds = config.audit.thresholds;
  rc.fractions = config.audit.fractions;
  rc.runs = config.audit.runs;
  rc.seed = config.audit.seed;
  rc.samples = config.audit.samples;
  RealismReport report;
  {
    PhaseTimer t(log, "realism curve");
    report = realism_curve(ds, rules, rc);
  }
  std::ostringstream csv;
  write_realism_csv(report, csv);
  emit(config, "realism.csv", csv.str(), out);

  if (split_targets.empty()) return 0;
  const auto names = ds.column_names();
  ordered_json j;
  j["method"] = std::string(to_string(config.audit.split_method));
  j["features"] = names;
  j["splits"] = ordered_json::array();
  PhaseTimer t(log, "realism split");
  const Method m = config.audit.split_method;
  const BaselinePoint baseline = config.baseline ? *config.baseline : mean_baseline(ds);
  std::shared_ptr<const AllBaselineData> shared;
  if (m == Method::abs || m == Method::abs2) {
    shared = std::make_shared<AllBaselineData>(ds, w.model);
  }
  for (std::size_t target : split_targets) {
    SplitAttribution s;
    if (shared) {
      const AllBaselineGame game(shared, target, m == Method::abs2);
      s = abs_realism_split(ds, game, rules, config.engine);
    } else {
      const auto game = m == Method::bs2 ? make_bs2_game(ds, target, baseline, w.model)
                                         : make_bs_game(ds, target, baseline, w.model);
      s = bs_realism_split(ds, game, rules, config.engine);
    }
    j["splits"].push_back(to_json(s, names));
  }
  if (config.out) {
    write_text(*config.out / "split.json", dump(j));
  } else {
    out << dump(j);
  }
  return 0;
}

int cmd_cube(const RunConfig& config, std::ostream& out, std::ostream& log) {
  if (!config.cube) throw ConfigError("the cube command needs a 'cube' table in the config");
  const CubeSpec& spec = *config.cube;
  PhaseTimer t(log, "cube");
  const CubeFunction g(spec.d, spec.values);
  const ProductMeasure measure =
      spec.weights ? ProductMeasure::from_weights(*spec.weights, spec.d)
      : spec.marginals ? ProductMeasure(*spec.marginals)
                       : ProductMeasure::uniform(spec.d);
  if (measure.dimension() != spec.d) {
    throw ConfigError("cube.marginals must have d entries");
  }

  const auto dec = anchored_cube(g);
  const auto via_anchored = shapley_from_anchored(dec);
  std::vector<double> shifted(g.values);
  for (double& v : shifted) v -= g.values[0];
  shifted[0] = 0.0;
  const auto via_exact = shapley_from_values(shifted, spec.d);
  double discrepancy = 0.0;
  for (int k = 0; k < spec.d; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    discrepancy = std::max(discrepancy, std::abs(via_anchored.phi[ku] - via_exact.phi[ku]));
  }
  const auto anova = anova_cube(g, measure);
  const auto effects = shapley_effects_independent(anova);

  ordered_json j;
  j["d"] = spec.d;
  j["anchored_components"] = dec.components;
  j["phi_anchored"] = via_anchored.phi;
  j["phi_exact"] = via_exact.phi;
  j["total"] = via_exact.total;
  j["discrepancy"] = discrepancy;
  j["anova"] = {{"marginals", measure.marginals()},
                {"mean", anova.mean},
                {"sigma2", anova.sigma2},
                {"total_variance", anova.total_variance},
                {"shapley_effects", effects.phi}};
  emit(config, "cube.json", dump(j), out);
  return 0;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"Cohort, baseline and variance Shapley attributions"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;
  std::string data, method, engine, outdir, targets;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
  int threads = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"local", "Per-subject attributions (cs, cs2, bs, bs2, abs, abs2)"},
      {"global", "Variance Shapley and its per-subject disaggregation"},
      {"audit", "Realism rates and realistic/unrealistic splits"},
      {"cube", "Anchored and ANOVA decompositions of a 2^d table"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--data", data, "CSV data file");
    sub->add_option("--method", method, "cs, cs2, bs, bs2, abs, abs2 or var");
    sub->add_option("--engine", engine, "exact or mc");
    sub->add_option("--permutations", permutations, "Monte Carlo permutations");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--threads", threads, "Worker threads (default: all cores)");
    sub->add_option("--out", outdir, "Output directory");
    sub->add_option("--targets,--target", targets,
                    "Subjects, 1-based: all, 5, 1,4,9 or 2-10");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, log);
    return code == 0 ? 0 : 2;
  }

  auto given = [&](const char* flag) {
    for (auto* s : subs) {
      if (s->parsed() && s->count(flag) > 0) return true;
    }
    return false;
  };
  if (given("--data")) o.data = data;
  if (given("--method")) o.method = method;
  if (given("--engine")) o.engine = engine;
  if (given("--permutations")) o.permutations = permutations;
  if (given("--seed")) o.seed = seed;
  if (given("--threads")) o.threads = threads;
  if (given("--out")) o.out = outdir;
  if (given("--targets")) o.targets = targets;

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    apply_overrides(config, o);
    if (config.threads > 0) set_worker_threads(config.threads);
    const std::string which = app.get_subcommands().front()->get_name();
    if (which == "local") return cmd_local(config, out, log);
    if (which == "global") return cmd_global(config, out, log);
    if (which == "audit") return cmd_audit(config, out, log);
    return cmd_cube(config, out, log);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cohortshap::cli
