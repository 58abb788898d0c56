#include "cohortshap/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "cohortshap/csv.hpp"
#include "cohortshap/error.hpp"
#include "cohortshap/exact_sum.hpp"
#include "cohortshap/format.hpp"
#include "cohortshap/parallel.hpp"

namespace cohortshap {

LocalGameFactory::LocalGameFactory(const Dataset& ds, Method method,
                                   Inputs inputs)
    : ds_(ds), method_(method), model_(std::move(inputs.model)) {
  switch (method) {
    case Method::cs:
    case Method::cs2:
      if (!inputs.rules) throw ConfigError("cohort methods need similarity rules");
      cohort_ = std::make_shared<CohortData>(ds.predictions());
      index_.emplace(*inputs.rules, ds);
      break;
    case Method::bs:
    case Method::bs2:
      if (!model_) throw ConfigError("baseline Shapley needs a model");
      baseline_ = inputs.baseline ? *inputs.baseline : mean_baseline(ds);
      if (baseline_.size() != ds.cols()) {
        throw ConfigError("baseline must have one value per column");
      }
      break;
    case Method::abs:
    case Method::abs2:
      if (!model_) throw ConfigError("all-baseline Shapley needs a model");
      all_baselines_ = std::make_shared<AllBaselineData>(ds, model_);
      break;
    default:
      throw ConfigError("method '" + std::string(to_string(method)) +
                        "' has no per-subject game");
  }
}

std::unique_ptr<Game> LocalGameFactory::make(std::size_t target) const {
  if (target >= ds_.rows()) {
    throw ConfigError("target " + std::to_string(target + 1) +
                      " is outside 1.." + std::to_string(ds_.rows()));
  }
  switch (method_) {
    case Method::cs:
    case Method::cs2:
      return std::make_unique<CohortGame>(cohort_, index_->row(target),
                                          method_ == Method::cs2);
    case Method::bs:
    case Method::bs2: {
      const auto row = ds_.row(target);
      return std::make_unique<BaselineGame>(
          model_, std::vector<double>(row.begin(), row.end()), baseline_,
          method_ == Method::bs2, target);
    }
    case Method::abs:
    case Method::abs2:
      return std::make_unique<AllBaselineGame>(all_baselines_, target,
                                               method_ == Method::abs2);
    default:
      break;
  }
  throw ConfigError("unsupported method");
}

std::vector<Attribution> attribute_targets(const LocalGameFactory& factory,
                                           std::span<const std::size_t> targets,
                                           const EngineConfig& engine) {
  std::vector<Attribution> out(targets.size());
  parallel_for(targets.size(), [&](std::size_t k) {
    const auto game = factory.make(targets[k]);
    out[k] = compute_shapley(*game, engine);
  });
  return out;
}

std::vector<std::size_t> all_targets(std::size_t n) {
  std::vector<std::size_t> t(n);
  std::iota(t.begin(), t.end(), std::size_t{0});
  return t;
}

std::vector<double> mean_attribution(std::span<const Attribution> rows) {
  if (rows.empty()) return {};
  const std::size_t d = rows.front().phi.size();
  std::vector<double> means(d);
  for (std::size_t j = 0; j < d; ++j) {
    ExactSum s;
    for (const auto& r : rows) s.add(r.phi[j]);
    means[j] = s.value() / static_cast<double>(rows.size());
  }
  return means;
}

GlobalAttribution variance_shapley(const Dataset& ds, const SimilarityRules& rules,
                                   const EngineConfig& engine) {
  const VarianceGame game(ds, rules);
  const auto a = compute_shapley(game, engine);
  GlobalAttribution g;
  g.phi_var = a.phi;
  g.total_variance = a.total;
  return g;
}

GlobalAttribution aggregate_squared_cs(const Dataset& ds,
                                       const SimilarityRules& rules,
                                       const EngineConfig& engine,
                                       bool keep_per_subject) {
  const LocalGameFactory factory(ds, Method::cs2, {rules, nullptr, std::nullopt});
  const auto targets = all_targets(ds.rows());
  auto rows = attribute_targets(factory, targets, engine);
  GlobalAttribution g;
  g.phi_var = mean_attribution(rows);
  ExactSum total;
  for (const auto& r : rows) total.add(r.total);
  g.total_variance = total.value() / static_cast<double>(rows.size());
  if (keep_per_subject) g.per_subject = std::move(rows);
  return g;
}

double disaggregation_residual(const GlobalAttribution& direct,
                               const GlobalAttribution& aggregated) {
  if (direct.phi_var.size() != aggregated.phi_var.size()) {
    throw Error("attributions differ in dimension");
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < direct.phi_var.size(); ++j) {
    worst = std::max(worst, std::abs(direct.phi_var[j] - aggregated.phi_var[j]));
  }
  const double scale = std::abs(direct.total_variance);
  return scale > 0.0 ? worst / scale : worst;
}

Panel make_panel(const Dataset& ds, std::span<const Attribution> attributions) {
  const auto y = ds.predictions();
  if (attributions.size() != ds.rows()) {
    throw Error("panel needs one attribution per subject");
  }
  ExactSum s;
  for (double v : y) s.add(v);
  const double ybar = s.value() / static_cast<double>(y.size());

  std::vector<std::size_t> order = all_targets(ds.rows());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  Panel panel;
  panel.feature_names = ds.column_names();
  panel.rows.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t t = order[r];
    panel.rows.push_back({r + 1, t, attributions[t].phi, y[t] - ybar});
  }
  return panel;
}

Panel export_panel(const Dataset& ds, const LocalGameFactory& factory,
                   const EngineConfig& engine) {
  const auto targets = all_targets(ds.rows());
  const auto rows = attribute_targets(factory, targets, engine);
  return make_panel(ds, rows);
}

void write_panel_csv(const Panel& panel, std::ostream& out) {
  std::vector<std::string> fields{"rank", "subject"};
  fields.insert(fields.end(), panel.feature_names.begin(),
                panel.feature_names.end());
  fields.emplace_back("overlay");
  write_csv_row(out, fields);
  for (const auto& row : panel.rows) {
    fields.clear();
    fields.push_back(std::to_string(row.rank));
    fields.push_back(std::to_string(row.subject + 1));
    for (double p : row.phi) fields.push_back(format_double(p));
    fields.push_back(format_double(row.overlay));
    write_csv_row(out, fields);
  }
}

}  // namespace cohortshap
