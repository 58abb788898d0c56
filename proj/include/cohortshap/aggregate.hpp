#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohortshap/dataset.hpp"
#include "cohortshap/games.hpp"
#include "cohortshap/model.hpp"
#include "cohortshap/shapley.hpp"
#include "cohortshap/similarity.hpp"

namespace cohortshap {

// Builds the local game of one method for any subject, sharing the
// per-dataset state (prediction sums, similarity masks, baseline rows and
// their predictions) across targets.
class LocalGameFactory {
 public:
  struct Inputs {
    std::optional<SimilarityRules> rules;     // cs, cs2
    std::shared_ptr<const Model> model;       // bs, bs2, abs, abs2
    std::optional<BaselinePoint> baseline;    // bs, bs2; column means if unset
  };

  LocalGameFactory(const Dataset& ds, Method method, Inputs inputs);

  Method method() const { return method_; }
  std::unique_ptr<Game> make(std::size_t target) const;

 private:
  const Dataset& ds_;
  Method method_;
  std::shared_ptr<const CohortData> cohort_;
  std::optional<SimilarityIndex> index_;
  std::shared_ptr<const Model> model_;
  BaselinePoint baseline_;
  std::shared_ptr<const AllBaselineData> all_baselines_;
};

// One attribution per target, computed in parallel; output order follows
// `targets`.
std::vector<Attribution> attribute_targets(const LocalGameFactory& factory,
                                           std::span<const std::size_t> targets,
                                           const EngineConfig& engine);

std::vector<std::size_t> all_targets(std::size_t n);

// Exactly rounded per-feature means over rows of phi.
std::vector<double> mean_attribution(std::span<const Attribution> rows);

struct GlobalAttribution {
  Method method = Method::var;
  std::vector<double> phi_var;
  double total_variance = 0.0;  // val_var(1:d)
  std::optional<std::vector<Attribution>> per_subject;
};

GlobalAttribution variance_shapley(const Dataset& ds, const SimilarityRules& rules,
                                   const EngineConfig& engine = {});

// Squared cohort Shapley for every subject, averaged per feature.
GlobalAttribution aggregate_squared_cs(const Dataset& ds,
                                       const SimilarityRules& rules,
                                       const EngineConfig& engine = {},
                                       bool keep_per_subject = true);

// max_j |a_j - b_j| / max(total, tiny)
double disaggregation_residual(const GlobalAttribution& direct,
                               const GlobalAttribution& aggregated);

struct PanelRow {
  std::size_t rank = 0;     // 1-based position after sorting
  std::size_t subject = 0;  // 0-based row index
  std::vector<double> phi;
  double overlay = 0.0;     // f(x_t) - ybar
};

struct Panel {
  std::vector<std::string> feature_names;
  std::vector<PanelRow> rows;
};

// Rows sorted by prediction, ties by subject index. `attributions[t]` must
// belong to subject t.
Panel make_panel(const Dataset& ds, std::span<const Attribution> attributions);

// Per-subject attributions of `factory`'s method for all subjects.
Panel export_panel(const Dataset& ds, const LocalGameFactory& factory,
                   const EngineConfig& engine = {});

// Header rank,subject,<names>,overlay; subjects are written 1-based.
void write_panel_csv(const Panel& panel, std::ostream& out);

}  // namespace cohortshap
