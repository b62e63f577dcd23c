#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/ensemble.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::explain {

struct ShapExplanation {
  double base_value = 0;
  std::vector<double> phi;  // one additive attribution per feature
  std::size_t row_id = 0;
  bool surrogate = false;  // true for the AdaBoost weighted-mean surrogate

  double total() const;
  nlohmann::json to_json() const;
};

struct ImportanceTable {
  std::vector<std::string> feature_names;
  std::vector<double> importance;  // nonnegative, sums to 1
  bool degenerate = false;         // single-leaf model, uniform fallback

  nlohmann::json to_json() const;
};

struct ShapSummary {
  std::vector<std::string> feature_names;
  std::vector<double> mean_abs_phi;
  std::vector<std::size_t> rank_order;  // feature indices, descending
  bool uninformative = false;           // all means zero

  nlohmann::json to_json() const;
};

// Exact path-dependent SHAP for one tree: coalition values are the tree's
// cover-weighted conditional expectations.
void tree_shap(const learners::RegressionTree& tree, std::span<const double> x,
               std::span<double> phi_out);

// Expected tree output with no features fixed (the empty-coalition value).
double tree_expected_value(const learners::RegressionTree& tree);

ShapExplanation tree_shap(const learners::Ensemble& model,
                          std::span<const double> x, std::size_t row_id = 0);

// 2^M coalition enumeration against the same cover-weighted value function.
// Usage error when the tree has more than 15 features.
std::vector<double> brute_force_shapley(const learners::RegressionTree& tree,
                                        std::span<const double> x);

// Cover-weighted expectation with the coalition's features routed by x and
// the rest averaged by cover. Exposed for oracle-style tests.
double coalition_value(const learners::RegressionTree& tree,
                       std::span<const double> x,
                       const std::vector<bool>& in_coalition);

ImportanceTable impurity_importance(const learners::Ensemble& model);

ShapSummary shap_summary(const learners::Ensemble& model,
                         const std::vector<std::vector<double>>& X);

}  // namespace sdp::explain
