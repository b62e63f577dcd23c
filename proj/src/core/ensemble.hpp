#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/preprocess.hpp"
#include "core/tree.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::learners {

enum class EnsembleKind {
  random_forest,
  extra_trees,
  adaboost_r2,
  gradient_boost,
  second_order_boost,
};

std::string kind_name(EnsembleKind kind);
EnsembleKind kind_from_name(const std::string& name);

enum class AdaLoss { linear, square, exponential };

struct HyperParams {
  int n_estimators = 100;
  int max_depth = -1;       // -1 = unlimited
  int min_samples_leaf = 1;
  double max_features = 1.0;  // fraction in (0,1]; > 1 means absolute count
  double learning_rate = 0.1;
  AdaLoss loss = AdaLoss::linear;
  double lambda = 1.0;
  double gamma = 0.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  int resolve_max_features(std::size_t n_features) const;
  nlohmann::json to_json() const;
  static HyperParams from_json(const nlohmann::json& j);
};

// Library-style defaults per kind: unlimited depth for the averaging
// ensembles, depth 3 for the boosters, no bootstrap for extra trees.
HyperParams default_params(EnsembleKind kind, std::uint64_t seed);

struct Ensemble {
  EnsembleKind kind = EnsembleKind::random_forest;
  std::vector<RegressionTree> trees;
  std::vector<double> tree_weights;  // AdaBoost log(1/beta); empty otherwise
  double base_score = 0;
  double learning_rate = 1.0;
  HyperParams params;
  std::uint64_t seed = 0;
  bool exact_fit = false;
  std::vector<std::string> feature_names;
  preprocess::EncoderMap encoders;
  preprocess::ScalerParams scaler;

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const std::vector<std::vector<double>>& X) const;

  nlohmann::json to_json() const;
  static Ensemble from_json(const nlohmann::json& j);
};

Ensemble fit_random_forest(const std::vector<std::vector<double>>& X,
                           std::span<const double> y,
                           const HyperParams& params);
Ensemble fit_extra_trees(const std::vector<std::vector<double>>& X,
                         std::span<const double> y, const HyperParams& params);
Ensemble fit_adaboost_r2(const std::vector<std::vector<double>>& X,
                         std::span<const double> y, const HyperParams& params);
Ensemble fit_gradient_boost(const std::vector<std::vector<double>>& X,
                            std::span<const double> y,
                            const HyperParams& params);
Ensemble fit_second_order_boost(const std::vector<std::vector<double>>& X,
                                std::span<const double> y,
                                const HyperParams& params);

Ensemble fit_ensemble(EnsembleKind kind,
                      const std::vector<std::vector<double>>& X,
                      std::span<const double> y, const HyperParams& params);

// Weighted median: smallest value whose cumulative weight reaches half of
// the total.
double weighted_median(std::vector<double> values,
                       const std::vector<double>& weights);

}  // namespace sdp::learners
