#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/ensemble.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::evaluation {

struct MetricsReport {
  double mae = 0;
  double mse = 0;
  double rmse = 0;
  double r2 = 0;
  double adj_r2 = 0;
  std::size_t n = 0;
  std::size_t p = 0;

  nlohmann::json to_json() const;
};

struct CVResult {
  std::vector<double> fold_scores;  // R^2 per usable fold
  std::vector<bool> fold_degenerate;  // constant actuals, excluded from mean
  double mean = 0;
  double stddev = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct SearchTrial {
  learners::HyperParams params;
  double score = 0;  // mean CV R^2, -inf sentinel for failed trials
};

struct SearchResult {
  std::vector<SearchTrial> trials;
  std::size_t best_index = 0;
  std::uint64_t seed = 0;

  const SearchTrial& best() const { return trials[best_index]; }
  nlohmann::json to_json() const;
};

// Uniform range for one searchable hyperparameter.
struct ParamRange {
  std::string name;  // n_estimators, max_depth, min_samples_leaf,
                     // learning_rate, max_features, lambda, gamma
  double lo = 0;
  double hi = 0;
  bool integer = false;
};

struct SearchSpace {
  std::vector<ParamRange> ranges;
  static SearchSpace defaults(learners::EnsembleKind kind);
};

std::tuple<double, double, double> error_metrics(
    std::span<const double> actual, std::span<const double> predicted);

std::pair<double, double> r_squared(std::span<const double> actual,
                                    std::span<const double> predicted,
                                    std::size_t p);

MetricsReport compute_metrics(std::span<const double> actual,
                              std::span<const double> predicted,
                              std::size_t p);

using Trainer = std::function<learners::Ensemble(
    const std::vector<std::vector<double>>&, std::span<const double>)>;

CVResult kfold_cv(const Trainer& trainer,
                  const std::vector<std::vector<double>>& X,
                  std::span<const double> y, std::size_t k, std::uint64_t seed);

SearchResult random_search(const SearchSpace& space, std::size_t n_trials,
                           learners::EnsembleKind kind,
                           const std::vector<std::vector<double>>& X,
                           std::span<const double> y, std::size_t cv_k,
                           std::uint64_t seed);

MetricsReport evaluate_model(const learners::Ensemble& model,
                             const std::vector<std::vector<double>>& X_test,
                             std::span<const double> y_test,
                             std::size_t p = 10);

}  // namespace sdp::evaluation
