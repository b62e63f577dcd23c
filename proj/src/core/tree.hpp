#pragma once

#include <span>
#include <vector>

#include "core/rng.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::learners {

// Internal nodes route x[feature] <= threshold to the left child.
struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;     // leaf prediction (set on every node for SHAP)
  double cover = 0;     // weighted training-sample count
  double impurity = 0;  // weighted MSE at the node

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // root at index 0
  std::size_t n_features = 0;

  double predict(std::span<const double> x) const;
  int max_depth() const;

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);
};

enum class SplitStyle {
  exact,             // midpoints between consecutive distinct sorted values
  random_threshold,  // one uniform draw per candidate feature (extra trees)
};

struct CartParams {
  int max_depth = -1;  // -1 = unlimited
  int min_samples_leaf = 1;
  int max_features = -1;  // per-split candidate count, -1 = all
  SplitStyle style = SplitStyle::exact;
};

// Greedy top-down growth by weighted variance reduction; leaf value is the
// weighted target mean. Ties in gain break toward the lowest feature index,
// then the lowest threshold.
RegressionTree fit_cart(const std::vector<std::vector<double>>& X,
                        std::span<const double> y,
                        std::span<const double> w, const CartParams& params,
                        Rng& rng);

struct SecondOrderParams {
  int max_depth = 3;
  int min_samples_leaf = 1;
  int max_features = -1;
  double lambda = 1.0;  // leaf regularizer
  double gamma = 0.0;   // split penalty
};

// Second-order tree over per-sample gradients g and Hessians h:
// gain = 0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma, split only
// when gain > 0; leaf weight = -G/(H+l).
RegressionTree fit_second_order_tree(const std::vector<std::vector<double>>& X,
                                     std::span<const double> g,
                                     std::span<const double> h,
                                     const SecondOrderParams& params,
                                     Rng& rng);

}  // namespace sdp::learners
