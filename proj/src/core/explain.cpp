#include "core/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace sdp::explain {
namespace {

using learners::RegressionTree;
using learners::TreeNode;

// Decision-path bookkeeping for the polynomial-time recursion. The pweight
// of element i is the permutation weight of subsets with i ones.
struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double pweight = 0;
};

void extend_path(PathElement* path, int unique_depth, double zero_fraction,
                 double one_fraction, int feature_index) {
  path[unique_depth] = {feature_index, zero_fraction, one_fraction,
                        unique_depth == 0 ? 1.0 : 0.0};
  for (int i = unique_depth - 1; i >= 0; --i) {
    path[i + 1].pweight +=
        one_fraction * path[i].pweight * (i + 1) / (unique_depth + 1.0);
    path[i].pweight =
        zero_fraction * path[i].pweight * (unique_depth - i) /
        (unique_depth + 1.0);
  }
}

void unwind_path(PathElement* path, int unique_depth, int path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;
  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp = path[i].pweight;
      path[i].pweight =
          next_one_portion * (unique_depth + 1.0) / ((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction *
                                   (unique_depth - i) / (unique_depth + 1.0);
    } else {
      path[i].pweight = path[i].pweight * (unique_depth + 1.0) /
                        (zero_fraction * (unique_depth - i));
    }
  }
  for (int i = path_index; i < unique_depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int unique_depth,
                        int path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;
  double total = 0;
  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp =
          next_one_portion * (unique_depth + 1.0) / ((i + 1) * one_fraction);
      total += tmp;
      next_one_portion =
          path[i].pweight -
          tmp * zero_fraction * (unique_depth - i) / (unique_depth + 1.0);
    } else if (zero_fraction != 0) {
      total += path[i].pweight / zero_fraction /
               ((unique_depth - i) / (unique_depth + 1.0));
    }
  }
  return total;
}

void shap_recurse(const RegressionTree& tree, std::span<const double> x,
                  std::span<double> phi, int node_index, int unique_depth,
                  PathElement* parent_path, double parent_zero_fraction,
                  double parent_one_fraction, int parent_feature_index) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];

  PathElement* path = parent_path + unique_depth + 1;
  std::copy(parent_path, parent_path + unique_depth + 1, path);
  extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);

  if (node.is_leaf()) {
    for (int i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[i];
      phi[static_cast<std::size_t>(el.feature_index)] +=
          w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  if (node.cover <= 0) throw_data("tree_shap: zero-cover node");
  const TreeNode& left = tree.nodes[static_cast<std::size_t>(node.left)];
  const TreeNode& right = tree.nodes[static_cast<std::size_t>(node.right)];
  if (left.cover <= 0 || right.cover <= 0)
    throw_data("tree_shap: zero-cover node");

  const int split = node.feature;
  const bool goes_left = x[static_cast<std::size_t>(split)] <= node.threshold;
  const int hot_index = goes_left ? node.left : node.right;
  const int cold_index = goes_left ? node.right : node.left;
  const double hot_zero_fraction =
      tree.nodes[static_cast<std::size_t>(hot_index)].cover / node.cover;
  const double cold_zero_fraction =
      tree.nodes[static_cast<std::size_t>(cold_index)].cover / node.cover;

  // Undo an earlier split on the same feature before redoing it here.
  double incoming_zero_fraction = 1;
  double incoming_one_fraction = 1;
  int path_index = 0;
  for (; path_index <= unique_depth; ++path_index) {
    if (path[path_index].feature_index == split) break;
  }
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = path[path_index].zero_fraction;
    incoming_one_fraction = path[path_index].one_fraction;
    unwind_path(path, unique_depth, path_index);
    unique_depth -= 1;
  }

  shap_recurse(tree, x, phi, hot_index, unique_depth + 1, path,
               hot_zero_fraction * incoming_zero_fraction,
               incoming_one_fraction, split);
  shap_recurse(tree, x, phi, cold_index, unique_depth + 1, path,
               cold_zero_fraction * incoming_zero_fraction, 0.0, split);
}

}  // namespace

double tree_expected_value(const RegressionTree& tree) {
  // Cover-weighted average over leaves, computed top-down.
  double total = 0;
  std::vector<std::pair<int, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    auto [idx, w] = stack.back();
    stack.pop_back();
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
    if (nd.is_leaf()) {
      total += w * nd.value;
      continue;
    }
    if (nd.cover <= 0) throw_data("tree_expected_value: zero-cover node");
    const double lc = tree.nodes[static_cast<std::size_t>(nd.left)].cover;
    const double rc = tree.nodes[static_cast<std::size_t>(nd.right)].cover;
    stack.push_back({nd.left, w * lc / nd.cover});
    stack.push_back({nd.right, w * rc / nd.cover});
  }
  return total;
}

void tree_shap(const RegressionTree& tree, std::span<const double> x,
               std::span<double> phi_out) {
  if (x.size() != tree.n_features)
    throw_usage("tree_shap: feature count mismatch");
  if (phi_out.size() != tree.n_features)
    throw_usage("tree_shap: phi size mismatch");
  std::fill(phi_out.begin(), phi_out.end(), 0.0);
  const int maxd = tree.max_depth() + 2;
  std::vector<PathElement> path_storage(
      static_cast<std::size_t>(maxd * (maxd + 1)) / 2);
  shap_recurse(tree, x, phi_out, 0, 0, path_storage.data(), 1.0, 1.0, -1);
}

ShapExplanation tree_shap(const learners::Ensemble& model,
                          std::span<const double> x, std::size_t row_id) {
  using learners::EnsembleKind;
  if (model.trees.empty()) throw_data("tree_shap: model has no trees");
  const std::size_t d = model.trees.front().n_features;
  if (x.size() != d) throw_usage("tree_shap: feature count mismatch");

  ShapExplanation out;
  out.row_id = row_id;
  out.phi.assign(d, 0.0);

  // Per-tree combination weights matching each kind's additive combiner.
  // AdaBoost's weighted median is not additive, so its trees are combined
  // by the normalized-weight mean surrogate instead.
  std::vector<double> weights(model.trees.size(), 0.0);
  switch (model.kind) {
    case EnsembleKind::random_forest:
    case EnsembleKind::extra_trees: {
      const double w = 1.0 / static_cast<double>(model.trees.size());
      std::fill(weights.begin(), weights.end(), w);
      break;
    }
    case EnsembleKind::adaboost_r2: {
      const double total = std::accumulate(model.tree_weights.begin(),
                                           model.tree_weights.end(), 0.0);
      if (total <= 0) throw_data("tree_shap: degenerate tree weights");
      for (std::size_t t = 0; t < weights.size(); ++t)
        weights[t] = model.tree_weights[t] / total;
      out.surrogate = true;
      break;
    }
    case EnsembleKind::gradient_boost:
    case EnsembleKind::second_order_boost: {
      std::fill(weights.begin(), weights.end(), model.learning_rate);
      out.base_value = model.base_score;
      break;
    }
  }

  std::vector<double> phi(d);
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    tree_shap(model.trees[t], x, phi);
    for (std::size_t f = 0; f < d; ++f) out.phi[f] += weights[t] * phi[f];
    out.base_value += weights[t] * tree_expected_value(model.trees[t]);
  }
  return out;
}

double coalition_value(const RegressionTree& tree, std::span<const double> x,
                       const std::vector<bool>& in_coalition) {
  double total = 0;
  std::vector<std::pair<int, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    auto [idx, w] = stack.back();
    stack.pop_back();
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
    if (nd.is_leaf()) {
      total += w * nd.value;
      continue;
    }
    if (in_coalition[static_cast<std::size_t>(nd.feature)]) {
      const int next = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold
                           ? nd.left
                           : nd.right;
      stack.push_back({next, w});
    } else {
      if (nd.cover <= 0) throw_data("coalition_value: zero-cover node");
      const double lc = tree.nodes[static_cast<std::size_t>(nd.left)].cover;
      const double rc = tree.nodes[static_cast<std::size_t>(nd.right)].cover;
      stack.push_back({nd.left, w * lc / nd.cover});
      stack.push_back({nd.right, w * rc / nd.cover});
    }
  }
  return total;
}

std::vector<double> brute_force_shapley(const RegressionTree& tree,
                                        std::span<const double> x) {
  const std::size_t m = tree.n_features;
  if (m > 15) throw_usage("brute_force_shapley: too many features (max 15)");
  if (x.size() != m) throw_usage("brute_force_shapley: dimension mismatch");

  std::vector<double> fact(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i)
    fact[i] = fact[i - 1] * static_cast<double>(i);

  const std::size_t n_sets = std::size_t{1} << m;
  std::vector<double> value(n_sets);
  std::vector<bool> members(m);
  for (std::size_t s = 0; s < n_sets; ++s) {
    for (std::size_t f = 0; f < m; ++f) members[f] = (s >> f) & 1;
    value[s] = coalition_value(tree, x, members);
  }

  std::vector<double> phi(m, 0.0);
  for (std::size_t s = 0; s < n_sets; ++s) {
    const std::size_t size_s =
        static_cast<std::size_t>(std::popcount(s));
    for (std::size_t f = 0; f < m; ++f) {
      if ((s >> f) & 1) continue;
      const double weight =
          fact[size_s] * fact[m - size_s - 1] / fact[m];
      phi[f] += weight * (value[s | (std::size_t{1} << f)] - value[s]);
    }
  }
  return phi;
}

ImportanceTable impurity_importance(const learners::Ensemble& model) {
  if (model.trees.empty()) throw_data("impurity_importance: no trees");
  const std::size_t d = model.trees.front().n_features;
  ImportanceTable table;
  table.feature_names = model.feature_names;
  if (table.feature_names.empty()) {
    for (std::size_t f = 0; f < d; ++f)
      table.feature_names.push_back("f" + std::to_string(f));
  }
  table.importance.assign(d, 0.0);

  double total = 0;
  for (const auto& tree : model.trees) {
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf()) continue;
      const auto& left = tree.nodes[static_cast<std::size_t>(nd.left)];
      const auto& right = tree.nodes[static_cast<std::size_t>(nd.right)];
      const double credit = nd.cover * nd.impurity -
                            left.cover * left.impurity -
                            right.cover * right.impurity;
      if (credit > 0) {
        table.importance[static_cast<std::size_t>(nd.feature)] += credit;
        total += credit;
      }
    }
  }
  if (total <= 0) {
    table.degenerate = true;
    std::fill(table.importance.begin(), table.importance.end(),
              1.0 / static_cast<double>(d));
    return table;
  }
  for (double& v : table.importance) v /= total;
  return table;
}

ShapSummary shap_summary(const learners::Ensemble& model,
                         const std::vector<std::vector<double>>& X) {
  if (X.empty()) throw_usage("shap_summary: empty input");
  const std::size_t d = model.trees.front().n_features;
  ShapSummary summary;
  summary.feature_names = model.feature_names;
  if (summary.feature_names.empty()) {
    for (std::size_t f = 0; f < d; ++f)
      summary.feature_names.push_back("f" + std::to_string(f));
  }
  summary.mean_abs_phi.assign(d, 0.0);
  for (std::size_t r = 0; r < X.size(); ++r) {
    ShapExplanation e = tree_shap(model, X[r], r);
    for (std::size_t f = 0; f < d; ++f)
      summary.mean_abs_phi[f] += std::fabs(e.phi[f]);
  }
  for (double& v : summary.mean_abs_phi) v /= static_cast<double>(X.size());

  summary.rank_order.resize(d);
  std::iota(summary.rank_order.begin(), summary.rank_order.end(), 0);
  std::stable_sort(summary.rank_order.begin(), summary.rank_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return summary.mean_abs_phi[a] > summary.mean_abs_phi[b];
                   });
  summary.uninformative = std::all_of(summary.mean_abs_phi.begin(),
                                      summary.mean_abs_phi.end(),
                                      [](double v) { return v == 0.0; });
  return summary;
}

double ShapExplanation::total() const {
  double s = base_value;
  for (double v : phi) s += v;
  return s;
}

nlohmann::json ShapExplanation::to_json() const {
  return {{"base_value", base_value},
          {"phi", phi},
          {"row_id", row_id},
          {"surrogate", surrogate}};
}

nlohmann::json ImportanceTable::to_json() const {
  return {{"feature_names", feature_names},
          {"importance", importance},
          {"degenerate", degenerate}};
}

nlohmann::json ShapSummary::to_json() const {
  return {{"feature_names", feature_names},
          {"mean_abs_phi", mean_abs_phi},
          {"rank_order", rank_order},
          {"uninformative", uninformative}};
}

}  // namespace sdp::explain
