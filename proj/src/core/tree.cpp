#include "core/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace sdp::learners {

double RegressionTree::predict(std::span<const double> x) const {
  if (x.size() != n_features)
    throw_usage("predict: feature count mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw_numeric("predict: non-finite feature value");
  int idx = 0;
  while (!nodes[idx].is_leaf()) {
    const TreeNode& nd = nodes[idx];
    idx = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                  : nd.right;
  }
  return nodes[idx].value;
}

int RegressionTree::max_depth() const {
  int best = 0;
  // depth via parent walk-free DFS
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const TreeNode& nd = nodes[static_cast<std::size_t>(idx)];
    if (!nd.is_leaf()) {
      stack.push_back({nd.left, d + 1});
      stack.push_back({nd.right, d + 1});
    }
  }
  return best;
}

namespace {

std::vector<std::size_t> candidate_features(std::size_t d, int max_features,
                                            Rng& rng) {
  if (max_features < 0 || static_cast<std::size_t>(max_features) >= d) {
    std::vector<std::size_t> all(d);
    for (std::size_t i = 0; i < d; ++i) all[i] = i;
    return all;
  }
  auto sel = rng.sample_without_replacement(
      d, static_cast<std::size_t>(max_features));
  std::sort(sel.begin(), sel.end());  // tie rule: lowest feature index first
  return sel;
}

struct BestSplit {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0;
  double gain = 0;
};

// ---------------------------------------------------------------------------
// Variance-reduction grower.

class CartBuilder {
 public:
  CartBuilder(const std::vector<std::vector<double>>& X,
              std::span<const double> y, std::span<const double> w,
              const CartParams& params, Rng& rng)
      : X_(X), y_(y), w_(w), params_(params), rng_(rng) {}

  RegressionTree build() {
    RegressionTree tree;
    tree.n_features = X_.empty() ? 0 : X_[0].size();
    std::vector<std::size_t> idx(X_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    grow(tree, idx, 0);
    return tree;
  }

 private:
  int grow(RegressionTree& tree, std::vector<std::size_t>& idx, int depth) {
    double sw = 0, swy = 0;
    for (std::size_t i : idx) {
      sw += w_[i];
      swy += w_[i] * y_[i];
    }
    double mean = swy / sw;
    double sse = 0;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -ymin;
    for (std::size_t i : idx) {
      const double d = y_[i] - mean;
      sse += w_[i] * d * d;
      ymin = std::min(ymin, y_[i]);
      ymax = std::max(ymax, y_[i]);
    }
    // Pure nodes take the common target exactly, so perfectly fittable data
    // really is fit with zero error.
    if (ymin == ymax) {
      mean = ymin;
      sse = 0;
    }

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    TreeNode& node = tree.nodes.back();
    node.value = mean;
    node.cover = sw;
    node.impurity = sse / sw;

    const bool depth_stop = params_.max_depth >= 0 && depth >= params_.max_depth;
    const bool size_stop =
        idx.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf);
    if (depth_stop || size_stop || !(ymax > ymin)) return node_index;

    BestSplit best = params_.style == SplitStyle::exact
                         ? best_exact_split(idx, mean)
                         : best_random_split(idx, mean);
    if (!best.found) return node_index;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (X_[i][best.feature] <= best.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    const int li = grow(tree, left, depth + 1);
    const int ri = grow(tree, right, depth + 1);
    TreeNode& nd = tree.nodes[static_cast<std::size_t>(node_index)];
    nd.feature = static_cast<int>(best.feature);
    nd.threshold = best.threshold;
    nd.left = li;
    nd.right = ri;
    return node_index;
  }

  // Scan midpoints between consecutive distinct sorted values. Targets are
  // centered at the node mean so the gain arithmetic stays well conditioned.
  BestSplit best_exact_split(const std::vector<std::size_t>& idx,
                             double mean) {
    BestSplit best;
    const std::size_t msl = static_cast<std::size_t>(params_.min_samples_leaf);
    auto features = candidate_features(X_[0].size(), params_.max_features,
                                       rng_);
    std::vector<std::pair<double, std::size_t>> order(idx.size());
    for (std::size_t f : features) {
      for (std::size_t k = 0; k < idx.size(); ++k)
        order[k] = {X_[idx[k]][f], idx[k]};
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double swl = 0, swyl = 0;
      double swt = 0, swyt = 0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        swt += w_[order[k].second];
        swyt += w_[order[k].second] * (y_[order[k].second] - mean);
      }
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k].second;
        swl += w_[i];
        swyl += w_[i] * (y_[i] - mean);
        if (!(order[k + 1].first > order[k].first)) continue;
        if (k + 1 < msl || order.size() - (k + 1) < msl) continue;
        const double swr = swt - swl;
        const double swyr = swyt - swyl;
        const double gain =
            swyl * swyl / swl + swyr * swyr / swr - swyt * swyt / swt;
        if (gain > 0.0 && (!best.found || gain > best.gain)) {
          best.found = true;
          best.feature = f;
          best.threshold = (order[k].first + order[k + 1].first) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  // Extra-trees style: one uniform threshold per candidate feature between
  // the node-local min and max.
  BestSplit best_random_split(const std::vector<std::size_t>& idx,
                              double mean) {
    BestSplit best;
    const std::size_t msl = static_cast<std::size_t>(params_.min_samples_leaf);
    auto features = candidate_features(X_[0].size(), params_.max_features,
                                       rng_);
    for (std::size_t f : features) {
      double vmin = std::numeric_limits<double>::infinity();
      double vmax = -vmin;
      for (std::size_t i : idx) {
        vmin = std::min(vmin, X_[i][f]);
        vmax = std::max(vmax, X_[i][f]);
      }
      if (!(vmax > vmin)) continue;
      const double thr = rng_.uniform(vmin, vmax);
      double swl = 0, swyl = 0, swt = 0, swyt = 0;
      std::size_t nl = 0;
      for (std::size_t i : idx) {
        const double yc = y_[i] - mean;
        swt += w_[i];
        swyt += w_[i] * yc;
        if (X_[i][f] <= thr) {
          swl += w_[i];
          swyl += w_[i] * yc;
          ++nl;
        }
      }
      if (nl < msl || idx.size() - nl < msl || swl == 0 || swl == swt)
        continue;
      const double swr = swt - swl;
      const double swyr = swyt - swyl;
      const double gain =
          swyl * swyl / swl + swyr * swyr / swr - swyt * swyt / swt;
      if (gain > 0.0 && (!best.found || gain > best.gain)) {
        best.found = true;
        best.feature = f;
        best.threshold = thr;
        best.gain = gain;
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& X_;
  std::span<const double> y_;
  std::span<const double> w_;
  CartParams params_;
  Rng& rng_;
};

// ---------------------------------------------------------------------------
// Second-order grower.

class SecondOrderBuilder {
 public:
  SecondOrderBuilder(const std::vector<std::vector<double>>& X,
                     std::span<const double> g, std::span<const double> h,
                     const SecondOrderParams& params, Rng& rng)
      : X_(X), g_(g), h_(h), params_(params), rng_(rng) {}

  RegressionTree build() {
    RegressionTree tree;
    tree.n_features = X_.empty() ? 0 : X_[0].size();
    std::vector<std::size_t> idx(X_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    grow(tree, idx, 0);
    return tree;
  }

 private:
  int grow(RegressionTree& tree, std::vector<std::size_t>& idx, int depth) {
    double G = 0, H = 0, sq = 0;  // sq = sum g^2/h, for the impurity record
    for (std::size_t i : idx) {
      G += g_[i];
      H += h_[i];
      sq += g_[i] * g_[i] / h_[i];
    }
    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    TreeNode& node = tree.nodes.back();
    node.value = -G / (H + params_.lambda);
    node.cover = H;
    node.impurity = std::max(0.0, sq / H - (G / H) * (G / H));

    const bool depth_stop = params_.max_depth >= 0 && depth >= params_.max_depth;
    const bool size_stop =
        idx.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf);
    if (depth_stop || size_stop) return node_index;

    BestSplit best = best_split(idx, G, H);
    if (!best.found) return node_index;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (X_[i][best.feature] <= best.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    const int li = grow(tree, left, depth + 1);
    const int ri = grow(tree, right, depth + 1);
    TreeNode& nd = tree.nodes[static_cast<std::size_t>(node_index)];
    nd.feature = static_cast<int>(best.feature);
    nd.threshold = best.threshold;
    nd.left = li;
    nd.right = ri;
    return node_index;
  }

  BestSplit best_split(const std::vector<std::size_t>& idx, double G,
                       double H) {
    BestSplit best;
    const double lam = params_.lambda;
    const std::size_t msl = static_cast<std::size_t>(params_.min_samples_leaf);
    const double parent_score = G * G / (H + lam);
    auto features = candidate_features(X_[0].size(), params_.max_features,
                                       rng_);
    std::vector<std::pair<double, std::size_t>> order(idx.size());
    for (std::size_t f : features) {
      for (std::size_t k = 0; k < idx.size(); ++k)
        order[k] = {X_[idx[k]][f], idx[k]};
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double GL = 0, HL = 0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k].second;
        GL += g_[i];
        HL += h_[i];
        if (!(order[k + 1].first > order[k].first)) continue;
        if (k + 1 < msl || order.size() - (k + 1) < msl) continue;
        const double GR = G - GL;
        const double HR = H - HL;
        const double gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) -
                                   parent_score) -
                            params_.gamma;
        if (gain > 0.0 && (!best.found || gain > best.gain)) {
          best.found = true;
          best.feature = f;
          best.threshold = (order[k].first + order[k + 1].first) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& X_;
  std::span<const double> g_;
  std::span<const double> h_;
  SecondOrderParams params_;
  Rng& rng_;
};

}  // namespace

RegressionTree fit_cart(const std::vector<std::vector<double>>& X,
                        std::span<const double> y,
                        std::span<const double> w, const CartParams& params,
                        Rng& rng) {
  if (X.empty()) throw_usage("fit_cart: empty input");
  if (X.size() != y.size() || X.size() != w.size())
    throw_usage("fit_cart: X, y and w must have the same length");
  double wsum = 0;
  for (double wi : w) {
    if (wi < 0) throw_usage("fit_cart: negative weight");
    wsum += wi;
  }
  if (wsum <= 0) throw_usage("fit_cart: weights are all zero");
  return CartBuilder(X, y, w, params, rng).build();
}

RegressionTree fit_second_order_tree(const std::vector<std::vector<double>>& X,
                                     std::span<const double> g,
                                     std::span<const double> h,
                                     const SecondOrderParams& params,
                                     Rng& rng) {
  if (X.empty()) throw_usage("fit_second_order_tree: empty input");
  if (X.size() != g.size() || X.size() != h.size())
    throw_usage("fit_second_order_tree: X, g and h must have the same length");
  return SecondOrderBuilder(X, g, h, params, rng).build();
}

nlohmann::json RegressionTree::to_json() const {
  nlohmann::json nodes_j = nlohmann::json::array();
  for (const auto& n : nodes) {
    nodes_j.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value},
                       {"cover", n.cover},
                       {"impurity", n.impurity}});
  }
  return {{"n_features", n_features}, {"nodes", nodes_j}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  RegressionTree t;
  t.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.value = n.at("value").get<double>();
    node.cover = n.at("cover").get<double>();
    node.impurity = n.at("impurity").get<double>();
    t.nodes.push_back(node);
  }
  return t;
}

}  // namespace sdp::learners
