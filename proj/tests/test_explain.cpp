#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/ensemble.hpp"
#include "core/error.hpp"
#include "core/explain.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace sdp;
using namespace sdp::learners;
using namespace sdp::explain;

namespace {

RegressionTree leaf_tree(double value, double cover = 4.0,
                         std::size_t n_features = 3) {
  RegressionTree t;
  t.n_features = n_features;
  TreeNode node;
  node.value = value;
  node.cover = cover;
  t.nodes = {node};
  return t;
}

// Internal root on `feature` at `threshold` with two leaves.
RegressionTree stump(int feature, double threshold, double left_value,
                     double right_value, double left_cover,
                     double right_cover, std::size_t n_features) {
  RegressionTree t;
  t.n_features = n_features;
  TreeNode root, l, r;
  root.feature = feature;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  root.cover = left_cover + right_cover;
  l.value = left_value;
  l.cover = left_cover;
  r.value = right_value;
  r.cover = right_cover;
  t.nodes = {root, l, r};
  return t;
}

Ensemble additive_ensemble(std::vector<RegressionTree> trees) {
  Ensemble e;
  e.kind = EnsembleKind::gradient_boost;
  e.trees = std::move(trees);
  e.base_score = 0.0;
  e.learning_rate = 1.0;
  return e;
}

std::vector<double> tree_phi(const RegressionTree& tree,
                             const std::vector<double>& x) {
  std::vector<double> phi(tree.n_features, 0.0);
  tree_shap(tree, x, phi);
  return phi;
}

}  // namespace

TEST_CASE("tree_shap: single leaf has base c and zero attributions") {
  auto tree = leaf_tree(7.5);
  std::vector<double> x = {1, 2, 3};
  CHECK(tree_expected_value(tree) == 7.5);
  auto phi = tree_phi(tree, x);
  for (double v : phi) CHECK(v == 0.0);
}

TEST_CASE("tree_shap: textbook stump with equal covers") {
  // Split x0 <= 1.5, leaves 0 and 10 with covers 2 and 2; x0 = 2 routes
  // right: base 5, phi0 = 5.
  auto tree = stump(0, 1.5, 0.0, 10.0, 2.0, 2.0, 3);
  std::vector<double> x = {2.0, 0.0, 0.0};
  CHECK(tree_expected_value(tree) == 5.0);
  auto phi = tree_phi(tree, x);
  CHECK(phi[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(phi[1] == 0.0);
  CHECK(phi[2] == 0.0);
}

TEST_CASE("tree_shap: depth-2 unequal covers match the brute-force oracle") {
  RegressionTree t;
  t.n_features = 2;
  TreeNode root, l, rl, rr, r;
  root.feature = 0;
  root.threshold = 0.0;
  root.left = 1;
  root.right = 2;
  root.cover = 10;
  l.value = -3.0;
  l.cover = 4;
  r.feature = 1;
  r.threshold = 1.0;
  r.left = 3;
  r.right = 4;
  r.cover = 6;
  rl.value = 2.0;
  rl.cover = 1;
  rr.value = 8.0;
  rr.cover = 5;
  t.nodes = {root, l, r, rl, rr};
  for (const std::vector<double>& x :
       {std::vector<double>{1.0, 0.5}, std::vector<double>{-1.0, 2.0},
        std::vector<double>{0.0, 1.0}}) {
    auto phi = tree_phi(t, x);
    auto oracle = brute_force_shapley(t, x);
    for (std::size_t i = 0; i < phi.size(); ++i)
      CHECK(std::abs(phi[i] - oracle[i]) < 1e-10);
  }
}

TEST_CASE("brute_force_shapley: single leaf gives all zeros") {
  auto tree = leaf_tree(4.0);
  auto phi = brute_force_shapley(tree, std::vector<double>{0, 0, 0});
  for (double v : phi) CHECK(v == 0.0);
}

TEST_CASE("brute_force_shapley: additive trees recover each contribution") {
  // v is additive across two features by construction: sum of two
  // single-feature stumps.
  auto t0 = stump(0, 0.0, -1.0, 1.0, 3.0, 3.0, 2);
  auto t1 = stump(1, 0.0, -2.0, 2.0, 3.0, 3.0, 2);
  std::vector<double> x = {0.5, -0.5};
  auto phi0 = brute_force_shapley(t0, x);
  auto phi1 = brute_force_shapley(t1, x);
  // Each tree's phi lives entirely on its own feature.
  CHECK(phi0[1] == 0.0);
  CHECK(phi1[0] == 0.0);
  CHECK(phi0[0] == doctest::Approx(1.0).epsilon(1e-12));   // E = 0, f = 1
  CHECK(phi1[1] == doctest::Approx(-2.0).epsilon(1e-12));  // E = 0, f = -2
}

TEST_CASE("brute_force_shapley: efficiency axiom on random trees") {
  Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    auto tree = testsupport::make_random_tree(rng, 4, 3);
    std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2),
                             rng.uniform(-2, 2), rng.uniform(-2, 2)};
    auto phi = brute_force_shapley(tree, x);
    double total = 0;
    for (double v : phi) total += v;
    const double v_full = tree.predict(x);
    const double v_empty = tree_expected_value(tree);
    CHECK(std::abs(total - (v_full - v_empty)) < 1e-12);
  }
}

TEST_CASE("brute_force_shapley: more than 15 features is a usage error") {
  auto tree = leaf_tree(1.0, 4.0, 16);
  std::vector<double> x(16, 0.0);
  CHECK_THROWS_AS(brute_force_shapley(tree, x), Error);
}

TEST_CASE("tree_shap: oracle equivalence on randomized trees") {
  Rng rng(7);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const std::size_t d = 2 + rng.next_index(6);
    auto tree = testsupport::make_random_tree(rng, d, 4);
    for (int i = 0; i < 5; ++i) {
      std::vector<double> x(d);
      for (auto& v : x) v = rng.uniform(-2.5, 2.5);
      auto phi = tree_phi(tree, x);
      auto oracle = brute_force_shapley(tree, x);
      for (std::size_t f = 0; f < d; ++f)
        CHECK(std::abs(phi[f] - oracle[f]) < 1e-10);
      ++checked;
    }
  }
  CHECK(checked == 200);
}

TEST_CASE("tree_shap: dummy axiom is exact") {
  // Feature 2 appears in no split: phi[2] must be exactly zero.
  auto tree = stump(0, 0.0, -1.0, 3.0, 2.0, 6.0, 3);
  Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2),
                             rng.uniform(-2, 2)};
    auto phi = tree_phi(tree, x);
    CHECK(phi[1] == 0.0);
    CHECK(phi[2] == 0.0);
  }
}

TEST_CASE("brute_force_shapley: symmetry for duplicated features") {
  // Two copies of the same feature split with equal covers at the same
  // threshold; a tree that uses one copy at each level treats them
  // symmetrically under the oracle.
  RegressionTree t;
  t.n_features = 2;
  TreeNode root, l, r, rl, rr, ll, lr;
  root.feature = 0;
  root.threshold = 0.0;
  root.left = 1;
  root.right = 2;
  root.cover = 8;
  l.feature = 1;
  l.threshold = 0.0;
  l.left = 3;
  l.right = 4;
  l.cover = 4;
  r.feature = 1;
  r.threshold = 0.0;
  r.left = 5;
  r.right = 6;
  r.cover = 4;
  ll.value = 0.0;
  ll.cover = 2;
  lr.value = 1.0;
  lr.cover = 2;
  rl.value = 1.0;
  rl.cover = 2;
  rr.value = 2.0;
  rr.cover = 2;
  t.nodes = {root, l, r, ll, lr, rl, rr};
  // x routes identically through both features, and the tree's value is
  // (x0 > 0) + (x1 > 0): symmetric roles.
  std::vector<double> x = {1.0, 1.0};
  auto phi = brute_force_shapley(t, x);
  CHECK(phi[0] == doctest::Approx(phi[1]).epsilon(1e-12));
}

TEST_CASE("ensemble SHAP: linearity across an additive two-tree ensemble") {
  auto t0 = stump(0, 0.0, -1.0, 2.0, 3.0, 5.0, 2);
  auto t1 = stump(1, 0.5, 4.0, -3.0, 2.0, 6.0, 2);
  auto model = additive_ensemble({t0, t1});
  std::vector<double> x = {0.2, 0.7};
  auto e = tree_shap(model, x);
  auto phi0 = tree_phi(t0, x);
  auto phi1 = tree_phi(t1, x);
  for (std::size_t f = 0; f < 2; ++f)
    CHECK(std::abs(e.phi[f] - (phi0[f] + phi1[f])) < 1e-12);
  CHECK(e.base_value == doctest::Approx(tree_expected_value(t0) +
                                        tree_expected_value(t1))
                            .epsilon(1e-12));
}

TEST_CASE("ensemble SHAP: local accuracy for every additive kind") {
  Rng rng(11);
  auto X = testsupport::random_matrix(rng, 60, 4);
  std::vector<double> y;
  for (const auto& row : X)
    y.push_back(row[0] * 2 - row[1] + row[2] * row[3]);
  for (EnsembleKind kind :
       {EnsembleKind::random_forest, EnsembleKind::extra_trees,
        EnsembleKind::gradient_boost, EnsembleKind::second_order_boost}) {
    HyperParams p = default_params(kind, 31);
    p.n_estimators = 10;
    auto model = fit_ensemble(kind, X, y, p);
    for (int i = 0; i < 25; ++i) {
      std::vector<double> x = {rng.uniform(-3, 3), rng.uniform(-3, 3),
                               rng.uniform(-3, 3), rng.uniform(-3, 3)};
      auto e = tree_shap(model, x);
      CHECK(std::abs(e.total() - model.predict(x)) < 1e-8);
      CHECK_FALSE(e.surrogate);
    }
  }
}

TEST_CASE("ensemble SHAP: AdaBoost is explained via a flagged surrogate") {
  Rng rng(12);
  auto X = testsupport::random_matrix(rng, 50, 3);
  std::vector<double> y;
  for (const auto& row : X) y.push_back(row[0] + rng.uniform(-0.5, 0.5));
  HyperParams p = default_params(EnsembleKind::adaboost_r2, 13);
  p.n_estimators = 8;
  auto model = fit_adaboost_r2(X, y, p);
  std::vector<double> x = {0.5, -0.5, 1.0};
  auto e = tree_shap(model, x);
  CHECK(e.surrogate);
  // Local accuracy holds against the weighted-mean surrogate.
  double total_w = 0;
  for (double w : model.tree_weights) total_w += w;
  double surrogate_pred = 0;
  for (std::size_t t = 0; t < model.trees.size(); ++t)
    surrogate_pred += model.tree_weights[t] / total_w *
                      model.trees[t].predict(std::span<const double>(x));
  CHECK(std::abs(e.total() - surrogate_pred) < 1e-8);
}

TEST_CASE("tree_shap: zero-cover node is a corrupt-model error") {
  auto tree = stump(0, 0.0, 1.0, 2.0, 0.0, 0.0, 2);
  std::vector<double> x = {1.0, 1.0};
  std::vector<double> phi(2, 0.0);
  CHECK_THROWS_AS(tree_shap(tree, x, phi), Error);
}

TEST_CASE("impurity_importance: single split feature takes all the credit") {
  Rng rng(13);
  auto X = testsupport::random_matrix(rng, 40, 4);
  std::vector<double> y;
  for (const auto& row : X) y.push_back(row[3] > 0 ? 5.0 : -5.0);
  HyperParams p = default_params(EnsembleKind::random_forest, 3);
  p.n_estimators = 10;
  p.bootstrap = false;
  auto model = fit_random_forest(X, y, p);
  auto imp = impurity_importance(model);
  CHECK(imp.importance[3] == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t f = 0; f < 3; ++f)
    CHECK(imp.importance[f] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("impurity_importance: nonnegative and sums to one") {
  Rng rng(14);
  auto X = testsupport::random_matrix(rng, 60, 5);
  std::vector<double> y;
  for (const auto& row : X)
    y.push_back(row[0] + 2 * row[1] + row[2] * row[3] + rng.uniform(-1, 1));
  for (EnsembleKind kind :
       {EnsembleKind::random_forest, EnsembleKind::extra_trees,
        EnsembleKind::adaboost_r2, EnsembleKind::gradient_boost,
        EnsembleKind::second_order_boost}) {
    HyperParams p = default_params(kind, 8);
    p.n_estimators = 6;
    auto model = fit_ensemble(kind, X, y, p);
    auto imp = impurity_importance(model);
    double total = 0;
    for (double v : imp.importance) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("impurity_importance: single-leaf model is flagged degenerate") {
  std::vector<std::vector<double>> X = {{0}, {1}, {2}, {3}};
  std::vector<double> y = {2, 2, 2, 2};
  HyperParams p = default_params(EnsembleKind::random_forest, 1);
  p.n_estimators = 3;
  auto model = fit_random_forest(X, y, p);
  auto imp = impurity_importance(model);
  CHECK(imp.degenerate);
  CHECK(imp.importance[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shap_summary: constant model is uninformative") {
  std::vector<std::vector<double>> X = {{0, 1}, {1, 0}, {2, 2}, {3, 1}};
  std::vector<double> y = {4, 4, 4, 4};
  HyperParams p = default_params(EnsembleKind::random_forest, 1);
  p.n_estimators = 2;
  auto model = fit_random_forest(X, y, p);
  auto summary = shap_summary(model, X);
  CHECK(summary.uninformative);
  for (double m : summary.mean_abs_phi) CHECK(m == 0.0);
}

TEST_CASE("shap_summary: single row reduces to |phi| of that row") {
  Rng rng(15);
  auto X = testsupport::random_matrix(rng, 40, 3);
  std::vector<double> y;
  for (const auto& row : X) y.push_back(row[0] * 2 + row[1]);
  HyperParams p = default_params(EnsembleKind::gradient_boost, 5);
  p.n_estimators = 5;
  auto model = fit_gradient_boost(X, y, p);
  std::vector<std::vector<double>> one = {X[0]};
  auto summary = shap_summary(model, one);
  auto e = tree_shap(model, X[0]);
  for (std::size_t f = 0; f < 3; ++f)
    CHECK(summary.mean_abs_phi[f] ==
          doctest::Approx(std::abs(e.phi[f])).epsilon(1e-12));
  // Rank order is a permutation of the features.
  std::vector<bool> seen(3, false);
  for (auto idx : summary.rank_order) seen[idx] = true;
  for (bool b : seen) CHECK(b);
}
