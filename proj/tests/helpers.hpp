#pragma once

// Shared fixtures and oracles for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "core/rng.hpp"
#include "core/tree.hpp"

namespace testsupport {

struct SplitChoice {
  int feature = -1;
  double threshold = 0;
  double score = -std::numeric_limits<double>::infinity();
};

// Exhaustive enumeration of all (feature, midpoint) root splits, scored in
// the same centered sum-of-squares arithmetic as the CART builder. Ties go
// to the lowest feature index, then the lowest threshold.
inline std::optional<SplitChoice> best_root_split(
    const std::vector<std::vector<double>>& X, const std::vector<double>& y,
    int min_samples_leaf = 1) {
  const std::size_t n = X.size();
  const std::size_t n_features = X.empty() ? 0 : X[0].size();
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);

  SplitChoice best;
  bool found = false;
  for (std::size_t f = 0; f < n_features; ++f) {
    std::vector<double> values;
    for (const auto& row : X) values.push_back(row[f]);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
      const double thr = (sorted[k] + sorted[k + 1]) / 2.0;
      double sl = 0, sr = 0;
      std::size_t nl = 0, nr = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (values[i] <= thr) {
          sl += y[i] - mean;
          ++nl;
        } else {
          sr += y[i] - mean;
          ++nr;
        }
      }
      if (nl < static_cast<std::size_t>(min_samples_leaf) ||
          nr < static_cast<std::size_t>(min_samples_leaf))
        continue;
      const double score = sl * sl / static_cast<double>(nl) +
                           sr * sr / static_cast<double>(nr);
      const bool better =
          score > best.score ||
          (score == best.score &&
           (static_cast<int>(f) < best.feature ||
            (static_cast<int>(f) == best.feature && thr < best.threshold)));
      if (!found || better) {
        best = {static_cast<int>(f), thr, score};
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  return best;
}

// Score of one concrete root split in the same arithmetic, for near-tie
// comparisons between the builder's choice and the enumeration's.
inline double root_split_score(const std::vector<std::vector<double>>& X,
                               const std::vector<double>& y, int feature,
                               double threshold) {
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sl = 0, sr = 0;
  std::size_t nl = 0, nr = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i][static_cast<std::size_t>(feature)] <= threshold) {
      sl += y[i] - mean;
      ++nl;
    } else {
      sr += y[i] - mean;
      ++nr;
    }
  }
  if (nl == 0 || nr == 0) return -std::numeric_limits<double>::infinity();
  return sl * sl / static_cast<double>(nl) +
         sr * sr / static_cast<double>(nr);
}

// Random tree with consistent covers (parent = left + right) and positive
// leaf covers, for SHAP oracle comparisons.
inline sdp::learners::RegressionTree make_random_tree(sdp::Rng& rng,
                                                      std::size_t n_features,
                                                      int max_depth) {
  using sdp::learners::RegressionTree;
  using sdp::learners::TreeNode;
  RegressionTree tree;
  tree.n_features = n_features;

  struct Frame {
    int node;
    int depth;
    double cover;
  };
  tree.nodes.push_back(TreeNode{});
  tree.nodes[0].cover = 16.0 + 48.0 * rng.next_double();
  std::vector<Frame> stack = {{0, 0, tree.nodes[0].cover}};
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    const bool leaf =
        fr.depth >= max_depth || fr.cover < 2.0 || rng.next_double() < 0.25;
    TreeNode& node = tree.nodes[static_cast<std::size_t>(fr.node)];
    node.cover = fr.cover;
    node.impurity = rng.next_double();
    if (leaf) {
      node.feature = -1;
      node.value = rng.uniform(-10.0, 10.0);
      continue;
    }
    node.feature = static_cast<int>(rng.next_index(n_features));
    node.threshold = rng.uniform(-2.0, 2.0);
    node.value = rng.uniform(-10.0, 10.0);
    const double frac = rng.uniform(0.2, 0.8);
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.push_back(TreeNode{});
    tree.nodes[static_cast<std::size_t>(fr.node)].left = left;
    tree.nodes[static_cast<std::size_t>(fr.node)].right = left + 1;
    stack.push_back({left, fr.depth + 1, fr.cover * frac});
    stack.push_back({left + 1, fr.depth + 1, fr.cover * (1.0 - frac)});
  }
  return tree;
}

// Dataset where y is an exact function of a low-cardinality feature, so any
// interpolating tree learner generalizes perfectly across CV folds.
inline void make_learnable(std::size_t n, std::vector<std::vector<double>>& X,
                           std::vector<double>& y) {
  X.clear();
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(i % 4);
    X.push_back({v, static_cast<double>(i % 2)});
    y.push_back(10.0 * v + 1.0);
  }
}

namespace quadrature_detail {

inline double t_density(double s, double df) {
  const double c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
                   0.5 * std::log(df * M_PI);
  return std::exp(c - (df + 1) / 2 * std::log1p(s * s / df));
}

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4 * fm + fb);
}

template <typename F>
double adaptive(const F& f, double a, double b, double fa, double fm,
                double fb, double whole, double eps, int depth) {
  const double m = (a + b) / 2;
  const double lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <=
                        15 * eps * std::max(1e-300, std::abs(left + right)))
    return left + right + (left + right - whole) / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, eps, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, eps, depth - 1);
}

}  // namespace quadrature_detail

// Two-sided Student-t tail 2 * P(T > |t|) by adaptive Simpson over the
// substitution s = t/u, u in (0, 1], which maps the infinite tail onto a
// finite panel. Reference oracle for pearson_p.
inline double quadrature_two_sided_p(double t, double df) {
  namespace qd = quadrature_detail;
  t = std::abs(t);
  if (t == 0) return 1.0;
  auto g = [&](double u) {
    const double s = t / u;
    return qd::t_density(s, df) * t / (u * u);
  };
  double total = 0;
  const double lo = 1e-8;
  const int pieces = 64;
  for (int i = 0; i < pieces; ++i) {
    const double a = lo + (1.0 - lo) * i / pieces;
    const double b = lo + (1.0 - lo) * (i + 1) / pieces;
    const double fa = g(a), fb = g(b), fm = g((a + b) / 2);
    total += qd::adaptive(g, a, b, fa, fm, fb, qd::simpson(a, b, fa, fm, fb),
                          1e-14, 40);
  }
  return 2.0 * total;
}

inline double t_from_r(double r, std::size_t n) {
  return r * std::sqrt((static_cast<double>(n) - 2) / (1 - r * r));
}

inline std::vector<std::vector<double>> random_matrix(sdp::Rng& rng,
                                                      std::size_t n,
                                                      std::size_t d) {
  std::vector<std::vector<double>> X(n, std::vector<double>(d));
  for (auto& row : X)
    for (auto& v : row) v = rng.uniform(-3.0, 3.0);
  return X;
}

}  // namespace testsupport
