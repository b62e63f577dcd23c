#include "core/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace sdp::learners {

std::string kind_name(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::random_forest: return "random_forest";
    case EnsembleKind::extra_trees: return "extra_trees";
    case EnsembleKind::adaboost_r2: return "adaboost_r2";
    case EnsembleKind::gradient_boost: return "gradient_boost";
    case EnsembleKind::second_order_boost: return "second_order_boost";
  }
  throw_usage("unknown ensemble kind");
}

EnsembleKind kind_from_name(const std::string& name) {
  if (name == "random_forest" || name == "forest")
    return EnsembleKind::random_forest;
  if (name == "extra_trees" || name == "extra") return EnsembleKind::extra_trees;
  if (name == "adaboost_r2" || name == "adaboost")
    return EnsembleKind::adaboost_r2;
  if (name == "gradient_boost" || name == "gbm")
    return EnsembleKind::gradient_boost;
  if (name == "second_order_boost" || name == "xgb2")
    return EnsembleKind::second_order_boost;
  throw_usage("unknown model kind: \"" + name + "\"");
}

int HyperParams::resolve_max_features(std::size_t n_features) const {
  if (max_features > 1.0) {
    int k = static_cast<int>(max_features);
    if (static_cast<std::size_t>(k) > n_features)
      throw_usage("max_features exceeds feature count");
    return k;
  }
  if (!(max_features > 0.0)) throw_usage("max_features must be positive");
  int k = static_cast<int>(
      std::ceil(max_features * static_cast<double>(n_features)));
  return std::max(1, std::min<int>(k, static_cast<int>(n_features)));
}

HyperParams default_params(EnsembleKind kind, std::uint64_t seed) {
  HyperParams p;
  p.seed = seed;
  switch (kind) {
    case EnsembleKind::random_forest:
      p.max_depth = -1;
      p.bootstrap = true;
      break;
    case EnsembleKind::extra_trees:
      p.max_depth = -1;
      p.bootstrap = false;
      break;
    case EnsembleKind::adaboost_r2:
      p.max_depth = 3;
      p.bootstrap = false;
      p.n_estimators = 50;
      break;
    case EnsembleKind::gradient_boost:
    case EnsembleKind::second_order_boost:
      p.max_depth = 3;
      p.bootstrap = false;
      break;
  }
  return p;
}

namespace {

void check_fit_input(const std::vector<std::vector<double>>& X,
                     std::span<const double> y, const HyperParams& params) {
  if (X.empty()) throw_usage("fit: empty input");
  if (X.size() != y.size()) throw_usage("fit: X and y length mismatch");
  if (params.n_estimators < 1) throw_usage("fit: n_estimators must be >= 1");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0))
    throw_usage("fit: learning_rate must be in (0,1]");
  if (params.lambda < 0 || params.gamma < 0)
    throw_usage("fit: lambda and gamma must be nonnegative");
}

CartParams cart_params(const HyperParams& p, std::size_t d, SplitStyle style) {
  CartParams cp;
  cp.max_depth = p.max_depth;
  cp.min_samples_leaf = p.min_samples_leaf;
  cp.max_features = p.resolve_max_features(d);
  if (cp.max_features == static_cast<int>(d)) cp.max_features = -1;
  cp.style = style;
  return cp;
}

Ensemble fit_averaging(EnsembleKind kind,
                       const std::vector<std::vector<double>>& X,
                       std::span<const double> y, const HyperParams& params,
                       SplitStyle style) {
  check_fit_input(X, y, params);
  const std::size_t n = X.size();
  const std::size_t d = X[0].size();
  Ensemble model;
  model.kind = kind;
  model.params = params;
  model.seed = params.seed;
  const CartParams cp = cart_params(params, d, style);
  const std::vector<double> unit_w(n, 1.0);

  for (int t = 0; t < params.n_estimators; ++t) {
    Rng rng = Rng::substream(params.seed, static_cast<std::uint64_t>(t));
    if (params.bootstrap) {
      std::vector<std::vector<double>> Xb;
      std::vector<double> yb;
      Xb.reserve(n);
      yb.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.next_index(n);
        Xb.push_back(X[j]);
        yb.push_back(y[j]);
      }
      model.trees.push_back(fit_cart(Xb, yb, unit_w, cp, rng));
    } else {
      model.trees.push_back(fit_cart(X, y, unit_w, cp, rng));
    }
  }
  return model;
}

}  // namespace

Ensemble fit_random_forest(const std::vector<std::vector<double>>& X,
                           std::span<const double> y,
                           const HyperParams& params) {
  return fit_averaging(EnsembleKind::random_forest, X, y, params,
                       SplitStyle::exact);
}

Ensemble fit_extra_trees(const std::vector<std::vector<double>>& X,
                         std::span<const double> y,
                         const HyperParams& params) {
  return fit_averaging(EnsembleKind::extra_trees, X, y, params,
                       SplitStyle::random_threshold);
}

Ensemble fit_adaboost_r2(const std::vector<std::vector<double>>& X,
                         std::span<const double> y,
                         const HyperParams& params) {
  check_fit_input(X, y, params);
  const std::size_t n = X.size();
  const std::size_t d = X[0].size();
  Ensemble model;
  model.kind = EnsembleKind::adaboost_r2;
  model.params = params;
  model.seed = params.seed;
  const CartParams cp = cart_params(params, d, SplitStyle::exact);

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  for (int t = 0; t < params.n_estimators; ++t) {
    Rng rng = Rng::substream(params.seed, static_cast<std::uint64_t>(t));
    RegressionTree tree = fit_cart(X, y, w, cp, rng);

    std::vector<double> err(n);
    double max_err = 0;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = std::fabs(tree.predict(X[i]) - y[i]);
      max_err = std::max(max_err, err[i]);
    }
    if (max_err == 0.0) {
      // Perfect fit: this tree decides the weighted median on its own.
      model.trees.push_back(std::move(tree));
      model.tree_weights.push_back(std::log(1e12));
      model.exact_fit = true;
      break;
    }
    double avg_loss = 0;
    std::vector<double> loss(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = err[i] / max_err;
      switch (params.loss) {
        case AdaLoss::linear: loss[i] = e; break;
        case AdaLoss::square: loss[i] = e * e; break;
        case AdaLoss::exponential: loss[i] = 1.0 - std::exp(-e); break;
      }
      avg_loss += w[i] * loss[i];
    }
    if (avg_loss >= 0.5) {
      if (model.trees.empty()) {
        model.trees.push_back(std::move(tree));
        model.tree_weights.push_back(1.0);
      }
      break;
    }
    const double beta = avg_loss / (1.0 - avg_loss);
    model.trees.push_back(std::move(tree));
    model.tree_weights.push_back(std::log(1.0 / beta));
    double wsum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::pow(beta, 1.0 - loss[i]);
      wsum += w[i];
    }
    for (double& wi : w) wi /= wsum;
  }
  return model;
}

Ensemble fit_gradient_boost(const std::vector<std::vector<double>>& X,
                            std::span<const double> y,
                            const HyperParams& params) {
  check_fit_input(X, y, params);
  const std::size_t n = X.size();
  const std::size_t d = X[0].size();
  Ensemble model;
  model.kind = EnsembleKind::gradient_boost;
  model.params = params;
  model.seed = params.seed;
  model.learning_rate = params.learning_rate;
  model.base_score =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  const CartParams cp = cart_params(params, d, SplitStyle::exact);
  const std::vector<double> unit_w(n, 1.0);

  std::vector<double> current(n, model.base_score);
  std::vector<double> residual(n);
  for (int t = 0; t < params.n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - current[i];
    Rng rng = Rng::substream(params.seed, static_cast<std::uint64_t>(t));
    RegressionTree tree = fit_cart(X, residual, unit_w, cp, rng);
    for (std::size_t i = 0; i < n; ++i)
      current[i] += params.learning_rate * tree.predict(X[i]);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Ensemble fit_second_order_boost(const std::vector<std::vector<double>>& X,
                                std::span<const double> y,
                                const HyperParams& params) {
  check_fit_input(X, y, params);
  const std::size_t n = X.size();
  const std::size_t d = X[0].size();
  Ensemble model;
  model.kind = EnsembleKind::second_order_boost;
  model.params = params;
  model.seed = params.seed;
  model.learning_rate = params.learning_rate;
  model.base_score =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  SecondOrderParams sp;
  sp.max_depth = params.max_depth;
  sp.min_samples_leaf = params.min_samples_leaf;
  sp.max_features = params.resolve_max_features(d);
  if (sp.max_features == static_cast<int>(d)) sp.max_features = -1;
  sp.lambda = params.lambda;
  sp.gamma = params.gamma;

  std::vector<double> current(n, model.base_score);
  std::vector<double> g(n);
  const std::vector<double> h(n, 1.0);  // squared loss
  for (int t = 0; t < params.n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) g[i] = current[i] - y[i];
    Rng rng = Rng::substream(params.seed, static_cast<std::uint64_t>(t));
    RegressionTree tree = fit_second_order_tree(X, g, h, sp, rng);
    for (std::size_t i = 0; i < n; ++i)
      current[i] += params.learning_rate * tree.predict(X[i]);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Ensemble fit_ensemble(EnsembleKind kind,
                      const std::vector<std::vector<double>>& X,
                      std::span<const double> y, const HyperParams& params) {
  switch (kind) {
    case EnsembleKind::random_forest: return fit_random_forest(X, y, params);
    case EnsembleKind::extra_trees: return fit_extra_trees(X, y, params);
    case EnsembleKind::adaboost_r2: return fit_adaboost_r2(X, y, params);
    case EnsembleKind::gradient_boost: return fit_gradient_boost(X, y, params);
    case EnsembleKind::second_order_boost:
      return fit_second_order_boost(X, y, params);
  }
  throw_usage("unknown ensemble kind");
}

double weighted_median(std::vector<double> values,
                       const std::vector<double>& weights) {
  if (values.empty() || values.size() != weights.size())
    throw_usage("weighted_median: bad input");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cum = 0;
  for (std::size_t k : order) {
    cum += weights[k];
    if (cum >= 0.5 * total) return values[k];
  }
  return values[order.back()];
}

double Ensemble::predict(std::span<const double> x) const {
  if (trees.empty()) throw_data("corrupt model: no trees");
  switch (kind) {
    case EnsembleKind::random_forest:
    case EnsembleKind::extra_trees: {
      double sum = 0;
      for (const auto& t : trees) sum += t.predict(x);
      return sum / static_cast<double>(trees.size());
    }
    case EnsembleKind::adaboost_r2: {
      if (tree_weights.size() != trees.size())
        throw_data("corrupt model: tree/weight count mismatch");
      std::vector<double> preds(trees.size());
      for (std::size_t t = 0; t < trees.size(); ++t)
        preds[t] = trees[t].predict(x);
      return weighted_median(std::move(preds), tree_weights);
    }
    case EnsembleKind::gradient_boost:
    case EnsembleKind::second_order_boost: {
      double sum = base_score;
      for (const auto& t : trees) sum += learning_rate * t.predict(x);
      return sum;
    }
  }
  throw_usage("unknown ensemble kind");
}

std::vector<double> Ensemble::predict(
    const std::vector<std::vector<double>>& X) const {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& row : X) out.push_back(predict(row));
  return out;
}

nlohmann::json HyperParams::to_json() const {
  return {{"n_estimators", n_estimators},
          {"max_depth", max_depth},
          {"min_samples_leaf", min_samples_leaf},
          {"max_features", max_features},
          {"learning_rate", learning_rate},
          {"loss", loss == AdaLoss::linear    ? "linear"
                   : loss == AdaLoss::square ? "square"
                                             : "exponential"},
          {"lambda", lambda},
          {"gamma", gamma},
          {"bootstrap", bootstrap},
          {"seed", seed}};
}

HyperParams HyperParams::from_json(const nlohmann::json& j) {
  HyperParams p;
  p.n_estimators = j.at("n_estimators").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.max_features = j.at("max_features").get<double>();
  p.learning_rate = j.at("learning_rate").get<double>();
  const std::string loss = j.at("loss").get<std::string>();
  p.loss = loss == "linear"   ? AdaLoss::linear
           : loss == "square" ? AdaLoss::square
                              : AdaLoss::exponential;
  p.lambda = j.at("lambda").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

nlohmann::json Ensemble::to_json() const {
  nlohmann::json trees_j = nlohmann::json::array();
  for (const auto& t : trees) trees_j.push_back(t.to_json());
  return {{"format_version", 1},
          {"kind", kind_name(kind)},
          {"hyperparameters", params.to_json()},
          {"base_score", base_score},
          {"learning_rate", learning_rate},
          {"trees", trees_j},
          {"tree_weights", tree_weights},
          {"encoder_map", encoders.to_json()},
          {"scaler_params", scaler.to_json()},
          {"feature_names", feature_names},
          {"seed", seed},
          {"exact_fit", exact_fit}};
}

Ensemble Ensemble::from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != 1)
    throw_data("unsupported model format version");
  Ensemble m;
  m.kind = kind_from_name(j.at("kind").get<std::string>());
  m.params = HyperParams::from_json(j.at("hyperparameters"));
  m.base_score = j.at("base_score").get<double>();
  m.learning_rate = j.at("learning_rate").get<double>();
  for (const auto& t : j.at("trees"))
    m.trees.push_back(RegressionTree::from_json(t));
  m.tree_weights = j.at("tree_weights").get<std::vector<double>>();
  m.encoders = preprocess::EncoderMap::from_json(j.at("encoder_map"));
  m.scaler = preprocess::ScalerParams::from_json(j.at("scaler_params"));
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.exact_fit = j.at("exact_fit").get<bool>();
  if (m.trees.empty()) throw_data("corrupt model: no trees");
  if (m.kind == EnsembleKind::adaboost_r2 &&
      m.tree_weights.size() != m.trees.size())
    throw_data("corrupt model: tree/weight count mismatch");
  return m;
}

}  // namespace sdp::learners
