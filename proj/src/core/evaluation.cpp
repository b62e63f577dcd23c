#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace sdp::evaluation {

std::tuple<double, double, double> error_metrics(
    std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size())
    throw_usage("error_metrics: length mismatch");
  if (actual.empty()) throw_usage("error_metrics: empty input");
  double mae = 0, mse = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i]))
      throw_numeric("error_metrics: non-finite value");
    const double e = actual[i] - predicted[i];
    mae += std::fabs(e);
    mse += e * e;
  }
  const double n = static_cast<double>(actual.size());
  mae /= n;
  mse /= n;
  return {mae, mse, std::sqrt(mse)};
}

std::pair<double, double> r_squared(std::span<const double> actual,
                                    std::span<const double> predicted,
                                    std::size_t p) {
  if (actual.size() != predicted.size())
    throw_usage("r_squared: length mismatch");
  const std::size_t n = actual.size();
  if (n < p + 2) throw_usage("r_squared: need n >= p + 2");
  double mean = 0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(n);
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  if (ss_tot == 0.0) throw_numeric("r_squared: constant actuals");
  const double r2 = 1.0 - ss_res / ss_tot;
  const double adj = 1.0 - (1.0 - r2) * (static_cast<double>(n) - 1.0) /
                               (static_cast<double>(n - p) - 1.0);
  return {r2, adj};
}

MetricsReport compute_metrics(std::span<const double> actual,
                              std::span<const double> predicted,
                              std::size_t p) {
  MetricsReport rep;
  std::tie(rep.mae, rep.mse, rep.rmse) = error_metrics(actual, predicted);
  std::tie(rep.r2, rep.adj_r2) = r_squared(actual, predicted, p);
  rep.n = actual.size();
  rep.p = p;
  return rep;
}

CVResult kfold_cv(const Trainer& trainer,
                  const std::vector<std::vector<double>>& X,
                  std::span<const double> y, std::size_t k,
                  std::uint64_t seed) {
  if (k < 2) throw_usage("kfold_cv: k must be >= 2");
  const std::size_t n = X.size();
  if (n < k) throw_usage("kfold_cv: fewer rows than folds");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  // Fold f takes a contiguous chunk of the shuffled order; sizes differ by
  // at most one.
  std::vector<std::size_t> bounds(k + 1, 0);
  for (std::size_t f = 0; f < k; ++f)
    bounds[f + 1] = bounds[f] + n / k + (f < n % k ? 1 : 0);

  CVResult res;
  res.seed = seed;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::vector<double>> Xtr, Xte;
    std::vector<double> ytr, yte;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = order[i];
      if (i >= bounds[f] && i < bounds[f + 1]) {
        Xte.push_back(X[r]);
        yte.push_back(y[r]);
      } else {
        Xtr.push_back(X[r]);
        ytr.push_back(y[r]);
      }
    }
    bool degenerate =
        std::all_of(yte.begin(), yte.end(),
                    [&](double v) { return v == yte.front(); });
    if (degenerate) {
      res.fold_scores.push_back(0.0);
      res.fold_degenerate.push_back(true);
      continue;
    }
    learners::Ensemble model = trainer(Xtr, ytr);
    auto preds = model.predict(Xte);
    auto [r2, adj] = r_squared(yte, preds, 0);
    (void)adj;
    res.fold_scores.push_back(r2);
    res.fold_degenerate.push_back(false);
  }

  double sum = 0;
  std::size_t m = 0;
  for (std::size_t f = 0; f < k; ++f) {
    if (res.fold_degenerate[f]) continue;
    sum += res.fold_scores[f];
    ++m;
  }
  if (m == 0) throw_numeric("kfold_cv: every fold had constant actuals");
  res.mean = sum / static_cast<double>(m);
  double var = 0;
  for (std::size_t f = 0; f < k; ++f) {
    if (res.fold_degenerate[f]) continue;
    var += (res.fold_scores[f] - res.mean) * (res.fold_scores[f] - res.mean);
  }
  res.stddev = std::sqrt(var / static_cast<double>(m));
  return res;
}

SearchSpace SearchSpace::defaults(learners::EnsembleKind kind) {
  using learners::EnsembleKind;
  SearchSpace s;
  s.ranges.push_back({"n_estimators", 30, 120, true});
  s.ranges.push_back({"min_samples_leaf", 1, 4, true});
  switch (kind) {
    case EnsembleKind::random_forest:
    case EnsembleKind::extra_trees:
      s.ranges.push_back({"max_depth", 6, 24, true});
      s.ranges.push_back({"max_features", 0.5, 1.0, false});
      break;
    case EnsembleKind::adaboost_r2:
      s.ranges.push_back({"max_depth", 3, 8, true});
      s.ranges.push_back({"learning_rate", 0.3, 1.0, false});
      break;
    case EnsembleKind::gradient_boost:
      s.ranges.push_back({"max_depth", 2, 6, true});
      s.ranges.push_back({"learning_rate", 0.05, 0.3, false});
      break;
    case EnsembleKind::second_order_boost:
      s.ranges.push_back({"max_depth", 2, 6, true});
      s.ranges.push_back({"learning_rate", 0.05, 0.3, false});
      s.ranges.push_back({"lambda", 0.0, 3.0, false});
      break;
  }
  return s;
}

namespace {

void apply_param(learners::HyperParams& p, const std::string& name,
                 double value, bool integer) {
  const double v = integer ? std::floor(value) : value;
  if (name == "n_estimators") p.n_estimators = static_cast<int>(v);
  else if (name == "max_depth") p.max_depth = static_cast<int>(v);
  else if (name == "min_samples_leaf")
    p.min_samples_leaf = static_cast<int>(v);
  else if (name == "learning_rate") p.learning_rate = v;
  else if (name == "max_features") p.max_features = v;
  else if (name == "lambda") p.lambda = v;
  else if (name == "gamma") p.gamma = v;
  else throw_usage("unknown search parameter: \"" + name + "\"");
}

}  // namespace

SearchResult random_search(const SearchSpace& space, std::size_t n_trials,
                           learners::EnsembleKind kind,
                           const std::vector<std::vector<double>>& X,
                           std::span<const double> y, std::size_t cv_k,
                           std::uint64_t seed) {
  if (n_trials < 1) throw_usage("random_search: n_trials must be >= 1");
  if (space.ranges.empty()) throw_usage("random_search: empty space");

  SearchResult res;
  res.seed = seed;

  // All parameter draws come from one sequential stream, so the trial
  // sequence is a pure function of the seed regardless of scoring order.
  Rng draw(seed);
  std::vector<learners::HyperParams> trial_params;
  for (std::size_t t = 0; t < n_trials; ++t) {
    learners::HyperParams p = learners::default_params(kind, 0);
    for (const auto& r : space.ranges) {
      double v = r.integer ? std::floor(draw.uniform(r.lo, r.hi + 1.0))
                           : draw.uniform(r.lo, r.hi);
      if (r.integer) v = std::min(v, r.hi);
      apply_param(p, r.name, v, r.integer);
    }
    p.seed = splitmix64(seed ^ splitmix64(t + 0x51ULL));
    trial_params.push_back(p);
  }

  auto score_trial = [&](std::size_t t) -> double {
    const learners::HyperParams& p = trial_params[t];
    try {
      Trainer trainer = [&](const std::vector<std::vector<double>>& Xtr,
                            std::span<const double> ytr) {
        return learners::fit_ensemble(kind, Xtr, ytr, p);
      };
      const std::uint64_t fold_seed = splitmix64(seed ^ splitmix64(t + 0xf0ULL));
      return kfold_cv(trainer, X, y, cv_k, fold_seed).mean;
    } catch (...) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  std::vector<double> scores(n_trials);
  std::vector<std::future<double>> futures;
  futures.reserve(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t)
    futures.push_back(
        std::async(std::launch::async | std::launch::deferred, score_trial, t));
  for (std::size_t t = 0; t < n_trials; ++t) scores[t] = futures[t].get();

  for (std::size_t t = 0; t < n_trials; ++t)
    res.trials.push_back({trial_params[t], scores[t]});
  res.best_index = 0;
  for (std::size_t t = 1; t < n_trials; ++t)
    if (res.trials[t].score > res.trials[res.best_index].score)
      res.best_index = t;
  return res;
}

MetricsReport evaluate_model(const learners::Ensemble& model,
                             const std::vector<std::vector<double>>& X_test,
                             std::span<const double> y_test, std::size_t p) {
  if (X_test.empty()) throw_usage("evaluate_model: empty test set");
  auto preds = model.predict(X_test);
  return compute_metrics(y_test, preds, p);
}

nlohmann::json MetricsReport::to_json() const {
  return {{"mae", mae},     {"mse", mse}, {"rmse", rmse}, {"r2", r2},
          {"adj_r2", adj_r2}, {"n", n},   {"p", p}};
}

nlohmann::json CVResult::to_json() const {
  return {{"fold_scores", fold_scores},
          {"fold_degenerate", fold_degenerate},
          {"mean", mean},
          {"stddev", stddev},
          {"seed", seed}};
}

nlohmann::json SearchResult::to_json() const {
  nlohmann::json trials_j = nlohmann::json::array();
  for (const auto& t : trials) {
    trials_j.push_back(
        {{"params", t.params.to_json()},
         {"score", std::isfinite(t.score) ? nlohmann::json(t.score)
                                          : nlohmann::json("-inf")}});
  }
  return {{"trials", trials_j}, {"best_index", best_index}, {"seed", seed}};
}

}  // namespace sdp::evaluation
