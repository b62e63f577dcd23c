#include "core/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/ensemble.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/explain.hpp"
#include "core/preprocess.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace sdp::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw_data("config: key \"" + key + "\": not a number: \"" + value +
               "\"");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw_data("config: key \"" + key + "\": not an integer: \"" + value +
               "\"");
  }
}

std::string path_join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("missing artifact: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw_data("corrupt JSON artifact " + path + ": " + e.what());
  }
  return j;
}

void write_json(const std::string& path, const json& j) {
  atomic_write(path, j.dump(2) + "\n");
}

struct PreparedData {
  preprocess::EncoderMap encoders;
  preprocess::FeatureMatrix all;
};

PreparedData prepare(const Table& cleaned) {
  PreparedData d;
  d.encoders = preprocess::fit_encoders(cleaned, dataset::kCategoricalColumns);
  Table encoded = preprocess::encode(cleaned, d.encoders);
  d.all = preprocess::to_matrix(encoded, dataset::kPredictorColumns,
                                dataset::kTargetColumn);
  return d;
}

struct SplitData {
  preprocess::FeatureMatrix train;
  preprocess::FeatureMatrix test;
  preprocess::ScalerParams scaler;
};

SplitData split_and_scale(const preprocess::FeatureMatrix& all,
                          double test_fraction, std::uint64_t seed) {
  SplitData s;
  auto [train, test] = preprocess::train_test_split(all, test_fraction, seed);
  s.scaler = preprocess::fit_scaler(train);
  preprocess::scale(train, s.scaler);
  preprocess::scale(test, s.scaler);
  s.train = std::move(train);
  s.test = std::move(test);
  return s;
}

}  // namespace

void atomic_write(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_data("cannot open file for writing: " + tmp.string());
    out << content;
    if (!out) throw_data("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_text(read_file(path));
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw_data("config line " + std::to_string(line_no) +
                 ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section == "cleaning") {
      if (key == "reference_date") cfg.cleaning.reference_date = value;
      else if (key == "sparse_threshold")
        cfg.cleaning.sparse_threshold = to_double(key, value);
      else if (key == "corr_threshold")
        cfg.cleaning.corr_threshold = to_double(key, value);
      else if (key == "drop_columns") cfg.cleaning.drop_columns = split_list(value);
      else if (key == "corr_column_order")
        cfg.cleaning.corr_column_order = split_list(value);
      else if (key.rfind("fill.", 0) == 0)
        cfg.cleaning.fill_columns[key.substr(5)] = value;
      else throw_data("config: unknown key \"" + key + "\" in [cleaning]");
    } else if (section == "split") {
      if (key == "test_fraction") cfg.test_fraction = to_double(key, value);
      else if (key == "seed") cfg.split_seed = to_u64(key, value);
      else throw_data("config: unknown key \"" + key + "\" in [split]");
    } else if (section == "train") {
      if (key == "models") cfg.models = split_list(value);
      else if (key == "cv") cfg.cv_folds = to_u64(key, value);
      else if (key == "trials") cfg.trials = to_u64(key, value);
      else if (key == "seed") cfg.train_seed = to_u64(key, value);
      else if (key == "shap_rows") cfg.shap_rows = to_u64(key, value);
      else throw_data("config: unknown key \"" + key + "\" in [train]");
    } else if (section == "generator") {
      auto& g = cfg.generator;
      if (key == "n") g.n_records = to_u64(key, value);
      else if (key == "seed") g.seed = to_u64(key, value);
      else if (key == "noise") g.noise = to_double(key, value);
      else if (key == "blank_targets") g.blank_targets = to_u64(key, value);
      else if (key == "poor_quality_rows")
        g.poor_quality_rows = to_u64(key, value);
      else if (key == "date_lo") g.date_lo = value;
      else if (key == "date_hi") g.date_hi = value;
      else if (key == "size_log_mean") g.size_log_mean = to_double(key, value);
      else if (key == "size_log_sd") g.size_log_sd = to_double(key, value);
      else if (key == "density_log_mean")
        g.density_log_mean = to_double(key, value);
      else if (key == "density_log_sd")
        g.density_log_sd = to_double(key, value);
      else if (key == "effort_log_mean")
        g.effort_log_mean = to_double(key, value);
      else if (key == "effort_log_sd") g.effort_log_sd = to_double(key, value);
      else if (key == "effort_size_log_corr")
        g.effort_size_log_corr = to_double(key, value);
      else if (key == "twin_log_sd") g.twin_log_sd = to_double(key, value);
      else if (key.rfind("missing.", 0) == 0)
        g.missing_rates[key.substr(8)] = to_double(key, value);
      else throw_data("config: unknown key \"" + key + "\" in [generator]");
    } else {
      throw_data("config: unknown section [" + section + "]");
    }
  }
  return cfg;
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  out << "[cleaning]\n";
  out << "reference_date = " << cleaning.reference_date << "\n";
  out << "sparse_threshold = " << csv::format_double(cleaning.sparse_threshold)
      << "\n";
  out << "corr_threshold = " << csv::format_double(cleaning.corr_threshold)
      << "\n";
  out << "drop_columns = ";
  for (std::size_t i = 0; i < cleaning.drop_columns.size(); ++i)
    out << (i ? "," : "") << cleaning.drop_columns[i];
  out << "\n";
  out << "corr_column_order = ";
  for (std::size_t i = 0; i < cleaning.corr_column_order.size(); ++i)
    out << (i ? "," : "") << cleaning.corr_column_order[i];
  out << "\n";
  for (const auto& [col, fill] : cleaning.fill_columns)
    out << "fill." << col << " = " << fill << "\n";
  out << "\n[split]\n";
  out << "test_fraction = " << csv::format_double(test_fraction) << "\n";
  out << "seed = " << split_seed << "\n";
  out << "\n[train]\n";
  out << "models = ";
  for (std::size_t i = 0; i < models.size(); ++i)
    out << (i ? "," : "") << models[i];
  out << "\n";
  out << "cv = " << cv_folds << "\n";
  out << "trials = " << trials << "\n";
  out << "seed = " << train_seed << "\n";
  out << "shap_rows = " << shap_rows << "\n";
  out << "\n[generator]\n";
  out << "n = " << generator.n_records << "\n";
  out << "seed = " << generator.seed << "\n";
  out << "noise = " << csv::format_double(generator.noise) << "\n";
  out << "blank_targets = " << generator.blank_targets << "\n";
  out << "poor_quality_rows = " << generator.poor_quality_rows << "\n";
  for (const auto& [col, rate] : generator.missing_rates)
    out << "missing." << col << " = " << csv::format_double(rate) << "\n";
  out << "date_lo = " << generator.date_lo << "\n";
  out << "date_hi = " << generator.date_hi << "\n";
  out << "size_log_mean = " << csv::format_double(generator.size_log_mean)
      << "\n";
  out << "size_log_sd = " << csv::format_double(generator.size_log_sd) << "\n";
  out << "density_log_mean = "
      << csv::format_double(generator.density_log_mean) << "\n";
  out << "density_log_sd = " << csv::format_double(generator.density_log_sd)
      << "\n";
  out << "effort_log_mean = " << csv::format_double(generator.effort_log_mean)
      << "\n";
  out << "effort_log_sd = " << csv::format_double(generator.effort_log_sd)
      << "\n";
  out << "effort_size_log_corr = "
      << csv::format_double(generator.effort_size_log_corr) << "\n";
  out << "twin_log_sd = " << csv::format_double(generator.twin_log_sd) << "\n";
  return out.str();
}

void stage_generate(const RunConfig& config, const std::string& run_dir) {
  GeneratedData data = generate_dataset(config.generator);
  std::ostringstream csv_out;
  csv::write(csv_out, data.table);
  atomic_write(path_join(run_dir, "raw.csv"), csv_out.str());
  write_json(path_join(run_dir, "sidecar.json"), data.sidecar.to_json());
  atomic_write(path_join(run_dir, "run_config.txt"), config.echo());
}

void stage_clean(const RunConfig& config, const std::string& in_csv,
                 const std::string& run_dir) {
  Table raw = csv::read_file(in_csv, {dataset::kTargetColumn});
  auto [cleaned, report] = dataset::run_cleaning_pipeline(raw, config.cleaning);
  std::ostringstream csv_out;
  csv::write(csv_out, cleaned);
  atomic_write(path_join(run_dir, "cleaned.csv"), csv_out.str());
  write_json(path_join(run_dir, "cleaning_report.json"), report.to_json());
  atomic_write(path_join(run_dir, "run_config.txt"), config.echo());
}

void stage_correlate(const std::string& run_dir) {
  Table cleaned =
      csv::read_file(path_join(run_dir, "cleaned.csv"), {dataset::kTargetColumn});
  auto matrix = stats::corr_matrix(cleaned, dataset::kNumericPredictorColumns);
  write_json(path_join(run_dir, "correlation_matrix.json"), matrix.to_json());

  const auto defects = cleaned.numeric_column(dataset::kTargetColumn);
  struct Pair {
    const char* column;
    const char* stem;
  };
  for (const Pair& p : {Pair{"Defect Density", "density_defects"},
                        Pair{"Functional Size", "size_defects"}}) {
    const auto x = cleaned.numeric_column(p.column);
    auto result = stats::correlate(x, defects);
    write_json(path_join(run_dir, std::string("corr_") + p.stem + ".json"),
               result.to_json());
    std::ostringstream scatter;
    scatter << p.column << "," << dataset::kTargetColumn << "\n";
    for (std::size_t i = 0; i < x.size(); ++i)
      scatter << csv::format_double(x[i]) << ","
              << csv::format_double(defects[i]) << "\n";
    atomic_write(
        path_join(run_dir, std::string("scatter_") + p.stem + ".csv"),
        scatter.str());
  }
}

void stage_train(const RunConfig& config, const std::string& model_name,
                 const std::string& run_dir) {
  using namespace learners;
  const EnsembleKind kind = kind_from_name(model_name);
  Table cleaned =
      csv::read_file(path_join(run_dir, "cleaned.csv"), {dataset::kTargetColumn});
  PreparedData data = prepare(cleaned);
  SplitData split =
      split_and_scale(data.all, config.test_fraction, config.split_seed);

  HyperParams params = default_params(kind, splitmix64(config.train_seed));
  if (config.trials > 0) {
    auto space = evaluation::SearchSpace::defaults(kind);
    auto search = evaluation::random_search(space, config.trials, kind,
                                            split.train.rows,
                                            split.train.target,
                                            config.cv_folds, config.train_seed);
    write_json(path_join(run_dir, model_name + "_search.json"),
               search.to_json());
    params = search.best().params;
  }
  params.seed = splitmix64(config.train_seed ^ 0x6d6f64656cULL);

  evaluation::Trainer trainer =
      [&](const std::vector<std::vector<double>>& X,
          std::span<const double> y) { return fit_ensemble(kind, X, y, params); };
  auto cv = evaluation::kfold_cv(trainer, split.train.rows, split.train.target,
                                 config.cv_folds, config.train_seed);
  write_json(path_join(run_dir, model_name + "_cv.json"), cv.to_json());

  Ensemble model =
      fit_ensemble(kind, split.train.rows, split.train.target, params);
  model.feature_names = split.train.feature_names;
  model.encoders = data.encoders;
  model.scaler = split.scaler;

  json artifact = model.to_json();
  artifact["split"] = {{"seed", config.split_seed},
                       {"test_fraction", config.test_fraction}};
  artifact["model_name"] = model_name;
  write_json(path_join(run_dir, model_name + "_model.json"), artifact);
}

namespace {

struct LoadedModel {
  learners::Ensemble model;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.3;
  std::string model_name;
};

LoadedModel load_model(const std::string& model_path) {
  json j = load_json(model_path);
  LoadedModel lm;
  try {
    lm.model = learners::Ensemble::from_json(j);
    lm.split_seed = j.at("split").at("seed").get<std::uint64_t>();
    lm.test_fraction = j.at("split").at("test_fraction").get<double>();
    lm.model_name = j.at("model_name").get<std::string>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw_data("corrupt model file " + model_path + ": " + e.what());
  }
  return lm;
}

SplitData reproduce_split(const LoadedModel& lm, const std::string& run_dir) {
  Table cleaned =
      csv::read_file(path_join(run_dir, "cleaned.csv"), {dataset::kTargetColumn});
  Table encoded = preprocess::encode(cleaned, lm.model.encoders);
  auto all = preprocess::to_matrix(encoded, dataset::kPredictorColumns,
                                   dataset::kTargetColumn);
  SplitData s;
  auto [train, test] =
      preprocess::train_test_split(all, lm.test_fraction, lm.split_seed);
  s.scaler = lm.model.scaler;
  preprocess::scale(train, s.scaler);
  preprocess::scale(test, s.scaler);
  s.train = std::move(train);
  s.test = std::move(test);
  return s;
}

}  // namespace

void stage_evaluate(const std::string& model_path, const std::string& run_dir,
                    const std::string& out_json) {
  LoadedModel lm = load_model(model_path);
  SplitData split = reproduce_split(lm, run_dir);
  const std::size_t p = lm.model.feature_names.size();
  auto train_metrics = evaluation::evaluate_model(lm.model, split.train.rows,
                                                  split.train.target, p);
  auto test_metrics = evaluation::evaluate_model(lm.model, split.test.rows,
                                                 split.test.target, p);
  json j = {{"model", lm.model_name},
            {"kind", learners::kind_name(lm.model.kind)},
            {"train", train_metrics.to_json()},
            {"test", test_metrics.to_json()}};
  write_json(out_json, j);
}

void stage_explain(const std::string& model_path, const std::string& run_dir,
                   std::size_t max_rows) {
  LoadedModel lm = load_model(model_path);
  SplitData split = reproduce_split(lm, run_dir);

  const auto& X = split.test.rows;
  const std::size_t n_explain = std::min<std::size_t>(max_rows, X.size());
  std::vector<std::vector<double>> rows(X.begin(),
                                        X.begin() + static_cast<long>(n_explain));

  auto importance = explain::impurity_importance(lm.model);
  write_json(path_join(run_dir, lm.model_name + "_importance.json"),
             importance.to_json());

  auto summary = explain::shap_summary(lm.model, rows);
  json summary_j = summary.to_json();
  summary_j["surrogate"] =
      lm.model.kind == learners::EnsembleKind::adaboost_r2;
  write_json(path_join(run_dir, lm.model_name + "_shap_summary.json"),
             summary_j);

  std::ostringstream shap_csv;
  shap_csv << "row_id,feature,value,phi\n";
  double base_value = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto e = explain::tree_shap(lm.model, rows[r], split.test.row_ids[r]);
    if (r == 0) {
      base_value = e.base_value;
      shap_csv << "base_value,,," << csv::format_double(base_value) << "\n";
    }
    for (std::size_t f = 0; f < e.phi.size(); ++f) {
      shap_csv << e.row_id << ",\"" << lm.model.feature_names[f] << "\","
               << csv::format_double(rows[r][f]) << ","
               << csv::format_double(e.phi[f]) << "\n";
    }
  }
  atomic_write(path_join(run_dir, lm.model_name + "_shap.csv"),
               shap_csv.str());
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void stage_report(const std::string& run_dir) {
  // Discover trained models from their metrics artifacts, in name order.
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string file = entry.path().filename().string();
    const std::string suffix = "_metrics.json";
    if (file.size() > suffix.size() &&
        file.compare(file.size() - suffix.size(), suffix.size(), suffix) == 0)
      names.push_back(file.substr(0, file.size() - suffix.size()));
  }
  std::sort(names.begin(), names.end());
  if (names.empty())
    throw_data("missing artifact: " + path_join(run_dir, "<model>_metrics.json"));

  json bundle;
  std::ostringstream md;
  md << "# Run report\n\n## Model comparison\n\n";
  md << "| Model | CV score | Train R2 | Train adj R2 | Train MAE | Train MSE "
        "| Train RMSE | Test R2 | Test adj R2 | Test MAE | Test MSE | Test "
        "RMSE |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  bundle["models"] = json::array();
  for (const auto& name : names) {
    json metrics = load_json(path_join(run_dir, name + "_metrics.json"));
    json cv = load_json(path_join(run_dir, name + "_cv.json"));
    const json& tr = metrics.at("train");
    const json& te = metrics.at("test");
    md << "| " << name << " | " << fmt(cv.at("mean").get<double>());
    for (const json& m : {tr, te}) {
      md << " | " << fmt(m.at("r2").get<double>()) << " | "
         << fmt(m.at("adj_r2").get<double>()) << " | "
         << fmt(m.at("mae").get<double>()) << " | "
         << fmt(m.at("mse").get<double>()) << " | "
         << fmt(m.at("rmse").get<double>());
    }
    md << " |\n";
    bundle["models"].push_back(
        {{"name", name}, {"cv", cv}, {"metrics", metrics}});
  }

  md << "\n## Feature importance\n\n";
  bundle["importance"] = json::object();
  for (const auto& name : names) {
    json imp = load_json(path_join(run_dir, name + "_importance.json"));
    bundle["importance"][name] = imp;
    const auto features = imp.at("feature_names").get<std::vector<std::string>>();
    const auto values = imp.at("importance").get<std::vector<double>>();
    std::vector<std::size_t> order(features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                     std::size_t b) {
      return values[a] > values[b];
    });
    md << "### " << name << "\n\n| Rank | Feature | Importance | Note |\n"
       << "|---|---|---|---|\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
      std::string note;
      if (k < 5) note = "top-5";
      if (k + 3 >= order.size()) note = "bottom-3";
      md << "| " << (k + 1) << " | " << features[order[k]] << " | "
         << fmt(values[order[k]]) << " | " << note << " |\n";
    }
    md << "\n";
  }

  md << "## SHAP rankings\n\n";
  bundle["shap"] = json::object();
  for (const auto& name : names) {
    json summary = load_json(path_join(run_dir, name + "_shap_summary.json"));
    bundle["shap"][name] = summary;
    const auto features =
        summary.at("feature_names").get<std::vector<std::string>>();
    const auto means = summary.at("mean_abs_phi").get<std::vector<double>>();
    const auto order = summary.at("rank_order").get<std::vector<std::size_t>>();
    md << "### " << name;
    if (summary.value("surrogate", false)) md << " (weighted-mean surrogate)";
    md << "\n\n| Rank | Feature | mean(|phi|) |\n|---|---|---|\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
      md << "| " << (k + 1) << " | " << features[order[k]] << " | "
         << fmt(means[order[k]]) << " |\n";
    }
    md << "\n";
  }

  // Category frequency tables from the cleaned table.
  Table cleaned =
      csv::read_file(path_join(run_dir, "cleaned.csv"), {dataset::kTargetColumn});
  md << "## Category frequencies\n\n";
  bundle["frequencies"] = json::object();
  for (const auto& col : dataset::kCategoricalColumns) {
    std::map<std::string, std::size_t> counts;
    std::size_t ci = cleaned.col_index(col);
    for (std::size_t r = 0; r < cleaned.n_rows(); ++r)
      counts[*cleaned.cell(r, ci)] += 1;
    bundle["frequencies"][col] = counts;
    std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(),
                                                             counts.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
    md << "### " << col << "\n\n| Category | Count |\n|---|---|\n";
    for (const auto& [cat, cnt] : ordered)
      md << "| " << cat << " | " << cnt << " |\n";
    md << "\n";
  }

  // Correlation artifacts are referenced, not inlined.
  bundle["correlation_matrix"] =
      load_json(path_join(run_dir, "correlation_matrix.json"));
  bundle["correlations"] = {
      {"density_defects", load_json(path_join(run_dir, "corr_density_defects.json"))},
      {"size_defects", load_json(path_join(run_dir, "corr_size_defects.json"))}};

  write_json(path_join(run_dir, "report.json"), bundle);
  atomic_write(path_join(run_dir, "report.md"), md.str());
}

void stage_pipeline(const RunConfig& config, const std::string& in_csv,
                    const std::string& run_dir) {
  std::string raw = in_csv;
  if (raw.empty()) {
    stage_generate(config, run_dir);
    raw = path_join(run_dir, "raw.csv");
  }
  stage_clean(config, raw, run_dir);
  stage_correlate(run_dir);
  for (const auto& name : config.models) {
    stage_train(config, name, run_dir);
    const std::string model_path = path_join(run_dir, name + "_model.json");
    stage_evaluate(model_path, run_dir,
                   path_join(run_dir, name + "_metrics.json"));
    stage_explain(model_path, run_dir, config.shap_rows);
  }
  stage_report(run_dir);
}

}  // namespace sdp::harness
