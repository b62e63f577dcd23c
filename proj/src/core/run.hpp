#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/generator.hpp"

namespace sdp::harness {

// Everything a full run needs; parsed from a flat key-value config file with
// sections and echoed verbatim into the output directory.
struct RunConfig {
  dataset::CleaningConfig cleaning = dataset::CleaningConfig::defaults();
  GeneratorConfig generator;
  double test_fraction = 0.30;
  std::uint64_t split_seed = 42;
  std::vector<std::string> models = {"forest", "extra", "adaboost", "gbm",
                                     "xgb2"};
  std::size_t cv_folds = 5;
  std::size_t trials = 25;
  std::uint64_t train_seed = 42;
  std::size_t shap_rows = 200;  // instances explained for the summary

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);
  std::string echo() const;  // canonical re-serialization
};

// Write-temp-then-rename; partial artifacts never land under their final
// name.
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Stage entry points behind the CLI. Each reads and writes the documented
// file formats inside run_dir.
void stage_generate(const RunConfig& config, const std::string& run_dir);
void stage_clean(const RunConfig& config, const std::string& in_csv,
                 const std::string& run_dir);
void stage_correlate(const std::string& run_dir);
void stage_train(const RunConfig& config, const std::string& model_name,
                 const std::string& run_dir);
void stage_evaluate(const std::string& model_path, const std::string& run_dir,
                    const std::string& out_json);
void stage_explain(const std::string& model_path, const std::string& run_dir,
                   std::size_t max_rows);
void stage_report(const std::string& run_dir);
void stage_pipeline(const RunConfig& config, const std::string& in_csv,
                    const std::string& run_dir);

}  // namespace sdp::harness
