// Command-line front end. Talks to the library exclusively through the
// C API in sdp/sdp.h; all policy lives behind that boundary.
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "sdp/sdp.h"

namespace {

const char* status_name(sdp_status s) {
  switch (s) {
    case SDP_OK: return "ok";
    case SDP_ERR_USAGE: return "usage";
    case SDP_ERR_DATA: return "data";
    case SDP_ERR_NUMERIC: return "numeric";
  }
  return "unknown";
}

// One machine-parsable line on stderr, then the status as the exit code.
int fail(sdp_status status, const std::string& message) {
  std::cerr << "sdp: error: kind=" << status_name(status) << " message=\""
            << message << "\"" << std::endl;
  return static_cast<int>(status);
}

int check(sdp_ctx* ctx, sdp_status status) {
  if (status == SDP_OK) return 0;
  return fail(status, sdp_last_error(ctx));
}

// Derive "<name>_metrics.json" next to "<name>_model.json".
std::string metrics_path_for(const std::string& model_path,
                             const std::string& run_dir) {
  std::string stem = model_path;
  const std::size_t slash = stem.find_last_of("/\\");
  if (slash != std::string::npos) stem = stem.substr(slash + 1);
  const std::string suffix = "_model.json";
  if (stem.size() > suffix.size() &&
      stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
    stem = stem.substr(0, stem.size() - suffix.size());
  else if (stem.size() > 5 && stem.compare(stem.size() - 5, 5, ".json") == 0)
    stem = stem.substr(0, stem.size() - 5);
  return run_dir + "/" + stem + "_metrics.json";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable defect prediction pipeline"};
  app.require_subcommand(1);

  std::string in_path, out_dir = ".", config_path, model_name;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t cv = 0, trials = 0, n_records = 0;
  bool cv_set = false, trials_set = false, n_set = false;

  auto add_common = [&](CLI::App* sub, bool needs_in, bool in_required) {
    if (needs_in)
      sub->add_option("--in", in_path, "Input file")->required(in_required);
    sub->add_option("--out", out_dir, "Run directory for artifacts");
    sub->add_option("--config", config_path, "Config file");
    sub->add_option("--seed", seed, "Root seed override")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--cv", cv, "Cross-validation folds")
        ->each([&](const std::string&) { cv_set = true; });
    sub->add_option("--trials", trials, "Random-search trials")
        ->each([&](const std::string&) { trials_set = true; });
    sub->add_option("--n", n_records, "Synthetic record count")
        ->each([&](const std::string&) { n_set = true; });
  };

  CLI::App* cmd_generate = app.add_subcommand("generate", "Write raw.csv and sidecar.json");
  add_common(cmd_generate, false, false);
  CLI::App* cmd_clean = app.add_subcommand("clean", "Run the six cleaning steps");
  add_common(cmd_clean, true, true);
  CLI::App* cmd_correlate = app.add_subcommand("correlate", "Correlation stats over cleaned.csv");
  add_common(cmd_correlate, false, false);
  CLI::App* cmd_train = app.add_subcommand("train", "Search, cross-validate and fit one model");
  add_common(cmd_train, false, false);
  cmd_train->add_option("--model", model_name,
                        "forest|extra|adaboost|gbm|xgb2")->required();
  CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "Metrics for a trained model");
  add_common(cmd_evaluate, true, true);
  CLI::App* cmd_explain = app.add_subcommand("explain", "SHAP and impurity importances");
  add_common(cmd_explain, true, true);
  CLI::App* cmd_report = app.add_subcommand("report", "Assemble report.md / report.json");
  add_common(cmd_report, false, false);
  CLI::App* cmd_pipeline = app.add_subcommand("pipeline", "All stages end to end");
  add_common(cmd_pipeline, true, false);
  cmd_pipeline->add_option("--model", model_name,
                           "Restrict to a comma-separated model list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help() << std::flush;
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(SDP_ERR_USAGE, e.what());
  }

  std::unique_ptr<sdp_ctx, void (*)(sdp_ctx*)> ctx(sdp_ctx_new(),
                                                   &sdp_ctx_free);
  if (!ctx) return fail(SDP_ERR_USAGE, "cannot allocate context");

  if (!config_path.empty()) {
    if (int rc = check(ctx.get(),
                       sdp_ctx_load_config(ctx.get(), config_path.c_str())))
      return rc;
  }
  if (seed_set)
    if (int rc = check(ctx.get(), sdp_ctx_set_seed(ctx.get(), seed))) return rc;
  if (n_set)
    if (int rc = check(ctx.get(), sdp_ctx_set_n(ctx.get(), n_records)))
      return rc;
  if (cv_set)
    if (int rc = check(ctx.get(), sdp_ctx_set_cv(ctx.get(), cv))) return rc;
  if (trials_set)
    if (int rc = check(ctx.get(), sdp_ctx_set_trials(ctx.get(), trials)))
      return rc;

  sdp_ctx* c = ctx.get();
  if (cmd_generate->parsed()) return check(c, sdp_generate(c, out_dir.c_str()));
  if (cmd_clean->parsed())
    return check(c, sdp_clean(c, in_path.c_str(), out_dir.c_str()));
  if (cmd_correlate->parsed()) return check(c, sdp_correlate(c, out_dir.c_str()));
  if (cmd_train->parsed())
    return check(c, sdp_train(c, model_name.c_str(), out_dir.c_str()));
  if (cmd_evaluate->parsed()) {
    const std::string out_json = metrics_path_for(in_path, out_dir);
    return check(c, sdp_evaluate(c, in_path.c_str(), out_dir.c_str(),
                                 out_json.c_str()));
  }
  if (cmd_explain->parsed())
    return check(c, sdp_explain(c, in_path.c_str(), out_dir.c_str()));
  if (cmd_report->parsed()) return check(c, sdp_report(c, out_dir.c_str()));
  if (cmd_pipeline->parsed()) {
    if (!model_name.empty())
      if (int rc = check(c, sdp_ctx_set_models(c, model_name.c_str())))
        return rc;
    return check(c, sdp_pipeline(c, in_path.empty() ? nullptr : in_path.c_str(),
                                 out_dir.c_str()));
  }
  return fail(SDP_ERR_USAGE, "no subcommand given");
}
