#include "sdp/sdp.h"

#include <cstring>
#include <exception>
#include <new>
#include <span>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "core/ensemble.hpp"
#include "core/error.hpp"
#include "core/run.hpp"

using sdp::Error;
using sdp::harness::RunConfig;

struct sdp_ctx {
  RunConfig config;
  std::string last_error;
};

struct sdp_model {
  sdp::learners::Ensemble model;
};

namespace {

sdp_status guard(sdp_ctx* ctx, const auto& body) {
  if (ctx == nullptr) return SDP_ERR_USAGE;
  ctx->last_error.clear();
  try {
    body();
    return SDP_OK;
  } catch (const Error& e) {
    ctx->last_error = e.what();
    return static_cast<sdp_status>(e.exit_code());
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return SDP_ERR_DATA;
  }
}

std::string require(sdp_ctx* ctx, const char* arg, const char* name) {
  if (arg == nullptr)
    sdp::throw_usage(std::string(name) + " must not be NULL");
  return arg;
}

}  // namespace

extern "C" {

sdp_ctx* sdp_ctx_new(void) { return new (std::nothrow) sdp_ctx(); }

void sdp_ctx_free(sdp_ctx* ctx) { delete ctx; }

const char* sdp_last_error(const sdp_ctx* ctx) {
  return ctx == nullptr ? "null context" : ctx->last_error.c_str();
}

sdp_status sdp_ctx_load_config(sdp_ctx* ctx, const char* path) {
  return guard(ctx, [&] {
    ctx->config = path == nullptr ? RunConfig() : RunConfig::from_file(path);
  });
}

sdp_status sdp_ctx_set_seed(sdp_ctx* ctx, uint64_t seed) {
  return guard(ctx, [&] {
    ctx->config.generator.seed = seed;
    ctx->config.split_seed = seed;
    ctx->config.train_seed = seed;
  });
}

sdp_status sdp_ctx_set_n(sdp_ctx* ctx, size_t n_records) {
  return guard(ctx, [&] {
    if (n_records == 0) sdp::throw_usage("n_records must be >= 1");
    ctx->config.generator.n_records = n_records;
  });
}

sdp_status sdp_ctx_set_cv(sdp_ctx* ctx, size_t folds) {
  return guard(ctx, [&] {
    if (folds < 2) sdp::throw_usage("cv folds must be >= 2");
    ctx->config.cv_folds = folds;
  });
}

sdp_status sdp_ctx_set_trials(sdp_ctx* ctx, size_t trials) {
  return guard(ctx, [&] { ctx->config.trials = trials; });
}

sdp_status sdp_ctx_set_models(sdp_ctx* ctx, const char* csv_names) {
  return guard(ctx, [&] {
    std::string names = require(ctx, csv_names, "csv_names");
    std::vector<std::string> models;
    std::stringstream ss(names);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) {
        sdp::learners::kind_from_name(item);  // validate early
        models.push_back(item);
      }
    }
    if (models.empty()) sdp::throw_usage("model list is empty");
    ctx->config.models = std::move(models);
  });
}

sdp_status sdp_generate(sdp_ctx* ctx, const char* run_dir) {
  return guard(ctx, [&] {
    sdp::harness::stage_generate(ctx->config, require(ctx, run_dir, "run_dir"));
  });
}

sdp_status sdp_clean(sdp_ctx* ctx, const char* in_csv, const char* run_dir) {
  return guard(ctx, [&] {
    sdp::harness::stage_clean(ctx->config, require(ctx, in_csv, "in_csv"),
                              require(ctx, run_dir, "run_dir"));
  });
}

sdp_status sdp_correlate(sdp_ctx* ctx, const char* run_dir) {
  return guard(ctx, [&] {
    sdp::harness::stage_correlate(require(ctx, run_dir, "run_dir"));
  });
}

sdp_status sdp_train(sdp_ctx* ctx, const char* model_name,
                     const char* run_dir) {
  return guard(ctx, [&] {
    sdp::harness::stage_train(ctx->config,
                              require(ctx, model_name, "model_name"),
                              require(ctx, run_dir, "run_dir"));
  });
}

sdp_status sdp_evaluate(sdp_ctx* ctx, const char* model_path,
                        const char* run_dir, const char* out_json) {
  return guard(ctx, [&] {
    sdp::harness::stage_evaluate(require(ctx, model_path, "model_path"),
                                 require(ctx, run_dir, "run_dir"),
                                 require(ctx, out_json, "out_json"));
  });
}

sdp_status sdp_explain(sdp_ctx* ctx, const char* model_path,
                       const char* run_dir) {
  return guard(ctx, [&] {
    sdp::harness::stage_explain(require(ctx, model_path, "model_path"),
                                require(ctx, run_dir, "run_dir"),
                                ctx->config.shap_rows);
  });
}

sdp_status sdp_report(sdp_ctx* ctx, const char* run_dir) {
  return guard(ctx,
               [&] { sdp::harness::stage_report(require(ctx, run_dir, "run_dir")); });
}

sdp_status sdp_pipeline(sdp_ctx* ctx, const char* in_csv_or_null,
                        const char* run_dir) {
  return guard(ctx, [&] {
    sdp::harness::stage_pipeline(
        ctx->config, in_csv_or_null == nullptr ? "" : in_csv_or_null,
        require(ctx, run_dir, "run_dir"));
  });
}

sdp_status sdp_model_open(sdp_ctx* ctx, const char* path, sdp_model** out) {
  return guard(ctx, [&] {
    if (out == nullptr) sdp::throw_usage("out must not be NULL");
    nlohmann::json j =
        nlohmann::json::parse(sdp::harness::read_file(require(ctx, path, "path")),
                              nullptr, false);
    if (j.is_discarded())
      sdp::throw_data(std::string("corrupt model file ") + path);
    auto* handle = new sdp_model{sdp::learners::Ensemble::from_json(j)};
    *out = handle;
  });
}

void sdp_model_close(sdp_model* model) { delete model; }

size_t sdp_model_num_features(const sdp_model* model) {
  return model == nullptr ? 0 : model->model.feature_names.size();
}

sdp_status sdp_model_predict(sdp_ctx* ctx, const sdp_model* model,
                             const double* x, size_t n_features, double* out) {
  return guard(ctx, [&] {
    if (model == nullptr) sdp::throw_usage("model must not be NULL");
    if (x == nullptr || out == nullptr)
      sdp::throw_usage("x and out must not be NULL");
    if (n_features != model->model.feature_names.size())
      sdp::throw_usage("feature count mismatch: expected " +
                       std::to_string(model->model.feature_names.size()) +
                       ", got " + std::to_string(n_features));
    *out = model->model.predict(std::span<const double>(x, n_features));
  });
}

}  // extern "C"
