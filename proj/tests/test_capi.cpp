#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdp/sdp.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("sdp_capi_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

struct Ctx {
  sdp_ctx* ptr;
  Ctx() : ptr(sdp_ctx_new()) { REQUIRE(ptr != nullptr); }
  ~Ctx() { sdp_ctx_free(ptr); }
};

}  // namespace

TEST_CASE("capi: fresh context has an empty last error") {
  Ctx ctx;
  CHECK(std::string(sdp_last_error(ctx.ptr)).empty());
}

TEST_CASE("capi: invalid overrides report usage status and a message") {
  Ctx ctx;
  CHECK(sdp_ctx_set_cv(ctx.ptr, 1) == SDP_ERR_USAGE);
  CHECK_FALSE(std::string(sdp_last_error(ctx.ptr)).empty());
  CHECK(sdp_ctx_set_n(ctx.ptr, 0) == SDP_ERR_USAGE);
  CHECK(sdp_ctx_set_models(ctx.ptr, "forest,warpdrive") == SDP_ERR_USAGE);
  // A successful call clears the error message.
  CHECK(sdp_ctx_set_cv(ctx.ptr, 5) == SDP_OK);
  CHECK(std::string(sdp_last_error(ctx.ptr)).empty());
}

TEST_CASE("capi: cleaning a missing file is a data error") {
  Ctx ctx;
  TempDir dir("missing");
  CHECK(sdp_clean(ctx.ptr, (dir.path / "absent.csv").string().c_str(),
                  dir.str().c_str()) == SDP_ERR_DATA);
  CHECK_FALSE(std::string(sdp_last_error(ctx.ptr)).empty());
}

TEST_CASE("capi: null arguments are usage errors, not crashes") {
  Ctx ctx;
  CHECK(sdp_clean(ctx.ptr, nullptr, "/tmp") == SDP_ERR_USAGE);
  CHECK(sdp_generate(ctx.ptr, nullptr) == SDP_ERR_USAGE);
  CHECK(sdp_model_open(ctx.ptr, "/nonexistent.json", nullptr) ==
        SDP_ERR_USAGE);
}

TEST_CASE("capi: corrupt model file is a data error naming the path") {
  Ctx ctx;
  TempDir dir("corrupt");
  const fs::path bad = dir.path / "broken_model.json";
  std::ofstream(bad) << "{ not json";
  sdp_model* model = nullptr;
  CHECK(sdp_model_open(ctx.ptr, bad.string().c_str(), &model) ==
        SDP_ERR_DATA);
  CHECK(std::string(sdp_last_error(ctx.ptr)).find("broken_model.json") !=
        std::string::npos);
  CHECK(model == nullptr);
}

TEST_CASE("capi: end-to-end stage sequence with a model handle") {
  Ctx ctx;
  TempDir dir("e2e");
  REQUIRE(sdp_ctx_set_n(ctx.ptr, 150) == SDP_OK);
  REQUIRE(sdp_ctx_set_seed(ctx.ptr, 6) == SDP_OK);
  REQUIRE(sdp_ctx_set_cv(ctx.ptr, 3) == SDP_OK);
  REQUIRE(sdp_ctx_set_trials(ctx.ptr, 2) == SDP_OK);

  REQUIRE(sdp_generate(ctx.ptr, dir.str().c_str()) == SDP_OK);
  REQUIRE(sdp_clean(ctx.ptr, (dir.path / "raw.csv").string().c_str(),
                    dir.str().c_str()) == SDP_OK);
  REQUIRE(sdp_correlate(ctx.ptr, dir.str().c_str()) == SDP_OK);
  REQUIRE(sdp_train(ctx.ptr, "forest", dir.str().c_str()) == SDP_OK);

  const std::string model_path = (dir.path / "forest_model.json").string();
  const std::string metrics_path = (dir.path / "forest_metrics.json").string();
  REQUIRE(sdp_evaluate(ctx.ptr, model_path.c_str(), dir.str().c_str(),
                       metrics_path.c_str()) == SDP_OK);
  REQUIRE(sdp_explain(ctx.ptr, model_path.c_str(), dir.str().c_str()) ==
          SDP_OK);
  REQUIRE(sdp_report(ctx.ptr, dir.str().c_str()) == SDP_OK);
  CHECK(fs::exists(dir.path / "report.md"));

  sdp_model* model = nullptr;
  REQUIRE(sdp_model_open(ctx.ptr, model_path.c_str(), &model) == SDP_OK);
  REQUIRE(model != nullptr);
  const size_t d = sdp_model_num_features(model);
  CHECK(d == 10);

  std::vector<double> x(d, 0.0);
  double out = 0;
  CHECK(sdp_model_predict(ctx.ptr, model, x.data(), d, &out) == SDP_OK);
  CHECK(out == out);  // finite, not NaN

  CHECK(sdp_model_predict(ctx.ptr, model, x.data(), d - 1, &out) ==
        SDP_ERR_USAGE);
  sdp_model_close(model);
}

TEST_CASE("capi: pipeline entry point runs end to end") {
  Ctx ctx;
  TempDir dir("pipe");
  REQUIRE(sdp_ctx_set_n(ctx.ptr, 140) == SDP_OK);
  REQUIRE(sdp_ctx_set_seed(ctx.ptr, 15) == SDP_OK);
  REQUIRE(sdp_ctx_set_cv(ctx.ptr, 3) == SDP_OK);
  REQUIRE(sdp_ctx_set_trials(ctx.ptr, 1) == SDP_OK);
  REQUIRE(sdp_ctx_set_models(ctx.ptr, "gbm") == SDP_OK);
  CHECK(sdp_pipeline(ctx.ptr, nullptr, dir.str().c_str()) == SDP_OK);
  CHECK(fs::exists(dir.path / "report.json"));
  CHECK(fs::exists(dir.path / "gbm_model.json"));
}
