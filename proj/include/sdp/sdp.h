/* C API for the defect-prediction pipeline.
 *
 * All functions return a status code; on failure the context keeps a
 * human-readable message retrievable with sdp_last_error(). Handles are
 * opaque and must be released with their matching *_free / *_close call.
 */
#ifndef SDP_SDP_H
#define SDP_SDP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SDP_API __declspec(dllexport)
#else
#define SDP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdp_status {
  SDP_OK = 0,
  SDP_ERR_USAGE = 1,   /* bad arguments or call sequence */
  SDP_ERR_DATA = 2,    /* schema, parse, or artifact problems */
  SDP_ERR_NUMERIC = 3, /* non-finite values or degenerate inputs */
} sdp_status;

typedef struct sdp_ctx sdp_ctx;
typedef struct sdp_model sdp_model;

/* Context: owns the run configuration and the last error message. */
SDP_API sdp_ctx* sdp_ctx_new(void);
SDP_API void sdp_ctx_free(sdp_ctx* ctx);

/* Message of the most recent failure on this context; never NULL. The
 * pointer stays valid until the next call on the same context. */
SDP_API const char* sdp_last_error(const sdp_ctx* ctx);

/* Load a config file (INI-style sections) into the context. Pass NULL to
 * reset to defaults. */
SDP_API sdp_status sdp_ctx_load_config(sdp_ctx* ctx, const char* path);

/* Targeted overrides on top of the loaded config. */
SDP_API sdp_status sdp_ctx_set_seed(sdp_ctx* ctx, uint64_t seed);
SDP_API sdp_status sdp_ctx_set_n(sdp_ctx* ctx, size_t n_records);
SDP_API sdp_status sdp_ctx_set_cv(sdp_ctx* ctx, size_t folds);
SDP_API sdp_status sdp_ctx_set_trials(sdp_ctx* ctx, size_t trials);
SDP_API sdp_status sdp_ctx_set_models(sdp_ctx* ctx, const char* csv_names);

/* Pipeline stages. Paths are filesystem paths; run_dir is created when
 * missing and receives the documented artifact files. */
SDP_API sdp_status sdp_generate(sdp_ctx* ctx, const char* run_dir);
SDP_API sdp_status sdp_clean(sdp_ctx* ctx, const char* in_csv,
                             const char* run_dir);
SDP_API sdp_status sdp_correlate(sdp_ctx* ctx, const char* run_dir);
SDP_API sdp_status sdp_train(sdp_ctx* ctx, const char* model_name,
                             const char* run_dir);
SDP_API sdp_status sdp_evaluate(sdp_ctx* ctx, const char* model_path,
                                const char* run_dir, const char* out_json);
SDP_API sdp_status sdp_explain(sdp_ctx* ctx, const char* model_path,
                               const char* run_dir);
SDP_API sdp_status sdp_report(sdp_ctx* ctx, const char* run_dir);
SDP_API sdp_status sdp_pipeline(sdp_ctx* ctx, const char* in_csv_or_null,
                                const char* run_dir);

/* Model handle: load a trained artifact and score raw feature vectors
 * (already encoded and scaled, in the model's feature order). */
SDP_API sdp_status sdp_model_open(sdp_ctx* ctx, const char* path,
                                  sdp_model** out);
SDP_API void sdp_model_close(sdp_model* model);
SDP_API size_t sdp_model_num_features(const sdp_model* model);
SDP_API sdp_status sdp_model_predict(sdp_ctx* ctx, const sdp_model* model,
                                     const double* x, size_t n_features,
                                     double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SDP_SDP_H */
