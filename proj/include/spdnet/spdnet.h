#ifndef SPDNET_SPDNET_H
#define SPDNET_SPDNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(SPDNET_BUILDING_LIBRARY)
#define SPDNET_API __attribute__((visibility("default")))
#else
#define SPDNET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spdnet_status {
    SPDNET_OK = 0,
    SPDNET_E_INVALID_ARGUMENT = 1,
    SPDNET_E_IO = 2,
    SPDNET_E_NUMERICAL = 3,
    SPDNET_E_SCHEMA = 4,
    SPDNET_E_UNLABELED_CASE = 5,
    SPDNET_E_SHAPE_MISMATCH = 6,
    SPDNET_E_VERSION = 7,
    SPDNET_E_CORRUPT_FILE = 8,
    SPDNET_E_MISSING_COMPONENT = 9,
    SPDNET_E_INTERNAL = 100
} spdnet_status;

/* A resolved run configuration. */
typedef struct spdnet_context spdnet_context;

typedef struct spdnet_census {
    int64_t segmentor;
    int64_t prior;
    int64_t posterior;
    int64_t discriminator;
} spdnet_census;

SPDNET_API const char* spdnet_version(void);

/* Message of the last failed call on this thread; empty when none. */
SPDNET_API const char* spdnet_last_error(void);
/* Checkpoint named by the last numerical abort on this thread; empty when none. */
SPDNET_API const char* spdnet_last_checkpoint(void);
/* Strings returned through char** out-parameters. */
SPDNET_API void spdnet_string_free(char* s);

/* Precedence: preset < config file < overrides. Any argument may be NULL;
 * the preset defaults to "paper". overrides_json uses the config schema. */
SPDNET_API spdnet_status spdnet_context_create(const char* preset, const char* config_path, const char* overrides_json,
                                               spdnet_context** out);
SPDNET_API void spdnet_context_destroy(spdnet_context* ctx);
SPDNET_API spdnet_status spdnet_context_config_json(const spdnet_context* ctx, char** out);

SPDNET_API spdnet_status spdnet_synth(const spdnet_context* ctx, const char* out_dir, size_t count, size_t* n_train,
                                      size_t* n_test);
/* resume may be NULL. checkpoint_out (nullable) receives the final checkpoint path. */
SPDNET_API spdnet_status spdnet_train(const spdnet_context* ctx, const char* data_dir, const char* out_dir,
                                      const char* resume, char** checkpoint_out);
/* Evaluates `split` ("train" or "test"; NULL means test); table_out
 * (nullable) receives the summary table. */
SPDNET_API spdnet_status spdnet_eval(const spdnet_context* ctx, const char* checkpoint, const char* data_dir,
                                     const char* out_dir, const char* split, char** table_out);
/* samples == 1: prior mean; > 1: averaged prior draws plus an uncertainty map,
 * whose path goes to uncertainty_out (nullable). */
SPDNET_API spdnet_status spdnet_segment(const spdnet_context* ctx, const char* checkpoint, const char* image,
                                        const char* out_path, int64_t samples, char** uncertainty_out);
SPDNET_API spdnet_status spdnet_report(const char* const* report_paths, size_t count, const char* out_dir,
                                       char** table_out);
SPDNET_API spdnet_status spdnet_index_acdc(const spdnet_context* ctx, const char* root, const char* out_dir,
                                           size_t* entries);
SPDNET_API spdnet_status spdnet_write_truth_echo(const spdnet_context* ctx, const char* path);
SPDNET_API spdnet_status spdnet_checkpoint_census(const char* checkpoint, spdnet_census* out);

#ifdef __cplusplus
}
#endif

#endif
