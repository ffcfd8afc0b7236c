/* C interface to the cenet temporal knowledge graph forecaster.
 *
 * Every fallible call returns a cenet_status. On failure the thread-local
 * message from cenet_last_error() describes it. Strings handed out through
 * `char**` parameters are owned by the caller and released with
 * cenet_string_free(). */
#ifndef CENET_CENET_H
#define CENET_CENET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CENET_BUILDING_LIBRARY)
#define CENET_API __declspec(dllexport)
#else
#define CENET_API __declspec(dllimport)
#endif
#else
#define CENET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cenet_status {
  CENET_OK = 0,
  CENET_ERR_PARSE = 1,
  CENET_ERR_BOUNDS = 2,
  CENET_ERR_CONTRACT = 3,
  CENET_ERR_NUMERIC = 4,
  CENET_ERR_CONFIG = 5,
  CENET_ERR_IO = 6,
  CENET_ERR_GENERATION = 7,
  CENET_ERR_INVALID_ARGUMENT = 8,
  CENET_ERR_UNKNOWN = 9
} cenet_status;

typedef struct cenet_config cenet_config;
typedef struct cenet_dataset cenet_dataset;
typedef struct cenet_model cenet_model;

typedef struct cenet_synth_spec {
  int64_t entity_count;
  int64_t relation_count;
  int64_t timestamp_count;
  int64_t quads_per_snapshot;
  double repeat_probability;
  int new_event_signal;
  /* Walk steps per subject in the new-event regime; 0 means entity_count. */
  int64_t walk_length;
  uint64_t seed;
  double train_fraction;
  double valid_fraction;
} cenet_synth_spec;

CENET_API const char* cenet_version(void);
/* Message of the last failure on this thread; empty after a success. */
CENET_API const char* cenet_last_error(void);
/* Stable lower-case token for a status, e.g. "bounds". */
CENET_API const char* cenet_status_name(cenet_status status);
CENET_API void cenet_string_free(char* text);

/* Configuration: defaults, then a key=value file, then individual keys. */
CENET_API cenet_status cenet_config_create(cenet_config** out);
CENET_API void cenet_config_destroy(cenet_config* config);
CENET_API cenet_status cenet_config_set(cenet_config* config, const char* key, const char* value);
CENET_API cenet_status cenet_config_get(const cenet_config* config, const char* key, char** out);
CENET_API cenet_status cenet_config_load_file(cenet_config* config, const char* path);
/* Comma-separated list of accepted keys. */
CENET_API cenet_status cenet_config_keys(char** out);
CENET_API cenet_status cenet_config_to_json(const cenet_config* config, char** out);

CENET_API cenet_status cenet_dataset_load(const char* directory, cenet_dataset** out);
CENET_API void cenet_dataset_destroy(cenet_dataset* dataset);
/* Counts and new-event rate per split, plus loader warnings. */
CENET_API cenet_status cenet_dataset_stats(const cenet_dataset* dataset, char** json_out);

/* Freshly initialised model for the dataset's vocabulary. */
CENET_API cenet_status cenet_model_create(const cenet_config* config, const cenet_dataset* dataset,
                                          cenet_model** out);
/* Runs stage 1 and, unless the configuration disables it, stage 2.
 * `log_json` (optional) receives the per-epoch losses of both stages. */
CENET_API cenet_status cenet_model_train(const cenet_config* config, const cenet_dataset* dataset,
                                         cenet_model** out, char** log_json);
CENET_API void cenet_model_destroy(cenet_model* model);
/* Writes the binary checkpoint and its `.json` metadata sidecar. */
CENET_API cenet_status cenet_model_save(const cenet_model* model, const char* path);
CENET_API cenet_status cenet_model_load(const char* path, cenet_model** out);
CENET_API cenet_status cenet_model_info(const cenet_model* model, char** json_out);
/* FNV-1a checksum over every parameter value, independent of optimizer state
 * and stage flags. */
CENET_API cenet_status cenet_model_checksum(const cenet_model* model, uint64_t* out);

/* Filtered metrics on one split ("train", "valid" or "test"). `mask` is one of
 * none, hard, soft, random, gt; NULL picks soft for a model with a trained
 * classifier and none otherwise. Honors CENET_NUM_THREADS. */
CENET_API cenet_status cenet_model_evaluate(const cenet_model* model, const cenet_dataset* dataset,
                                            const char* split, const char* mask, uint64_t random_seed,
                                            char** json_out);
/* Top-k answers for (entity, relation, ?, time). With `subject_direction`
 * set, the query asks for the subject of (?, relation, entity, time) and uses
 * the inverse relation. History comes from every dataset fact before `time`. */
CENET_API cenet_status cenet_model_predict(const cenet_model* model, const cenet_dataset* dataset, int64_t entity,
                                           int64_t relation, int64_t time, int subject_direction, int64_t k,
                                           const char* mask, uint64_t random_seed, char** json_out);

CENET_API void cenet_synth_spec_default(cenet_synth_spec* spec);
/* Writes train/valid/test/stat files plus `labels.tsv` (generator new-event
 * flag per fact) into `directory`. `summary_json` is optional. */
CENET_API cenet_status cenet_synth_write(const cenet_synth_spec* spec, const char* directory, char** summary_json);

/* Git blob hash (hex SHA-1) of a file's content. */
CENET_API cenet_status cenet_hash_file(const char* path, char** out);

#ifdef __cplusplus
}
#endif

#endif
