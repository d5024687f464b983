/*
 * Copyright 2026 The CoTrans Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to libcotrans.
 *
 * Every call returns a cotrans_status. On failure the message is available
 * from cotrans_last_error() on the same thread until the next failing call.
 * Handles are opaque and owned by the caller; release each with its _free
 * function (passing NULL is allowed). Strings returned through char** are
 * heap-allocated and released with cotrans_string_free. */

#ifndef COTRANS_COTRANS_H_
#define COTRANS_COTRANS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COTRANS_API __declspec(dllexport)
#else
#define COTRANS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cotrans_status {
  COTRANS_OK = 0,
  COTRANS_ERR_INVALID_ARGUMENT = 1,
  COTRANS_ERR_IO = 2,
  COTRANS_ERR_PARSE = 3,
  COTRANS_ERR_NUMERIC = 4,
  COTRANS_ERR_INTERNAL = 5
} cotrans_status;

typedef enum cotrans_metric {
  COTRANS_METRIC_NDCG = 0,
  COTRANS_METRIC_HIT = 1,
  COTRANS_METRIC_MRR = 2
} cotrans_metric;

typedef struct cotrans_config cotrans_config;
typedef struct cotrans_dataset cotrans_dataset;
typedef struct cotrans_model cotrans_model;
typedef struct cotrans_report cotrans_report;

typedef struct cotrans_dataset_stats {
  uint32_t users;
  uint32_t source_items;
  uint32_t target_items;
  uint32_t entities;
  size_t source_edges;
  size_t target_edges;
  size_t entity_edges;
  size_t duplicate_edges;
  size_t dropped_users;
  size_t malformed_lines;
  int has_split;
  size_t evaluated_users;
  size_t excluded_users;
} cotrans_dataset_stats;

/* Called once per finished epoch (epoch 0 is the untrained model) with the
 * record rendered as a single JSON object. */
typedef void (*cotrans_epoch_callback)(const char* json_line, void* user_data);

COTRANS_API const char* cotrans_version(void);
COTRANS_API const char* cotrans_last_error(void);
COTRANS_API void cotrans_string_free(char* s);

/* Configuration: `key = value` settings with built-in defaults. */
COTRANS_API cotrans_status cotrans_config_new(cotrans_config** out);
COTRANS_API cotrans_status cotrans_config_clone(const cotrans_config* config,
                                                cotrans_config** out);
COTRANS_API void cotrans_config_free(cotrans_config* config);
COTRANS_API cotrans_status cotrans_config_set(cotrans_config* config, const char* key,
                                              const char* value);
COTRANS_API cotrans_status cotrans_config_load_file(cotrans_config* config, const char* path);
COTRANS_API cotrans_status cotrans_config_to_text(const cotrans_config* config, char** out);

/* Datasets. Optional paths (kg, maps) may be NULL or empty. */
COTRANS_API cotrans_status cotrans_dataset_load(const char* source, const char* target,
                                                const char* kg, const char* map_source,
                                                const char* map_target,
                                                cotrans_dataset** out);
COTRANS_API cotrans_status cotrans_dataset_load_dir(const char* dir, cotrans_dataset** out);
/* Synthetic data from the config's synth_* settings. */
COTRANS_API cotrans_status cotrans_dataset_generate(const cotrans_config* config,
                                                    cotrans_dataset** out);
COTRANS_API void cotrans_dataset_free(cotrans_dataset* dataset);
/* Replaces any existing split with a fresh leave-one-out split. */
COTRANS_API cotrans_status cotrans_dataset_split(cotrans_dataset* dataset, uint64_t seed);
/* Copy of `dataset` with ceil(ratio * |source edges|) random new source
 * edges. The split, if any, is carried over. */
COTRANS_API cotrans_status cotrans_dataset_inject_noise(const cotrans_dataset* dataset,
                                                        double ratio, uint64_t seed,
                                                        cotrans_dataset** out,
                                                        size_t* added_edges);
COTRANS_API cotrans_status cotrans_dataset_stats_get(const cotrans_dataset* dataset,
                                                     cotrans_dataset_stats* out);
/* Writes the whole bundle (interactions, KG, maps, id maps, split). For
 * synthetic data the relevance flags are written too. */
COTRANS_API cotrans_status cotrans_dataset_write(const cotrans_dataset* dataset,
                                                 const char* dir);
/* The source interactions as TSV text. */
COTRANS_API cotrans_status cotrans_dataset_source_tsv(const cotrans_dataset* dataset,
                                                      char** out);

/* Training. Requires a split. */
COTRANS_API cotrans_status cotrans_train(const cotrans_config* config,
                                         const cotrans_dataset* dataset,
                                         cotrans_epoch_callback on_epoch, void* user_data,
                                         cotrans_model** out);
COTRANS_API void cotrans_model_free(cotrans_model* model);
COTRANS_API cotrans_status cotrans_model_save(const cotrans_model* model, const char* path);
COTRANS_API cotrans_status cotrans_model_load(const char* path, cotrans_model** out);
/* Settings stored with the model (synth_* and split_seed keep defaults). */
COTRANS_API cotrans_status cotrans_model_config(const cotrans_model* model,
                                                cotrans_config** out);
COTRANS_API cotrans_status cotrans_model_best_epoch(const cotrans_model* model,
                                                    uint32_t* epoch, double* validation);

/* Test-set ranking against the full catalogue. */
COTRANS_API cotrans_status cotrans_evaluate(const cotrans_model* model,
                                            const cotrans_dataset* dataset,
                                            const uint32_t* ks, size_t k_count,
                                            cotrans_report** out);
COTRANS_API void cotrans_report_free(cotrans_report* report);
COTRANS_API cotrans_status cotrans_report_value(const cotrans_report* report,
                                                cotrans_metric metric, uint32_t k,
                                                double* out);
/* `variant` may be NULL for an untagged table. */
COTRANS_API cotrans_status cotrans_report_metrics_tsv(const cotrans_report* report,
                                                      const char* variant, char** out);
COTRANS_API cotrans_status cotrans_report_ranks_tsv(const cotrans_report* report,
                                                    const cotrans_dataset* dataset,
                                                    char** out);

/* Utilities. */
COTRANS_API cotrans_status cotrans_write_file(const char* path, const char* data,
                                              size_t size);
/* Lowercase hex SHA-256 of a file, 64 characters plus terminator. */
COTRANS_API cotrans_status cotrans_file_sha256(const char* path, char out[65]);

#ifdef __cplusplus
}
#endif

#endif /* COTRANS_COTRANS_H_ */
