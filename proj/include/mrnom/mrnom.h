/* C interface to the mrnom cell segmentation library.
 *
 * Every function returns an mrnom_status. On failure, mrnom_last_error() gives a
 * message for the calling thread. Handles are opaque and owned by the caller;
 * release them with the matching *_free function (NULL is accepted). */
#ifndef MRNOM_H
#define MRNOM_H

#include <stddef.h>
#include <stdint.h>

#if defined(MRNOM_BUILDING_LIBRARY)
#define MRNOM_API __attribute__((visibility("default")))
#else
#define MRNOM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mrnom_status {
  MRNOM_OK = 0,
  MRNOM_ERR_INVALID_ARGUMENT = 1,
  MRNOM_ERR_PRECONDITION = 2,
  MRNOM_ERR_DEGENERATE = 3, /* e.g. single-class training data */
  MRNOM_ERR_IO = 4,
  MRNOM_ERR_SCHEMA = 5,     /* bad config key, model format or feature schema */
  MRNOM_ERR_INTERNAL = 6
} mrnom_status;

typedef struct mrnom_config mrnom_config;
typedef struct mrnom_image mrnom_image;
typedef struct mrnom_labels mrnom_labels;
typedef struct mrnom_model mrnom_model;
typedef struct mrnom_trainer mrnom_trainer;

typedef struct mrnom_match {
  double threshold;
  int tp;
  int fp;
  int fn;
  double ap;
} mrnom_match;

MRNOM_API const char* mrnom_version(void);
MRNOM_API const char* mrnom_last_error(void);
/* Frees strings returned through char** out-parameters. */
MRNOM_API void mrnom_string_free(char* s);

/* Configuration: flat "key = value" text, unknown keys rejected. */
MRNOM_API mrnom_status mrnom_config_new(mrnom_config** out);
MRNOM_API mrnom_status mrnom_config_parse(const char* text, mrnom_config** out);
MRNOM_API mrnom_status mrnom_config_load(const char* path, mrnom_config** out);
MRNOM_API mrnom_status mrnom_config_set(mrnom_config* cfg, const char* key, const char* value);
MRNOM_API mrnom_status mrnom_config_get(const mrnom_config* cfg, const char* key, char** value);
MRNOM_API mrnom_status mrnom_config_set_seed(mrnom_config* cfg, uint64_t seed);
MRNOM_API mrnom_status mrnom_config_canonical(const mrnom_config* cfg, char** text);
/* 64 hex digits plus terminator: buf needs at least 65 bytes. */
MRNOM_API mrnom_status mrnom_config_hash(const mrnom_config* cfg, char* buf, size_t cap);
MRNOM_API void mrnom_config_free(mrnom_config* cfg);

/* Images: 8-bit, 1 or 3 interleaved channels. */
MRNOM_API mrnom_status mrnom_image_read(const char* path, mrnom_image** out);
MRNOM_API mrnom_status mrnom_image_from_pixels(int width, int height, int channels, const uint8_t* pixels, mrnom_image** out);
MRNOM_API mrnom_status mrnom_image_info(const mrnom_image* img, int* width, int* height, int* channels);
MRNOM_API mrnom_status mrnom_image_write_png(const mrnom_image* img, const char* path);
MRNOM_API void mrnom_image_free(mrnom_image* img);

/* Label maps: 0 is background. Stored as 16-bit single-channel PNG. */
MRNOM_API mrnom_status mrnom_labels_read(const char* path, mrnom_labels** out);
MRNOM_API mrnom_status mrnom_labels_from_data(int width, int height, const int32_t* data, mrnom_labels** out);
MRNOM_API mrnom_status mrnom_labels_data(const mrnom_labels* lb, int* width, int* height, const int32_t** data);
MRNOM_API mrnom_status mrnom_labels_count(const mrnom_labels* lb, int* count);
MRNOM_API mrnom_status mrnom_labels_write(const mrnom_labels* lb, const char* path);
MRNOM_API void mrnom_labels_free(mrnom_labels* lb);

/* Random-forest models (merge: 83 features, filter: 28). */
MRNOM_API mrnom_status mrnom_model_load(const char* path, mrnom_model** out);
MRNOM_API mrnom_status mrnom_model_save(const mrnom_model* model, const char* path);
/* SHA-256 of the serialised model; buf needs at least 65 bytes. */
MRNOM_API mrnom_status mrnom_model_hash(const mrnom_model* model, char* buf, size_t cap);
MRNOM_API mrnom_status mrnom_model_kind(const mrnom_model* model, char** kind);
MRNOM_API void mrnom_model_free(mrnom_model* model);

/* Full pipeline on one tile. timings_json may be NULL. */
MRNOM_API mrnom_status mrnom_segment(const mrnom_config* cfg, const mrnom_model* merge_model,
                                     const mrnom_model* filter_model, const mrnom_image* tile, mrnom_labels** out,
                                     char** timings_json);
/* Label boundaries in red over the tile's grey levels. */
MRNOM_API mrnom_status mrnom_write_overlay(const mrnom_image* tile, const mrnom_labels* lb, const char* path);

/* Training: add annotated tiles, then run. On MRNOM_ERR_DEGENERATE the message carries class counts. */
MRNOM_API mrnom_status mrnom_trainer_new(const mrnom_config* cfg, mrnom_trainer** out);
MRNOM_API mrnom_status mrnom_trainer_add(mrnom_trainer* tr, const mrnom_image* tile, const mrnom_labels* gt);
MRNOM_API mrnom_status mrnom_trainer_run(mrnom_trainer* tr, mrnom_model** merge_model, mrnom_model** filter_model);
/* Training sets of the last run as CSV (header of feature names plus "class"). */
MRNOM_API mrnom_status mrnom_trainer_export(const mrnom_trainer* tr, char** merge_csv, char** filter_csv);
MRNOM_API void mrnom_trainer_free(mrnom_trainer* tr);

/* One row per threshold (ascending) into rows[0..n). */
MRNOM_API mrnom_status mrnom_eval(const mrnom_labels* pred, const mrnom_labels* gt, const double* thresholds, size_t n,
                                  mrnom_match* rows);
MRNOM_API double mrnom_average_precision(int tp, int fp, int fn);
/* TP outlines black, FP red, FN yellow at one threshold. tile may be NULL (white canvas). */
MRNOM_API mrnom_status mrnom_write_match_overlay(const mrnom_image* tile, const mrnom_labels* pred, const mrnom_labels* gt,
                                                 double threshold, const char* path);

/* Synthetic annotated tile from the synth.* config keys, with the given seed. */
MRNOM_API mrnom_status mrnom_synth(const mrnom_config* cfg, uint64_t seed, mrnom_image** tile, mrnom_labels** gt);

#ifdef __cplusplus
}
#endif

#endif
