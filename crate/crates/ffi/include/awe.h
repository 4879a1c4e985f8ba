#ifndef AWE_H
#define AWE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AweStatus {
  AWE_OK = 0,
  AWE_ERR_NULL_POINTER = 1,
  AWE_ERR_INVALID_ARGUMENT = 2,
  AWE_ERR_DATA_FORMAT = 3,
  AWE_ERR_NUMERIC = 4,
  AWE_ERR_IO = 5,
  AWE_ERR_PANIC = 6,
} AweStatus;

typedef enum AweFrameMetric {
  AWE_METRIC_COSINE = 0,
  AWE_METRIC_EUCLIDEAN = 1,
} AweFrameMetric;

typedef enum AweNormalize {
  AWE_NORMALIZE_PATH_LENGTH = 0,
  AWE_NORMALIZE_NONE = 1,
} AweNormalize;

/**
 * Opaque trained model.
 */
typedef struct AweModelHandle AweModelHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *awe_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *awe_version(void);

/**
 * Loads a checkpoint. On success `*out` owns a handle for [`awe_model_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AweStatus awe_model_load(const char *path, struct AweModelHandle **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `handle` must come from [`awe_model_load`] and not be used afterwards.
 */
void awe_model_free(struct AweModelHandle *handle);

/**
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum AweStatus awe_model_input_dim(const struct AweModelHandle *handle, size_t *out);

/**
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum AweStatus awe_model_embedding_dim(const struct AweModelHandle *handle, size_t *out);

/**
 * Embeds a row-major `n_frames x dim` segment into `out`, which must hold
 * exactly the model's embedding dimension.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AweStatus awe_model_embed(const struct AweModelHandle *handle,
                               const float *features,
                               size_t n_frames,
                               size_t dim,
                               float *out,
                               size_t out_len);

/**
 * DTW distance between two row-major frame sequences of width `dim`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AweStatus awe_dtw_distance(const float *a,
                                size_t a_frames,
                                const float *b,
                                size_t b_frames,
                                size_t dim,
                                enum AweFrameMetric metric,
                                enum AweNormalize normalize,
                                double *out);

/**
 * `1 - cos(u, v)` for vectors of length `n`.
 *
 * # Safety
 * Pointers must be valid for `n` values.
 */
enum AweStatus awe_cosine_distance(const double *u, const double *v, size_t n, double *out);

/**
 * Shape of the default 39-dimensional MFCC output for `n_samples` samples
 * at 16 kHz.
 *
 * # Safety
 * `rows` and `cols` must be valid pointers.
 */
enum AweStatus awe_mfcc_shape(size_t n_samples, size_t *rows, size_t *cols);

/**
 * Default MFCC features of 16 kHz mono samples, written row-major into
 * `out` whose length must equal `rows * cols` from [`awe_mfcc_shape`].
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AweStatus awe_mfcc(const float *samples, size_t n_samples, float *out, size_t out_len);

/**
 * LSTM encoder parameter count for input width, hidden size and layers.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum AweStatus awe_count_encoder_params(size_t input_dim,
                                        size_t hidden,
                                        size_t layers,
                                        bool bidirectional,
                                        uint64_t *out);

/**
 * Character edit distance between two UTF-8 strings.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated; `out` a valid pointer.
 */
enum AweStatus awe_levenshtein(const char *a, const char *b, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AWE_H */
