#ifndef AVTC_H
#define AVTC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define AVTC_MODE_OFFLINE 0

#define AVTC_MODE_ONLINE 1

typedef enum AvtcStatus {
  AVTC_STATUS_OK = 0,
  AVTC_STATUS_NULL_POINTER = 1,
  AVTC_STATUS_INVALID_ARGUMENT = 2,
  AVTC_STATUS_IO = 3,
  AVTC_STATUS_FORMAT = 4,
  AVTC_STATUS_DIMENSION_MISMATCH = 5,
  AVTC_STATUS_INVALID_CONFIG = 6,
  AVTC_STATUS_INVALID_WEIGHTS = 7,
  AVTC_STATUS_PANIC = 8,
} AvtcStatus;

// Opaque pipeline output.
typedef struct AvtcResult AvtcResult;

// Opaque interleaved input stream.
typedef struct AvtcStream AvtcStream;

// Opaque predictor weights.
typedef struct AvtcWeights AvtcWeights;

typedef struct AvtcConfig {
  double rho_sem;
  double rho_spa;
  double tau_merge;
  double depth_threshold;
  double online_threshold;
  // `AVTC_MODE_OFFLINE` or `AVTC_MODE_ONLINE`.
  uint32_t mode;
} AvtcConfig;

typedef struct AvtcStats {
  uint64_t original_video_tokens;
  uint64_t retained_video_tokens;
  uint64_t original_audio_tokens;
  double video_compression;
  double total_compression;
  uint64_t segments;
  uint64_t survivors;
  uint64_t merge_groups;
  uint64_t merges;
  uint64_t warnings;
} AvtcStats;

typedef struct AvtcRetrieval {
  double recall_at_1;
  double recall_at_5;
  double median_rank;
} AvtcRetrieval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *avtc_last_error(void);

// Fills `out` with the default configuration.
//
// # Safety
// `out` must be null or point to writable memory for one `AvtcConfig`.
enum AvtcStatus avtc_config_default(struct AvtcConfig *out);

// Reads an AVTS file.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum AvtcStatus avtc_stream_read(const char *path, struct AvtcStream **out);

// Builds a stream from contiguous buffers: `visual` holds `chunks*F*H*W*d`
// floats (chunk-major, then frame, row, col), `audio` holds `chunks*L*d_a`.
//
// # Safety
// Buffers must hold at least the stated number of floats; `out` must be writable.
enum AvtcStatus avtc_stream_new(size_t chunks,
                                size_t frames,
                                size_t height,
                                size_t width,
                                size_t dim,
                                size_t audio_tokens,
                                size_t audio_dim,
                                const float *visual,
                                const float *audio,
                                struct AvtcStream **out);

// Generates the built-in synthetic benchmark stream for `seed`.
//
// # Safety
// `out` must be writable.
enum AvtcStatus avtc_stream_synthetic_benchmark(uint64_t seed, struct AvtcStream **out);

// Number of chunks, or 0 for a null handle.
//
// # Safety
// `stream` must be null or a live handle.
size_t avtc_stream_chunks(const struct AvtcStream *stream);

// # Safety
// `stream` must be a live handle and `path` a nul-terminated string.
enum AvtcStatus avtc_stream_write(const struct AvtcStream *stream, const char *path);

// # Safety
// `stream` must be null or a handle not yet freed.
void avtc_stream_free(struct AvtcStream *stream);

// Reads an A2VW weights file.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum AvtcStatus avtc_weights_read(const char *path, struct AvtcWeights **out);

// Seeded weights; identical arguments give identical weights.
//
// # Safety
// `out` must be writable.
enum AvtcStatus avtc_weights_init(uint64_t seed,
                                  size_t queries,
                                  size_t hidden,
                                  size_t audio_dim,
                                  size_t visual_dim,
                                  size_t layers,
                                  struct AvtcWeights **out);

// # Safety
// `weights` must be a live handle and `path` a nul-terminated string.
enum AvtcStatus avtc_weights_write(const struct AvtcWeights *weights, const char *path);

// # Safety
// `weights` must be null or a handle not yet freed.
void avtc_weights_free(struct AvtcWeights *weights);

// Compresses `stream`. A null `weights` selects the audio-mean predictor,
// which needs equal audio and visual widths. A null `config` means defaults;
// `threads` of 0 uses every core.
//
// # Safety
// Non-null pointers must be live handles or valid structs; `out` must be writable.
enum AvtcStatus avtc_compress(const struct AvtcStream *stream,
                              const struct AvtcWeights *weights,
                              const struct AvtcConfig *config,
                              size_t threads,
                              struct AvtcResult **out);

// # Safety
// `result` must be a live handle; `out` must be writable.
enum AvtcStatus avtc_result_stats(const struct AvtcResult *result, struct AvtcStats *out);

// Writes the compressed stream as an AVTC file.
//
// # Safety
// `result` must be a live handle and `path` a nul-terminated string.
enum AvtcStatus avtc_result_write(const struct AvtcResult *result, const char *path);

// # Safety
// `result` must be null or a handle not yet freed.
void avtc_result_free(struct AvtcResult *result);

// Retrieval metrics for `n` query rows in `audio` against `n` candidate rows
// in `video`, both row-major `n x dim`.
//
// # Safety
// Each buffer must hold `n*dim` floats; `out` must be writable.
enum AvtcStatus avtc_retrieval_eval(const float *audio,
                                    const float *video,
                                    size_t n,
                                    size_t dim,
                                    struct AvtcRetrieval *out);

// KL divergence in nats between two length-`n` distributions.
//
// # Safety
// `p` and `q` must hold `n` doubles; `out` must be writable.
enum AvtcStatus avtc_kl_divergence(const double *p, const double *q, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AVTC_H */
