/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CTXSEG_H
#define CTXSEG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CtxStatus {
  CTX_STATUS_OK = 0,
  CTX_STATUS_NULL_ARGUMENT = 1,
  CTX_STATUS_INVALID_UTF8 = 2,
  CTX_STATUS_IO = 3,
  CTX_STATUS_PARSE = 4,
  CTX_STATUS_VALIDATION = 5,
  CTX_STATUS_NOT_CONVERGED = 6,
  CTX_STATUS_PANIC = 7,
} CtxStatus;

typedef struct CtxConfig CtxConfig;

typedef struct CtxFeatures CtxFeatures;

typedef struct CtxGraph CtxGraph;

typedef struct CtxOutcome CtxOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ctx_version(void);

// Message of the last failed call on this thread, or null if the last call
// succeeded. The pointer stays valid until the next call on this thread.
const char *ctx_last_error_message(void);

// Default configuration. Never returns null.
struct CtxConfig *ctx_config_default(void);

// Load a TOML configuration file.
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` must be null or writable.
enum CtxStatus ctx_config_load(const char *path, struct CtxConfig **out);

// Set the seed that drives every randomized step.
//
// # Safety
// `cfg` must be null or a live handle.
enum CtxStatus ctx_config_set_seed(struct CtxConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be null or a handle not yet freed.
void ctx_config_free(struct CtxConfig *cfg);

// Copy a row-major `rows x dim` matrix.
//
// # Safety
// `data` must point to `rows * dim` floats; `out` must be writable.
enum CtxStatus ctx_features_new(const float *data,
                                size_t rows,
                                size_t dim,
                                struct CtxFeatures **out);

// Read a `.fmx` or `.csv` feature file.
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` must be null or writable.
enum CtxStatus ctx_features_read(const char *path, struct CtxFeatures **out);

// Scale every row to unit length.
//
// # Safety
// `f` must be null or a live handle.
enum CtxStatus ctx_features_normalize(struct CtxFeatures *f);

// Number of rows, or 0 for a null handle.
//
// # Safety
// `f` must be null or a live handle.
size_t ctx_features_rows(const struct CtxFeatures *f);

// Row length, or 0 for a null handle.
//
// # Safety
// `f` must be null or a live handle.
size_t ctx_features_dim(const struct CtxFeatures *f);

// # Safety
// `f` must be null or a handle not yet freed.
void ctx_features_free(struct CtxFeatures *f);

// Build the k-nearest-neighbor graph over unit-length features.
//
// # Safety
// `f` must be null or a live handle; `out` must be null or writable.
enum CtxStatus ctx_graph_build(const struct CtxFeatures *f, size_t k, struct CtxGraph **out);

// # Safety
// `path` must be null or a NUL-terminated string; `out` must be null or writable.
enum CtxStatus ctx_graph_read(const char *path, struct CtxGraph **out);

// # Safety
// `g` must be null or a live handle; `path` must be null or a NUL-terminated string.
enum CtxStatus ctx_graph_write(const struct CtxGraph *g, const char *path);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `g` must be null or a live handle.
size_t ctx_graph_node_count(const struct CtxGraph *g);

// Number of stored directed entries, or 0 for a null handle.
//
// # Safety
// `g` must be null or a live handle.
size_t ctx_graph_nnz(const struct CtxGraph *g);

// # Safety
// `g` must be null or a handle not yet freed.
void ctx_graph_free(struct CtxGraph *g);

// Propagate `y` over the graph with retention `mu` by fixed-point iteration.
// Writes `len` values to `out`. Returns `CTX_STATUS_NOT_CONVERGED` when
// `max_iter` is reached; `out` then holds the last iterate.
//
// # Safety
// `y` and `out` must point to `len` doubles; `g` must be null or a live handle.
enum CtxStatus ctx_propagate(const struct CtxGraph *g,
                             const double *y,
                             size_t len,
                             double mu,
                             double tol,
                             size_t max_iter,
                             double *out);

// Write the synthetic video fixture to `dir`.
//
// # Safety
// `dir` must be null or a NUL-terminated string.
enum CtxStatus ctx_synth_write(const char *dir, uint64_t seed);

// Run the full pipeline on `inputs`, writing artifacts to `out_dir`.
//
// # Safety
// `cfg` must be null or a live handle; the paths must be null or
// NUL-terminated strings; `out` must be null or writable.
enum CtxStatus ctx_pipeline_run(const struct CtxConfig *cfg,
                                const char *inputs,
                                const char *out_dir,
                                struct CtxOutcome **out);

// Average IoU against ground truth. Fails with `CTX_STATUS_VALIDATION` when
// the inputs had no ground truth.
//
// # Safety
// `o` must be null or a live handle; `iou` must be null or writable.
enum CtxStatus ctx_outcome_average_iou(const struct CtxOutcome *o, double *iou);

// Final CRF energy, or NaN for a null handle.
//
// # Safety
// `o` must be null or a live handle.
double ctx_outcome_energy(const struct CtxOutcome *o);

// Number of superpixels labeled, or 0 for a null handle.
//
// # Safety
// `o` must be null or a live handle.
size_t ctx_outcome_num_superpixels(const struct CtxOutcome *o);

// Copy the per-superpixel labels into `labels`, which holds `len` entries.
//
// # Safety
// `o` must be null or a live handle; `labels` must point to `len` writable entries.
enum CtxStatus ctx_outcome_labels(const struct CtxOutcome *o, uint32_t *labels, size_t len);

// Whether every propagation and the CRF inference converged; false for a
// null handle.
//
// # Safety
// `o` must be null or a live handle.
bool ctx_outcome_converged(const struct CtxOutcome *o);

// # Safety
// `o` must be null or a handle not yet freed.
void ctx_outcome_free(struct CtxOutcome *o);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXSEG_H */
