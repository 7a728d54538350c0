/* Generated by cbindgen. Do not edit. */

#ifndef PATHSENS_H
#define PATHSENS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_UNKNOWN_MODEL = 3,
  PS_STATUS_UNSUPPORTED_ORDER = 4,
  PS_STATUS_DIVERGENCE = 5,
  PS_STATUS_INSUFFICIENT_DATA = 6,
  PS_STATUS_TOO_LARGE = 7,
  PS_STATUS_OUT_OF_RANGE = 8,
  PS_STATUS_PANIC = 9,
} PsStatus;

typedef enum {
  PS_COEFFICIENT_DRIFT = 0,
  PS_COEFFICIENT_DIFFUSION = 1,
} PsCoefficient;

typedef enum {
  PS_QUANTITY_STATE = 0,
  PS_QUANTITY_TANGENT1 = 1,
  PS_QUANTITY_TANGENT2 = 2,
} PsQuantity;

// Opaque model handle.
typedef struct PsModel PsModel;

// Opaque simulated path.
typedef struct PsPath PsPath;

// Derivative bounds; a bound is meaningful only when its `has_` flag is set.
typedef struct {
  bool has_l_a;
  double l_a;
  bool has_l_b;
  double l_b;
} PsBounds;

// Simulation settings. `order` is 0 (state only), 1 (first tangent) or 2.
typedef struct {
  double theta;
  double s0;
  double ds0;
  double dds0;
  double t_final;
  size_t steps;
  uint8_t order;
} PsSimConfig;

typedef struct {
  double s;
  double ds;
  double dds;
} PsPathState;

// Monte Carlo settings. `workers = 0` uses every core; results do not
// depend on it.
typedef struct {
  size_t n_paths;
  uint64_t base_seed;
  size_t workers;
} PsMcSettings;

typedef struct {
  uint32_t level;
  double h;
  uint32_t p;
  PsQuantity quantity;
  double estimate;
  double std_error;
  size_t n_paths;
} PsLevelRecord;

typedef struct {
  double slope;
  double intercept;
  double r_squared;
  double slope_ci_halfwidth;
  size_t n_used;
  size_t n_excluded;
} PsRateFit;

typedef struct {
  double prob;
  double u;
  double v;
} PsAtom;

typedef struct {
  double lhs;
  double rhs;
  double c_pk;
  double d_pk;
  bool holds;
} PsLemmaCheck;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ps_version(void);

// Copies the last error message of this thread into `buf` (truncated and
// NUL-terminated to `len` bytes) and returns the full message length
// without the terminator; 0 when there is none. `buf` may be null to query
// the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t ps_last_error_message(char *buf, size_t len);

// Looks up a built-in model (`gbm`, `trig`, `additive`).
//
// # Safety
// `id` must be a NUL-terminated string; `out` must be writable.
PsStatus ps_model_new(const char *id, PsModel **out);

// # Safety
// `model` must be null or a handle from [`ps_model_new`] not yet freed.
void ps_model_free(PsModel *model);

// Model identifier, valid while the handle lives. Null for a null handle.
//
// # Safety
// `model` must be null or a live handle.
const char *ps_model_id(const PsModel *model);

// `∂^i_θ ∂^j_S` of the drift or diffusion at `(theta, s)`, `i + j ≤ 2`.
//
// # Safety
// `model` must be a live handle and `out` writable.
PsStatus ps_model_eval_partial(const PsModel *model,
                               PsCoefficient coefficient,
                               double theta,
                               double s,
                               uint32_t i,
                               uint32_t j,
                               double *out);

// # Safety
// `model` must be a live handle and `out` writable.
PsStatus ps_model_bounds(const PsModel *model, PsBounds *out);

// Simulates one path on increments drawn from stream
// `(base_seed, path_index)`.
//
// # Safety
// `model` and `config` must be valid; `out` writable.
PsStatus ps_simulate_path(const PsModel *model,
                          const PsSimConfig *config,
                          uint64_t base_seed,
                          uint64_t path_index,
                          PsPath **out);

// Simulates one path on caller-supplied Brownian increments; `n` must equal
// `config.steps`.
//
// # Safety
// `increments` must point to `n` doubles.
PsStatus ps_simulate_path_increments(const PsModel *model,
                                     const PsSimConfig *config,
                                     const double *increments,
                                     size_t n,
                                     PsPath **out);

// Number of grid points (`steps + 1`); 0 for a null handle.
//
// # Safety
// `path` must be null or a live handle.
size_t ps_path_len(const PsPath *path);

// State at grid index `n`.
//
// # Safety
// `path` must be a live handle and `out` writable.
PsStatus ps_path_get(const PsPath *path, size_t n, PsPathState *out);

// Componentwise max of the absolute values over the grid.
//
// # Safety
// `path` must be a live handle and `out` writable.
PsStatus ps_path_sup_abs(const PsPath *path, PsPathState *out);

// # Safety
// `path` must be null or a live handle not yet freed.
void ps_path_free(PsPath *path);

// Coupled fine/coarse estimate of `E[sup |fine - coarse|^p]` at `level`
// (fine grid `config.steps · 2^level`).
//
// # Safety
// Pointers must be valid; `out` writable.
PsStatus ps_strong_error(const PsModel *model,
                         const PsSimConfig *config,
                         PsQuantity quantity,
                         uint32_t p,
                         uint32_t level,
                         const PsMcSettings *mc,
                         PsLevelRecord *out);

// Log2-log2 least-squares rate over `n` records sharing `p` and quantity.
//
// # Safety
// `records` must point to `n` records; `out` writable.
PsStatus ps_fit_rate(const PsLevelRecord *records, size_t n, PsRateFit *out);

// Exact check of the product moment bound. Factor `i` has
// `support_sizes[i]` atoms; `atoms` holds all factors' atoms back to back.
//
// # Safety
// `support_sizes` must point to `k` values and `atoms` to their sum.
PsStatus ps_lemma_check(uint32_t p,
                        size_t k,
                        const size_t *support_sizes,
                        const PsAtom *atoms,
                        PsLemmaCheck *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATHSENS_H */
