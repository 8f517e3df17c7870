#ifndef QHYPER_H
#define QHYPER_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_NULL_POINTER = 1,
  QH_STATUS_INVALID_ARGUMENT = 2,
  QH_STATUS_NOT_MEMBER = 3,
  QH_STATUS_NOT_SEMISIMPLE = 4,
  QH_STATUS_DEGENERATE = 5,
  QH_STATUS_UNSUPPORTED = 6,
  QH_STATUS_NUMERICAL = 7,
  QH_STATUS_BUFFER_TOO_SMALL = 8,
  QH_STATUS_PANIC = 99,
} QhStatus;

typedef enum QhClassification {
  QH_CLASSIFICATION_HYPERBOLIC = 0,
  QH_CLASSIFICATION_ELLIPTIC = 1,
  QH_CLASSIFICATION_PARABOLIC = 2,
  QH_CLASSIFICATION_UNCLASSIFIED = 3,
} QhClassification;

typedef enum QhVerdict {
  QH_VERDICT_CONGRUENT = 0,
  QH_VERDICT_NOT_CONGRUENT = 1,
  QH_VERDICT_CONJUGATE = 2,
  QH_VERDICT_NOT_CONJUGATE = 3,
  QH_VERDICT_INCONCLUSIVE = 4,
} QhVerdict;

typedef enum QhReason {
  QH_REASON_NONE = 0,
  QH_REASON_GRAM_ORBIT,
  QH_REASON_REAL_TRACE,
  QH_REASON_NEGATIVE_CLASS,
  QH_REASON_SINGLE_CONJUGACY,
  QH_REASON_CANONICAL_ORBIT,
  QH_REASON_GRASSMANNIAN,
  QH_REASON_MULTIPLICITY,
  QH_REASON_DEGENERATE,
  QH_REASON_VERIFICATION,
} QhReason;

// Opaque configuration handle.
typedef struct QhConfig QhConfig;

// Opaque isometry handle.
typedef struct QhIsometry QhIsometry;

// Outcome of a decider. `residual` is NaN when there is no witness.
typedef struct QhDecision {
  enum QhVerdict verdict;
  enum QhReason reason;
  bool has_witness;
  double residual;
} QhDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qh_version(void);

// Message for the last failed call on this thread, or NULL.
//
// The pointer stays valid until the next failing call on the same thread.
const char *qh_last_error(void);

// Builds an isometry from an `(n+1) x (n+1)` matrix.
//
// # Safety
// `data` must point to `4 * (n+1)^2` readable doubles and `out` must be a
// valid pointer to write a handle to.
enum QhStatus qh_isometry_new(size_t n, const double *data, double tol, struct QhIsometry **out);

// # Safety
// `iso` must be NULL or a handle from [`qh_isometry_new`] not yet freed.
void qh_isometry_free(struct QhIsometry *iso);

// # Safety
// `iso` must be a live handle and `out` writable.
enum QhStatus qh_isometry_classify(const struct QhIsometry *iso, enum QhClassification *out);

// Writes the `n` real-trace coefficients to `out`.
//
// # Safety
// `iso` must be a live handle and `out` must hold `len` doubles.
enum QhStatus qh_isometry_real_trace(const struct QhIsometry *iso, double *out, size_t len);

// Builds a configuration of `m` points in dimension `n`, the first `i` on
// the boundary. `lifts` holds the `m` lifts back to back.
//
// # Safety
// `lifts` must point to `4 * m * (n+1)` readable doubles and `out` must be
// writable.
enum QhStatus qh_config_new(size_t n,
                            size_t m,
                            size_t i,
                            const double *lifts,
                            struct QhConfig **out);

// # Safety
// `config` must be NULL or a handle from [`qh_config_new`] not yet freed.
void qh_config_free(struct QhConfig *config);

// Invariant profile as a JSON string; release it with [`qh_string_free`].
//
// # Safety
// `config` must be a live handle and `out` writable.
enum QhStatus qh_config_invariants_json(const struct QhConfig *config, char **out);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void qh_string_free(char *s);

// Decides congruence of two configurations. When `witness` is non-NULL and
// the verdict carries one, the `(n+1) x (n+1)` witness is written there.
//
// # Safety
// `a`, `b` must be live handles, `out` writable, and `witness` NULL or
// holding `witness_len` doubles.
enum QhStatus qh_congruent(const struct QhConfig *a,
                           const struct QhConfig *b,
                           double tol,
                           struct QhDecision *out,
                           double *witness,
                           size_t witness_len);

// Decides whether `(a, b)` and `(a2, b2)` are simultaneously conjugate.
//
// # Safety
// All handles must be live, `out` writable, and `witness` NULL or holding
// `witness_len` doubles.
enum QhStatus qh_pair_conjugate(const struct QhIsometry *a,
                                const struct QhIsometry *b,
                                const struct QhIsometry *a2,
                                const struct QhIsometry *b2,
                                double tol,
                                struct QhDecision *out,
                                double *witness,
                                size_t witness_len);

// Copies the last error into `buf` (truncating), returning the full length.
//
// # Safety
// `buf` must be NULL or hold `len` writable bytes.
size_t qh_last_error_copy(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QHYPER_H */
