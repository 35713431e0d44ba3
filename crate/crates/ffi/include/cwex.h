#ifndef CWEX_H
#define CWEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CwexStatus {
  CWEX_STATUS_OK = 0,
  CWEX_STATUS_NULL_POINTER = 1,
  CWEX_STATUS_INVALID_UTF8 = 2,
  CWEX_STATUS_PARSE = 3,
  CWEX_STATUS_INVALID_ARGUMENT = 4,
  CWEX_STATUS_UNLABELED = 5,
  CWEX_STATUS_NOT_FOUND = 6,
  CWEX_STATUS_PANIC = 7,
} CwexStatus;

typedef enum CwexLabel {
  CWEX_LABEL_MALE = 0,
  CWEX_LABEL_FEMALE = 1,
  CWEX_LABEL_NEUTRAL = 2,
  CWEX_LABEL_UNPARSEABLE = 3,
} CwexLabel;

typedef enum CwexPromptMode {
  CWEX_PROMPT_MODE_ZERO_SHOT = 0,
  CWEX_PROMPT_MODE_ONE_SHOT = 1,
  CWEX_PROMPT_MODE_THREE_SHOT = 2,
  CWEX_PROMPT_MODE_COT = 3,
} CwexPromptMode;

/**
 * Document-to-label map.
 */
typedef struct CwexLabels CwexLabels;

/**
 * Parsed run file.
 */
typedef struct CwexRun CwexRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cwex_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *cwex_version(void);

/**
 * `1 / log2(1 + rank)` for `rank >= 1`.
 *
 * # Safety
 * `out` must be a valid pointer or null.
 */
enum CwexStatus cwex_position_weight(size_t rank, double *out);

/**
 * Parses a TREC run file.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum CwexStatus cwex_run_parse(const char *text, struct CwexRun **out);

/**
 * # Safety
 * `run` must come from [`cwex_run_parse`] and not be used afterwards.
 */
void cwex_run_free(struct CwexRun *run);

/**
 * Number of queries in the run.
 *
 * # Safety
 * `run` must be a live handle; `out` a valid pointer.
 */
enum CwexStatus cwex_run_query_count(const struct CwexRun *run, size_t *out);

/**
 * Parses a label TSV. A null `provenance` uses the file's
 * `# provenance:` header, or `human` when absent.
 *
 * # Safety
 * `text` must be a NUL-terminated string, `provenance` one or null, and
 * `out` a valid pointer.
 */
enum CwexStatus cwex_labels_parse(const char *text,
                                  const char *provenance,
                                  struct CwexLabels **out);

/**
 * # Safety
 * `labels` must come from [`cwex_labels_parse`] and not be used afterwards.
 */
void cwex_labels_free(struct CwexLabels *labels);

/**
 * CWEx of one query at cutoff `k`.
 *
 * # Safety
 * Handles must be live, `query_id` NUL-terminated, `out` valid.
 */
enum CwexStatus cwex_query_cwex(const struct CwexRun *run,
                                const struct CwexLabels *labels,
                                const char *query_id,
                                double alpha,
                                size_t k,
                                double *out);

/**
 * `|Exposure_male - Exposure_female|` of one query at cutoff `k`.
 *
 * # Safety
 * Handles must be live, `query_id` NUL-terminated, `out` valid.
 */
enum CwexStatus cwex_query_delta_exposure(const struct CwexRun *run,
                                          const struct CwexLabels *labels,
                                          const char *query_id,
                                          size_t k,
                                          double *out);

/**
 * CWEx of a ranked list given directly as labels in rank order.
 *
 * # Safety
 * `labels` must point to `len` values; `out` must be valid.
 */
enum CwexStatus cwex_cwex_from_labels(const enum CwexLabel *labels,
                                      size_t len,
                                      double alpha,
                                      size_t k,
                                      double *out);

/**
 * Renders the classification prompt. `title` may be null. The result must
 * be released with [`cwex_string_free`].
 *
 * # Safety
 * `text` must be NUL-terminated, `title` NUL-terminated or null, `out`
 * valid.
 */
enum CwexStatus cwex_build_prompt(enum CwexPromptMode mode,
                                  const char *text,
                                  const char *title,
                                  char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void cwex_string_free(char *s);

/**
 * Maps a raw completion to a label; never fails on unrecognized text.
 *
 * # Safety
 * `raw` must be NUL-terminated; `out` valid.
 */
enum CwexStatus cwex_parse_response(const char *raw, enum CwexPromptMode mode, enum CwexLabel *out);

/**
 * Cohen's kappa between two label arrays of equal length.
 *
 * # Safety
 * `a` and `b` must each point to `len` values; `out` must be valid.
 */
enum CwexStatus cwex_cohens_kappa(const enum CwexLabel *a,
                                  const enum CwexLabel *b,
                                  size_t len,
                                  double *out);

/**
 * Fleiss's kappa. `counts` holds `items` rows of three counts in
 * Male, Female, Neutral order.
 *
 * # Safety
 * `counts` must point to `3 * items` values; `out` must be valid.
 */
enum CwexStatus cwex_fleiss_kappa(const uint32_t *counts, size_t items, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CWEX_H */
