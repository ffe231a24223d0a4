#ifndef POSET_CSTAR_H
#define POSET_CSTAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum PcsStatus {
  PCS_STATUS_OK = 0,
  PCS_STATUS_NULL_POINTER = 1,
  PCS_STATUS_INVALID_UTF8 = 2,
  PCS_STATUS_PARSE = 3,
  PCS_STATUS_INVALID_POSET = 4,
  PCS_STATUS_SIZE_LIMIT = 5,
  PCS_STATUS_OUT_OF_RANGE = 6,
  PCS_STATUS_INVALID_INPUT = 7,
  PCS_STATUS_NUMERIC = 8,
  PCS_STATUS_CHECK_FAILED = 9,
  PCS_STATUS_BUFFER_TOO_SMALL = 10,
  PCS_STATUS_PANIC = 11,
} PcsStatus;

/**
 * The maximal upward directed subsets of a poset.
 */
typedef struct PcsDirectedFamily PcsDirectedFamily;

/**
 * A finite poset.
 */
typedef struct PcsPoset PcsPoset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pcs_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *pcs_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pcs_string_free(char *s);

/**
 * Parses `{"elements": [...], "leq": [[a, b], ...]}` into a new poset.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum PcsStatus pcs_poset_from_json(const char *json, struct PcsPoset **out);

/**
 * Frees a poset. NULL is ignored.
 *
 * # Safety
 * `poset` must come from [`pcs_poset_from_json`] and not have been freed.
 */
void pcs_poset_free(struct PcsPoset *poset);

/**
 * Number of elements.
 *
 * # Safety
 * `poset` must be a live handle and `out` a writable pointer.
 */
enum PcsStatus pcs_poset_len(const struct PcsPoset *poset, size_t *out);

/**
 * Writes whether element `a` is below or equal to element `b`.
 *
 * # Safety
 * `poset` must be a live handle and `out` a writable pointer.
 */
enum PcsStatus pcs_poset_leq(const struct PcsPoset *poset, size_t a, size_t b, bool *out);

/**
 * Name of element `i` as a new string.
 *
 * # Safety
 * `poset` must be a live handle and `out` a writable pointer.
 */
enum PcsStatus pcs_poset_element_name(const struct PcsPoset *poset, size_t i, char **out);

/**
 * Computes the maximal upward directed subsets of `poset`.
 *
 * # Safety
 * `poset` must be a live handle and `out` a writable pointer.
 */
enum PcsStatus pcs_decompose(const struct PcsPoset *poset, struct PcsDirectedFamily **out);

/**
 * Frees a family. NULL is ignored.
 *
 * # Safety
 * `family` must come from [`pcs_decompose`] and not have been freed.
 */
void pcs_family_free(struct PcsDirectedFamily *family);

/**
 * Number of members.
 *
 * # Safety
 * `family` must be a live handle and `out` a writable pointer.
 */
enum PcsStatus pcs_family_len(const struct PcsDirectedFamily *family, size_t *out);

/**
 * Copies the ascending element indices of member `i` into `buf`. `len`
 * always receives the member size; when `cap` is smaller nothing is copied
 * and [`PcsStatus::BufferTooSmall`] is returned. `buf` may be NULL when
 * `cap` is 0.
 *
 * # Safety
 * `family` must be a live handle, `len` writable and `buf` writable for
 * `cap` elements.
 */
enum PcsStatus pcs_family_member(const struct PcsDirectedFamily *family,
                                 size_t i,
                                 size_t *buf,
                                 size_t cap,
                                 size_t *len);

/**
 * Members as a JSON array of element-name arrays.
 *
 * # Safety
 * Both handles must be live, `family` computed from `poset`, and `out`
 * writable.
 */
enum PcsStatus pcs_family_to_json(const struct PcsDirectedFamily *family,
                                  const struct PcsPoset *poset,
                                  char **out);

/**
 * Runs a JSON configuration tagged by `"command"` (`decompose`,
 * `topology`, `norms`, `verify-embedding`) and returns the pretty JSON
 * report. `exit_code` receives the CLI exit code: 0 all checks passed, 1 a
 * check failed, 2 bad input. A failed check still returns
 * [`PcsStatus::Ok`] with a report; an error leaves `report` NULL.
 *
 * # Safety
 * `config` must be a NUL-terminated string; `report` and `exit_code` must
 * be writable.
 */
enum PcsStatus pcs_run_json(const char *config, char **report, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSET_CSTAR_H */
