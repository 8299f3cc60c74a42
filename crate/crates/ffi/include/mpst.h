#ifndef MPST_H
#define MPST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. `Ok` and `No` are answers; the rest are errors.
 */
typedef enum MpstStatus {
  /**
   * The call succeeded and the property holds (or the triple is accepted).
   */
  MPST_STATUS_OK = 0,
  /**
   * The call succeeded and the property fails (or the triple is rejected).
   */
  MPST_STATUS_NO = 1,
  /**
   * A required pointer argument was null.
   */
  MPST_STATUS_NULL_ARGUMENT = 2,
  /**
   * A string argument was not valid UTF-8.
   */
  MPST_STATUS_INVALID_UTF8 = 3,
  /**
   * The spec text does not parse.
   */
  MPST_STATUS_PARSE = 4,
  /**
   * A global type, session or ignored set could not be resolved.
   */
  MPST_STATUS_LOOKUP = 5,
  /**
   * A search or exploration hit its limit before answering.
   */
  MPST_STATUS_LIMIT = 6,
  /**
   * An internal error; the library caught a panic.
   */
  MPST_STATUS_INTERNAL = 7,
} MpstStatus;

/**
 * A parsed spec file.
 */
typedef struct MpstSpec MpstSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses spec text into a new handle written to `*out`.
 *
 * # Safety
 * `source` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum MpstStatus mpst_spec_parse(const char *source, struct MpstSpec **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `spec` must be null or a handle from [`mpst_spec_parse`] not yet freed.
 */
void mpst_spec_free(struct MpstSpec *spec);

/**
 * Checks `global ⊢_ignored session`. Returns `Ok` if accepted and `No` if
 * rejected; `*report` (if `report` is non-null) receives the JSON report.
 * `ignored` is a named ignored set or a comma-separated participant list.
 *
 * # Safety
 * `spec` must be a live handle, the names valid nul-terminated strings, and
 * `report` null or writable.
 */
enum MpstStatus mpst_typecheck(const struct MpstSpec *spec,
                               const char *global,
                               const char *session,
                               const char *ignored,
                               char **report);

/**
 * Infers a global type with a minimal ignored set for `session`, using the
 * default budget. Returns `Ok` with the JSON report, or `Limit` if the
 * budget ran out first.
 *
 * # Safety
 * As for [`mpst_typecheck`].
 */
enum MpstStatus mpst_infer_minimal(const struct MpstSpec *spec, const char *session, char **report);

/**
 * Decides lock-freedom of `session` excluding `ignored`. Returns `Ok` if it
 * holds and `No` (with a witness in the report) otherwise.
 *
 * # Safety
 * As for [`mpst_typecheck`].
 */
enum MpstStatus mpst_lock_free(const struct MpstSpec *spec,
                               const char *session,
                               const char *ignored,
                               size_t state_cap,
                               char **report);

/**
 * The session `name` printed in the spec syntax.
 *
 * # Safety
 * As for [`mpst_typecheck`]; `out` must be writable.
 */
enum MpstStatus mpst_session_text(const struct MpstSpec *spec, const char *name, char **out);

/**
 * The message of the last error on this thread, or null. The pointer stays
 * valid until the next call into the library on the same thread.
 */
const char *mpst_last_error(void);

/**
 * Frees a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void mpst_string_free(char *s);

/**
 * The library version, statically allocated.
 */
const char *mpst_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPST_H */
