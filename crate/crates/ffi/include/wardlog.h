#ifndef WARDLOG_H
#define WARDLOG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum wl_status {
  WL_STATUS_OK = 0,
  // A required pointer argument was null.
  WL_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  WL_STATUS_INVALID_UTF8 = 2,
  // The program text does not parse or is ill-formed.
  WL_STATUS_PARSE = 3,
  WL_STATUS_IO = 4,
  // The program is not warded and safely tainted.
  WL_STATUS_NOT_CERTIFIED = 5,
  // The chase reached the step limit.
  WL_STATUS_STEP_LIMIT = 6,
  // The query text is not a single query.
  WL_STATUS_INVALID_QUERY = 7,
  // A Rust panic was caught at the boundary.
  WL_STATUS_INTERNAL = 99,
} wl_status;

// A parsed program together with its database.
typedef struct wl_program wl_program;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses program text. On success `*out` owns a new handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum wl_status wl_program_parse(const char *text, struct wl_program **out);

// Reads and parses a program file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum wl_status wl_program_load(const char *path, struct wl_program **out);

// Adds the facts of every `<predicate>.csv` file in `dir` to the database,
// skipping duplicates.
//
// # Safety
// `program` must come from this library; `dir` must be NUL-terminated.
enum wl_status wl_program_add_csv_facts(struct wl_program *program, const char *dir);

// Number of facts in the database.
//
// # Safety
// `program` must be null or come from this library.
size_t wl_program_fact_count(const struct wl_program *program);

// Releases a program. Null is ignored.
//
// # Safety
// `program` must be null or come from this library, and not be used again.
void wl_program_free(struct wl_program *program);

// Sets `*certified` to whether the program is warded and safely tainted,
// and, when `report_json` is not null, `*report_json` to the analysis
// report as JSON.
//
// # Safety
// Pointers must be valid; `report_json` may be null.
enum wl_status wl_analyze(const struct wl_program *program, bool *certified, char **report_json);

// Decides satisfiability with the EGD fixpoint over the relaxed chase. A
// `max_steps` of 0 selects the default limit.
//
// # Safety
// Pointers must be valid.
enum wl_status wl_check_satisfiable(const struct wl_program *program,
                                    size_t max_steps,
                                    bool *satisfiable);

// Answers one Boolean query given as text, e.g. `"? p(a, X)."`. An
// unsatisfiable program entails every query. A `max_steps` of 0 selects
// the default limit.
//
// # Safety
// Pointers must be valid; `query` must be NUL-terminated.
enum wl_status wl_query_bcq(const struct wl_program *program,
                            const char *query,
                            size_t max_steps,
                            bool *answer_out);

// Answers every query of the program and sets `*results_json` to
// `{"results": [...]}`, one object per query.
//
// # Safety
// Pointers must be valid.
enum wl_status wl_query_all_json(const struct wl_program *program,
                                 size_t max_steps,
                                 char **results_json);

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on this thread.
const char *wl_last_error(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must be null or a string returned by this library, not freed before.
void wl_string_free(char *s);

// Library version as a static string.
const char *wl_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* WARDLOG_H */
