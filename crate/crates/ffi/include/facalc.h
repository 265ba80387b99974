#ifndef FACALC_H
#define FACALC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Command passed and every relation held.
 */
#define FACALC_OK 0

/*
 A relation failed.
 */
#define FACALC_FAIL 1

/*
 Some check was undecided or a result lossy.
 */
#define FACALC_UNDECIDED 2

/*
 Malformed input or a type error in the structure file.
 */
#define FACALC_PARSE 64

/*
 A referenced name does not exist.
 */
#define FACALC_RESOLVE 65

/*
 A required pointer was null.
 */
#define FACALC_NULL -1

/*
 A string argument was not UTF-8.
 */
#define FACALC_UTF8 -2

/*
 The engine panicked; the session may still be used.
 */
#define FACALC_PANIC -3

/*
 A loaded structure file.
 */
typedef struct FacalcSession FacalcSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Parses a structure file from its JSON text. On success `*out` receives a
 session to be released with `facalc_session_free`. Name resolution and
 evaluation happen per command.

 # Safety
 `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t facalc_session_new(const char *json, struct FacalcSession **out);

/*
 Runs `command` with `nargs` further arguments (entity names and
 options, as on the command line). `*report` receives the report, to be
 released with `facalc_string_free`; the return value is the command's
 exit code.

 # Safety
 `session` must come from `facalc_session_new`; `command` and each of the
 `nargs` entries of `args` must be valid NUL-terminated strings; `report`
 must be a valid pointer.
 */
int32_t facalc_run(const struct FacalcSession *session,
                   const char *command,
                   const char *const *args,
                   uintptr_t nargs,
                   char **report);

/*
 Message of the last failing call on this thread; empty when none. The
 pointer stays valid until the next call on the same thread.
 */
const char *facalc_last_error(void);

/*
 # Safety
 `s` must come from this library and not have been freed.
 */
void facalc_string_free(char *s);

/*
 # Safety
 `s` must come from `facalc_session_new` and not have been freed.
 */
void facalc_session_free(struct FacalcSession *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACALC_H */
