#ifndef QSINT_QSINT_H
#define QSINT_QSINT_H

/* C interface to the qsint library. Strings returned through out-pointers
 * are owned by the caller and released with qsint_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QSINT_API __declspec(dllexport)
#else
#define QSINT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qsint_status {
  QSINT_OK = 0,
  QSINT_CHECK_FAILED = 1,
  QSINT_CONFIG_ERROR = 2,
  QSINT_RUNTIME_ERROR = 3,
  QSINT_INVALID_ARGUMENT = 4
} qsint_status;

typedef struct qsint_system qsint_system;

QSINT_API const char* qsint_version(void);
QSINT_API const char* qsint_schema_version(void);

/* Message of the last failure on this thread, "" if none. */
QSINT_API const char* qsint_last_error(void);

QSINT_API void qsint_string_free(char* s);

/* Runs verify | fit | casimir | spectrum | wkb | catalog with a JSON config
 * (NULL or "" for defaults). *report receives the report in the format the
 * config asks for. Returns 0 pass, 1 check failed, 2 config error, 3 runtime
 * error; 4 for NULL arguments. */
QSINT_API int qsint_run(const char* command, const char* config_json, char** report);

/* Same, always returning the JSON report. */
QSINT_API int qsint_run_json(const char* command, const char* config_json, char** report);

/* Builds the system a config describes (first draw, first hbar). */
QSINT_API qsint_status qsint_system_create(const char* config_json, qsint_system** out);
QSINT_API void qsint_system_destroy(qsint_system* sys);

/* Max coefficient of [H,A] and [H,B], relative to the larger of the two
 * products, over `samples` seeded points
 * of the safe domain. *hb is NaN for systems without a second integral. */
QSINT_API qsint_status qsint_system_integrability(const qsint_system* sys, int samples,
                                                  uint64_t seed, double* ha, double* hb);

/* Applies H (which = 0) or the first integral (which = 1) to the plane wave
 * exp(kx * xi + ky * eta) at (xi, eta) and returns the ratio to the wave. */
QSINT_API qsint_status qsint_system_symbol(const qsint_system* sys, int which, double xi,
                                           double eta, double kx, double ky, double* out);

#ifdef __cplusplus
}
#endif

#endif
