/* C interface of the fpl simulation library.
 *
 * All functions return an fpl_status; on failure fpl_last_error() gives a
 * thread-local message. Handles are opaque and owned by the caller. */
#ifndef FPL_FPL_H
#define FPL_FPL_H

#include <stddef.h>
#include <stdint.h>

#if defined(FPL_BUILDING_LIBRARY)
#define FPL_API __attribute__((visibility("default")))
#else
#define FPL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fpl_status {
  FPL_OK = 0,
  FPL_ERR_DOMAIN = 1,
  FPL_ERR_GEOMETRY = 2,
  FPL_ERR_RANGE = 3,
  FPL_ERR_CONFIG = 4,
  FPL_ERR_VALIDATION = 5,
  FPL_ERR_NUMERICAL = 6,
  FPL_ERR_MISUSE = 7,
  FPL_ERR_AMBIGUITY = 8,
  FPL_ERR_NOT_PERIODIC = 9,
  FPL_ERR_UNDERDETERMINED = 10,
  FPL_ERR_IO = 11,
  FPL_ERR_INVALID_ARGUMENT = 12,
  FPL_ERR_INTERNAL = 13
} fpl_status;

typedef enum fpl_protocol {
  FPL_PROTOCOL_SPECTRUM = 0,
  FPL_PROTOCOL_EXCHANGE = 1,
  FPL_PROTOCOL_PHASE_RAMP = 2,
  FPL_PROTOCOL_DUAL_SCAN = 3,
  FPL_PROTOCOL_TWO_PATH = 4
} fpl_protocol;

typedef enum fpl_engine {
  FPL_ENGINE_FROM_CONFIG = -1,
  FPL_ENGINE_ENVELOPE = 0,
  FPL_ENGINE_POSITION = 1,
  FPL_ENGINE_EFFECTIVE = 2
} fpl_engine;

typedef enum fpl_fit_kind {
  FPL_FIT_EXCHANGE = 0,
  FPL_FIT_COMB = 1,
  FPL_FIT_SINUSOID = 2
} fpl_fit_kind;

typedef struct fpl_config fpl_config;
typedef struct fpl_diagnostics fpl_diagnostics;
typedef struct fpl_result fpl_result;

FPL_API const char* fpl_version(void);
FPL_API const char* fpl_last_error(void);
FPL_API const char* fpl_status_name(fpl_status status);

/* Configuration (JSON; units Hz, us, mV, rad). */
FPL_API fpl_status fpl_config_load(const char* path, fpl_config** out);
FPL_API fpl_status fpl_config_parse(const char* json_text, fpl_config** out);
FPL_API void fpl_config_free(fpl_config* cfg);
FPL_API fpl_status fpl_config_hash(const fpl_config* cfg, uint64_t* out);
/* Output directory and base name from the config ("" when unset). Pointers
 * stay valid while `cfg` lives. */
FPL_API fpl_status fpl_config_output(const fpl_config* cfg, const char** dir, const char** name);

/* Invariant checks that do not stop parsing. */
FPL_API fpl_status fpl_validate(const fpl_config* cfg, fpl_diagnostics** out);
FPL_API size_t fpl_diagnostics_count(const fpl_diagnostics* diag);
/* Empty string for an out-of-range index. */
FPL_API const char* fpl_diagnostics_message(const fpl_diagnostics* diag, size_t index);
/* Segment index of a diagnostic, -1 for network-level findings. */
FPL_API int fpl_diagnostics_segment(const fpl_diagnostics* diag, size_t index);
FPL_API void fpl_diagnostics_free(fpl_diagnostics* diag);

/* Runs a protocol (and the config's sweep, if any). `seed_set` = 0 keeps
 * the config seed. */
FPL_API fpl_status fpl_run_protocol(const fpl_config* cfg, fpl_protocol protocol,
                                    fpl_engine engine, uint64_t seed, int seed_set,
                                    fpl_result** out);
/* Monodromy report for envelope/position; the effective engine reports the
 * leading-order Hamiltonian instead. */
FPL_API fpl_status fpl_run_floquet(const fpl_config* cfg, fpl_engine engine, fpl_result** out);
/* Fits a CSV written by the protocol runners. `options_json` may be NULL;
 * comb fits read the carrier and modulation frequency from it or from the
 * `<csv>.meta.json` sidecar. */
FPL_API fpl_status fpl_fit_csv(fpl_fit_kind kind, const char* csv_path, const char* options_json,
                               fpl_result** out);

/* Result accessors. The CSV is empty for fits; the JSON holds metadata or
 * fit parameters. */
FPL_API const char* fpl_result_csv(const fpl_result* result);
FPL_API const char* fpl_result_json(const fpl_result* result);
FPL_API size_t fpl_result_value_count(const fpl_result* result);
FPL_API const double* fpl_result_values(const fpl_result* result);
/* Writes <dir>/<name>.csv and <dir>/<name>.meta.json, or <dir>/<name>.json
 * for results without a table. */
FPL_API fpl_status fpl_result_write(const fpl_result* result, const char* dir, const char* name);
FPL_API void fpl_result_free(fpl_result* result);

FPL_API double fpl_bessel_j(int order, double x);

#ifdef __cplusplus
}
#endif

#endif
