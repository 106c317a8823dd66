/* qleak — pulse-level randomized-benchmarking simulator for a transmon qutrit.
 *
 * C API of the shared library. All functions return QLEAK_OK (0) on success
 * or a nonzero error code; qleak_last_error() describes the most recent
 * failure on the calling thread.
 */
#ifndef QLEAK_QLEAK_H
#define QLEAK_QLEAK_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qleak_code {
  QLEAK_OK = 0,
  QLEAK_ERR_INVALID_ARGUMENT = 1,
  QLEAK_ERR_CONFIG = 2,
  QLEAK_ERR_NUMERICAL = 3,
  QLEAK_ERR_CALIBRATION = 4,
  QLEAK_ERR_OPTIMIZATION = 5,
  QLEAK_ERR_IO = 6,
  QLEAK_ERR_SWEEP_POINT_FAILED = 7, /* run finished, some sweep points failed */
  QLEAK_ERR_INTERNAL = 8
} qleak_code;

const char* qleak_version(void);

/* Message for the last error raised on this thread; empty string if none. */
const char* qleak_last_error(void);

/* Opaque experiment handle: a loaded configuration plus run options. */
typedef struct qleak_experiment qleak_experiment;

/* Load from a config file or a previously written run manifest. */
int qleak_experiment_create_from_file(const char* path, qleak_experiment** out);
int qleak_experiment_create_from_json(const char* json_text, qleak_experiment** out);

int qleak_experiment_set_seed(qleak_experiment* exp, unsigned long long seed);
int qleak_experiment_set_output_dir(qleak_experiment* exp, const char* dir);
int qleak_experiment_set_threads(qleak_experiment* exp, int threads);

/* Declare which experiment the caller expects ("rb", "heating", ...). Fills
 * in a missing "experiment" field and rejects a mismatching config. */
int qleak_experiment_set_kind(qleak_experiment* exp, const char* kind);

/* Runs the experiment, writing <output>.csv and <output>.manifest.json into
 * the output directory (default "."). Returns QLEAK_ERR_SWEEP_POINT_FAILED
 * when the run completed but one or more sweep points failed. */
int qleak_experiment_run(qleak_experiment* exp);

/* Path of the manifest written by the last successful run; NULL before. */
const char* qleak_experiment_manifest_path(const qleak_experiment* exp);

void qleak_experiment_destroy(qleak_experiment* exp);

/* Clifford-table conformance dump (JSON). The returned string must be
 * released with qleak_string_free. */
int qleak_clifford_table_json(char** out);

void qleak_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* QLEAK_QLEAK_H */
