#ifndef SYNCSIM_H
#define SYNCSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SyncsimStatus {
  SYNCSIM_STATUS_OK = 0,
  SYNCSIM_STATUS_NULL_POINTER = 1,
  SYNCSIM_STATUS_INVALID_UTF8 = 2,
  SYNCSIM_STATUS_UNKNOWN_PROFILE = 3,
  SYNCSIM_STATUS_UNKNOWN_PRIMITIVE = 4,
  SYNCSIM_STATUS_INVALID_CONFIG = 5,
  SYNCSIM_STATUS_DEADLOCK = 6,
  SYNCSIM_STATUS_TIME_LIMIT = 7,
  SYNCSIM_STATUS_INVARIANT = 8,
  SYNCSIM_STATUS_IO = 9,
  SYNCSIM_STATUS_PARSE = 10,
  SYNCSIM_STATUS_OUT_OF_RANGE = 11,
  SYNCSIM_STATUS_INTERNAL = 12,
} SyncsimStatus;

/**
 * A table of benchmark timings in milliseconds.
 */
typedef struct SyncsimBenchTable SyncsimBenchTable;

/**
 * A machine profile.
 */
typedef struct SyncsimProfile SyncsimProfile;

/**
 * Result of one primitive run.
 */
typedef struct SyncsimRun SyncsimRun;

/**
 * Timing parameters in nanoseconds.
 */
typedef struct SyncsimTiming {
  double lat_volatile_read;
  double lat_volatile_write;
  double lat_atomic_read;
  double lat_atomic_write;
  double svc_volatile_read;
  double svc_volatile_write;
  double svc_atomic_read;
  double svc_atomic_write;
  double sync_threads_cost;
} SyncsimTiming;

/**
 * Parameters of a primitive run. Zero in `ops_per_block`, `i_min` or
 * `i_max` selects the default; `capacity` is ignored by non-semaphores.
 */
typedef struct SyncsimRunConfig {
  uint32_t blocks;
  uint32_t capacity;
  uint32_t ops_per_block;
  uint32_t i_min;
  uint32_t i_max;
  uint64_t seed;
} SyncsimRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *syncsim_last_error(void);

/**
 * Short static description of a status code.
 */
const char *syncsim_status_name(enum SyncsimStatus status);

/**
 * Loads a profile by built-in name (`tesla`, `fermi`) or config file path.
 *
 * # Safety
 * `name_or_path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SyncsimStatus syncsim_profile_new(const char *name_or_path, struct SyncsimProfile **out);

/**
 * # Safety
 * `profile` must come from [`syncsim_profile_new`] and not be used again.
 */
void syncsim_profile_free(struct SyncsimProfile *profile);

/**
 * Resident block limit of the profile.
 *
 * # Safety
 * `profile` and `out` must be valid pointers.
 */
enum SyncsimStatus syncsim_profile_max_blocks(const struct SyncsimProfile *profile, uint32_t *out);

/**
 * Whether a busy atomic unit holds its line hostage.
 *
 * # Safety
 * `profile` and `out` must be valid pointers.
 */
enum SyncsimStatus syncsim_profile_line_hostage(const struct SyncsimProfile *profile, bool *out);

/**
 * # Safety
 * `profile` and `out` must be valid pointers.
 */
enum SyncsimStatus syncsim_profile_timing(const struct SyncsimProfile *profile,
                                          struct SyncsimTiming *out);

/**
 * Defaults for [`syncsim_run_primitive`]: one block, capacity 1, default
 * operations and backoff, seed 0.
 */
struct SyncsimRunConfig syncsim_run_config_default(void);

/**
 * Runs a primitive under the invariant checkers.
 *
 * # Safety
 * `profile` must be a live handle, `primitive` a NUL-terminated string,
 * `config` and `out` valid pointers.
 */
enum SyncsimStatus syncsim_run_primitive(const struct SyncsimProfile *profile,
                                         const char *primitive,
                                         const struct SyncsimRunConfig *config,
                                         struct SyncsimRun **out);

/**
 * # Safety
 * `run` must come from [`syncsim_run_primitive`] and not be used again.
 */
void syncsim_run_free(struct SyncsimRun *run);

/**
 * Throughput in operations per simulated second.
 *
 * # Safety
 * `run` and `out` must be valid pointers.
 */
enum SyncsimStatus syncsim_run_ops_per_sec(const struct SyncsimRun *run, double *out);

/**
 * Simulated completion time in nanoseconds.
 *
 * # Safety
 * `run` and `out` must be valid pointers.
 */
enum SyncsimStatus syncsim_run_sim_time_ns(const struct SyncsimRun *run, double *out);

/**
 * Number of atomic operations the run issued.
 *
 * # Safety
 * `run` and `out` must be valid pointers.
 */
enum SyncsimStatus syncsim_run_atomic_ops(const struct SyncsimRun *run, uint64_t *out);

/**
 * Runs the memory benchmark suite on a profile.
 *
 * # Safety
 * `profile` must be a live handle and `out` a valid pointer.
 */
enum SyncsimStatus syncsim_bench_run(const struct SyncsimProfile *profile,
                                     struct SyncsimBenchTable **out);

/**
 * # Safety
 * `table` must come from [`syncsim_bench_run`] and not be used again.
 */
void syncsim_bench_free(struct SyncsimBenchTable *table);

/**
 * Number of rows in a benchmark table.
 *
 * # Safety
 * `table` and `out` must be valid pointers.
 */
enum SyncsimStatus syncsim_bench_len(const struct SyncsimBenchTable *table, size_t *out);

/**
 * Row `index`: its name (owned by the table) and time in milliseconds.
 *
 * # Safety
 * `table`, `name` and `ms` must be valid pointers.
 */
enum SyncsimStatus syncsim_bench_row(const struct SyncsimBenchTable *table,
                                     size_t index,
                                     const char **name,
                                     double *ms);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNCSIM_H */
