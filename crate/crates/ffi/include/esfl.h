#ifndef ESFL_H
#define ESFL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum EsflStatus {
  ESFL_STATUS_OK = 0,
  ESFL_STATUS_NULL_POINTER = 1,
  ESFL_STATUS_INVALID_ARGUMENT = 2,
  ESFL_STATUS_PARSE = 3,
  ESFL_STATUS_IO = 4,
  ESFL_STATUS_INFEASIBLE = 5,
  ESFL_STATUS_RUNTIME = 6,
  ESFL_STATUS_PANIC = 7,
} EsflStatus;

/**
 * Opaque optimizer result.
 */
typedef struct EsflAllocation EsflAllocation;

/**
 * Opaque layer profile of a network.
 */
typedef struct EsflArchitecture EsflArchitecture;

/**
 * Workload of one cut layer.
 */
typedef struct EsflCutWorkload {
  size_t cut;
  /**
   * User-side training FLOPs per sample.
   */
  double user_compute;
  /**
   * Bytes of the cut activation per sample.
   */
  double act_bytes;
  /**
   * Bytes of the user-side model.
   */
  double model_bytes;
  /**
   * User-side training memory footprint in bytes.
   */
  double mem_bytes;
} EsflCutWorkload;

/**
 * One device. Storage and memory that are negative or not finite mean
 * unlimited.
 */
typedef struct EsflUser {
  uint64_t samples;
  /**
   * Device compute in FLOPs/s.
   */
  double compute_flops;
  /**
   * Uplink rate in bytes/s.
   */
  double uplink_bytes_per_sec;
  /**
   * Downlink rate in bytes/s.
   */
  double downlink_bytes_per_sec;
  uint32_t epochs;
  double storage_bytes;
  double memory_bytes;
} EsflUser;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *esfl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *esfl_version(void);

/**
 * Looks up a shipped profile (`vgg13`, `vgg16`, `vgg19`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum EsflStatus esfl_architecture_builtin(const char *name, struct EsflArchitecture **out);

/**
 * Loads a profile document (columnar text or JSON) from disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum EsflStatus esfl_architecture_load(const char *path, struct EsflArchitecture **out);

/**
 * Releases an architecture handle. NULL is ignored.
 *
 * # Safety
 * `arch` must come from this library and not be used afterwards.
 */
void esfl_architecture_free(struct EsflArchitecture *arch);

/**
 * Number of layers, or 0 for NULL.
 *
 * # Safety
 * `arch` must be NULL or a live handle.
 */
size_t esfl_architecture_num_layers(const struct EsflArchitecture *arch);

/**
 * Training FLOPs per sample of the whole network.
 *
 * # Safety
 * `arch` must be a live handle and `out` writable.
 */
enum EsflStatus esfl_architecture_total_compute(const struct EsflArchitecture *arch, double *out);

/**
 * Workload of cutting after layer `cut` (1-based); `batch` sizes the memory
 * estimate.
 *
 * # Safety
 * `arch` must be a live handle and `out` writable.
 */
enum EsflStatus esfl_cut_workload(const struct EsflArchitecture *arch,
                                  size_t cut,
                                  size_t batch,
                                  struct EsflCutWorkload *out);

/**
 * Shannon capacity in bits/s.
 *
 * # Safety
 * `out` must be writable.
 */
enum EsflStatus esfl_shannon_rate(double bandwidth_hz,
                                  double power_w,
                                  double gain,
                                  double noise_density,
                                  double *out);

/**
 * Round latency of one user at a cut with `server_compute` FLOPs/s.
 *
 * # Safety
 * `arch` and `user` must be valid pointers and `out` writable.
 */
enum EsflStatus esfl_round_time(const struct EsflArchitecture *arch,
                                const struct EsflUser *user,
                                size_t cut,
                                double server_compute,
                                double t_agg,
                                double *out);

/**
 * Joint cut-layer and server-compute allocation for `n_users` users.
 * `max_iters = 0` keeps the default iteration cap.
 *
 * # Safety
 * `users` must point to `n_users` records, `arch` must be a live handle and
 * `out` writable.
 */
enum EsflStatus esfl_optimize(const struct EsflArchitecture *arch,
                              const struct EsflUser *users,
                              size_t n_users,
                              double server_compute,
                              double t_agg,
                              size_t max_iters,
                              struct EsflAllocation **out);

/**
 * Number of users in an allocation, or 0 for NULL.
 *
 * # Safety
 * `alloc` must be NULL or a live handle.
 */
size_t esfl_allocation_len(const struct EsflAllocation *alloc);

/**
 * Cut layer of user `index`.
 *
 * # Safety
 * `alloc` must be a live handle and `out` writable.
 */
enum EsflStatus esfl_allocation_cut(const struct EsflAllocation *alloc, size_t index, size_t *out);

/**
 * Server compute (FLOPs/s) of user `index`.
 *
 * # Safety
 * `alloc` must be a live handle and `out` writable.
 */
enum EsflStatus esfl_allocation_server_compute(const struct EsflAllocation *alloc,
                                               size_t index,
                                               double *out);

/**
 * Straggler round time of the allocation in seconds; NaN for NULL.
 *
 * # Safety
 * `alloc` must be NULL or a live handle.
 */
double esfl_allocation_objective(const struct EsflAllocation *alloc);

/**
 * Optimizer iterations performed, or 0 for NULL.
 *
 * # Safety
 * `alloc` must be NULL or a live handle.
 */
size_t esfl_allocation_iterations(const struct EsflAllocation *alloc);

/**
 * Whether the optimizer reached a fixed point; false for NULL.
 *
 * # Safety
 * `alloc` must be NULL or a live handle.
 */
bool esfl_allocation_converged(const struct EsflAllocation *alloc);

/**
 * Releases an allocation handle. NULL is ignored.
 *
 * # Safety
 * `alloc` must come from this library and not be used afterwards.
 */
void esfl_allocation_free(struct EsflAllocation *alloc);

/**
 * Runs a simulation described by a TOML run configuration and returns the
 * JSON report. Release the string with [`esfl_string_free`].
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out_json` writable.
 */
enum EsflStatus esfl_simulate_json(const char *config_toml, char **out_json);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void esfl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ESFL_H */
