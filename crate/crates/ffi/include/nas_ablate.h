#ifndef NAS_ABLATE_H
#define NAS_ABLATE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum NasStatus {
  NAS_STATUS_OK = 0,
  NAS_STATUS_NULL_POINTER = 1,
  NAS_STATUS_INVALID_ARGUMENT = 2,
  NAS_STATUS_INVALID_SPACE = 3,
  NAS_STATUS_SPACE_MISMATCH = 4,
  NAS_STATUS_PARSE = 5,
  NAS_STATUS_BRIDGE = 6,
  NAS_STATUS_IO = 7,
  NAS_STATUS_INTERNAL = 8,
} NasStatus;

typedef enum NasEncoding {
  NAS_ENCODING_PATH = 0,
  NAS_ENCODING_TABULAR = 1,
} NasEncoding;

typedef enum NasSurrogate {
  NAS_SURROGATE_NN_ENSEMBLE = 0,
  NAS_SURROGATE_RANDOM_FOREST = 1,
} NasSurrogate;

typedef enum NasAcquisition {
  NAS_ACQUISITION_ITS = 0,
  NAS_ACQUISITION_EI = 1,
  NAS_ACQUISITION_CONST_MEAN = 2,
} NasAcquisition;

typedef enum NasOptimizer {
  NAS_OPTIMIZER_MUT = 0,
  NAS_OPTIMIZER_RS = 1,
  NAS_OPTIMIZER_RS_PLUS = 2,
} NasOptimizer;

/**
 * One architecture of a space.
 */
typedef struct NasArchitecture NasArchitecture;

/**
 * Evaluation history of a finished run.
 */
typedef struct NasHistory NasHistory;

/**
 * Synthetic accuracy oracle bound to a space.
 */
typedef struct NasOracle NasOracle;

/**
 * Search space definition.
 */
typedef struct NasSpace NasSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *nas_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void nas_string_free(char *s);

/**
 * Space with the first `num_operations` DARTS operations (generic labels
 * beyond eight).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum NasStatus nas_space_new(size_t num_nodes,
                             size_t num_inputs,
                             size_t num_operations,
                             size_t num_cells,
                             struct NasSpace **out);

/**
 * The default space: 4 nodes, 2 inputs, 8 operations, 1 cell.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum NasStatus nas_space_default(struct NasSpace **out);

/**
 * # Safety
 * `space` must be null or a live handle, not used afterwards.
 */
void nas_space_free(struct NasSpace *space);

/**
 * Number of parameters with at least two levels; 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t nas_space_num_mutable_parameters(const struct NasSpace *space);

/**
 * Uniform random architecture drawn from a stream seeded by `seed`.
 *
 * # Safety
 * `space` must be a live handle; `out` valid for writes.
 */
enum NasStatus nas_arch_sample(const struct NasSpace *space,
                               uint64_t seed,
                               struct NasArchitecture **out);

/**
 * Parses the canonical text form.
 *
 * # Safety
 * `space` must be a live handle, `text` a nul-terminated string and `out`
 * valid for writes.
 */
enum NasStatus nas_arch_parse(const struct NasSpace *space,
                              const char *text,
                              struct NasArchitecture **out);

/**
 * Canonical text form; release with [`nas_string_free`]. Null on error.
 *
 * # Safety
 * Both handles must be null or live.
 */
char *nas_arch_to_string(const struct NasSpace *space, const struct NasArchitecture *arch);

/**
 * Number of differing parameters between two architectures of one space.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum NasStatus nas_arch_edit_distance(const struct NasArchitecture *a,
                                      const struct NasArchitecture *b,
                                      size_t *out);

/**
 * Architecture at edit distance exactly `n_edits` from `arch`.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum NasStatus nas_arch_mutate(const struct NasSpace *space,
                               const struct NasArchitecture *arch,
                               uint64_t seed,
                               size_t n_edits,
                               struct NasArchitecture **out);

/**
 * # Safety
 * `arch` must be null or a live handle, not used afterwards.
 */
void nas_arch_free(struct NasArchitecture *arch);

/**
 * Synthetic oracle with default settings and the given table seed.
 *
 * # Safety
 * `space` must be a live handle; `out` valid for writes.
 */
enum NasStatus nas_oracle_new(const struct NasSpace *space,
                              uint64_t benchmark_seed,
                              struct NasOracle **out);

/**
 * Validation accuracy of `arch`.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum NasStatus nas_oracle_evaluate(const struct NasOracle *oracle,
                                   const struct NasArchitecture *arch,
                                   double *out);

/**
 * # Safety
 * `oracle` must be null or a live handle, not used afterwards.
 */
void nas_oracle_free(struct NasOracle *oracle);

/**
 * Runs BO against the oracle: 10 random initial evaluations, then
 * `iterations` proposals. The oracle must belong to `space`.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum NasStatus nas_run_bo(const struct NasSpace *space,
                          const struct NasOracle *oracle,
                          enum NasEncoding encoding,
                          enum NasSurrogate surrogate,
                          enum NasAcquisition acquisition,
                          enum NasOptimizer optimizer,
                          size_t iterations,
                          uint64_t seed,
                          struct NasHistory **out);

/**
 * Number of evaluations; 0 for a null handle.
 *
 * # Safety
 * `history` must be null or a live handle.
 */
size_t nas_history_len(const struct NasHistory *history);

/**
 * True and incumbent accuracy of the `index`-th evaluation (0-based).
 *
 * # Safety
 * `history` must be a live handle; outputs valid for writes.
 */
enum NasStatus nas_history_record(const struct NasHistory *history,
                                  size_t index,
                                  double *accuracy,
                                  double *incumbent);

/**
 * Copy of the incumbent architecture.
 *
 * # Safety
 * `history` must be a live handle; `out` valid for writes.
 */
enum NasStatus nas_history_incumbent(const struct NasHistory *history,
                                     struct NasArchitecture **out);

/**
 * # Safety
 * `history` must be null or a live handle, not used afterwards.
 */
void nas_history_free(struct NasHistory *history);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NAS_ABLATE_H */
