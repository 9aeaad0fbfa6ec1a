/* C API for the intrinsic sparse mode decomposition library.
 *
 * All functions return ismd_status; on failure ismd_last_error() gives a
 * message for the calling thread (and, for some errors, a JSON detail via
 * ismd_last_error_detail()). Handles are opaque and must be released with
 * the matching *_free function. Strings returned through char** out
 * parameters are heap-allocated; release them with ismd_string_free.
 */
#ifndef ISMD_ISMD_H
#define ISMD_ISMD_H

#include <stdint.h>

#if defined(_WIN32)
#define ISMD_API __declspec(dllexport)
#else
#define ISMD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ismd_status {
  ISMD_OK = 0,
  ISMD_ERR_INVALID_ARGUMENT = 1,
  ISMD_ERR_NOT_PSD = 2,
  ISMD_ERR_SINGULAR = 3,
  ISMD_ERR_NO_CONVERGENCE = 4,
  ISMD_ERR_GAP_NOT_FOUND = 5,
  ISMD_ERR_INFEASIBLE_TARGET = 6,
  ISMD_ERR_IO = 7,
  ISMD_ERR_INTERNAL = 8
} ismd_status;

typedef struct ismd_matrix ismd_matrix;       /* dense real matrix */
typedef struct ismd_partition ismd_partition; /* disjoint index partition */
typedef struct ismd_result ismd_result;       /* decomposition result */
typedef struct ismd_fixture ismd_fixture;     /* synthetic fixture */

ISMD_API const char* ismd_version(void);
ISMD_API const char* ismd_last_error(void);
ISMD_API const char* ismd_last_error_detail(void); /* JSON or "" */
ISMD_API void ismd_string_free(char* s);

/* ---- matrices ---------------------------------------------------------- */
/* data is row-major rows x cols; pass rows == cols for symmetric use. */
ISMD_API ismd_status ismd_matrix_create(int64_t rows, int64_t cols,
                                        const double* data, ismd_matrix** out);
ISMD_API ismd_status ismd_matrix_read_mtx(const char* path, ismd_matrix** out);
ISMD_API ismd_status ismd_matrix_write_mtx(const ismd_matrix* m, const char* path,
                                           int symmetric);
ISMD_API int64_t ismd_matrix_rows(const ismd_matrix* m);
ISMD_API int64_t ismd_matrix_cols(const ismd_matrix* m);
/* copies into caller buffer of rows*cols doubles, row-major */
ISMD_API ismd_status ismd_matrix_copy_data(const ismd_matrix* m, double* buffer);
ISMD_API void ismd_matrix_free(ismd_matrix* m);

/* ---- partitions -------------------------------------------------------- */
/* grid_shape/patch_shape have gdims entries (1 or 2), row-major indices */
ISMD_API ismd_status ismd_partition_grid(const int64_t* grid_shape,
                                         const int64_t* patch_shape, int gdims,
                                         ismd_partition** out);
ISMD_API ismd_status ismd_partition_from_json(const char* json, ismd_partition** out);
/* spec: "grid:96x96/12x12", "grid:1024/128", or a path to a partition JSON */
ISMD_API ismd_status ismd_partition_from_spec(const char* spec, ismd_partition** out);
ISMD_API ismd_status ismd_partition_to_json(const ismd_partition* p, char** out);
ISMD_API int64_t ismd_partition_patches(const ismd_partition* p);
ISMD_API int64_t ismd_partition_n(const ismd_partition* p);
ISMD_API void ismd_partition_free(ismd_partition* p);

/* ---- generators -------------------------------------------------------- */
/* kind: "localized" | "global" | "kernel"; config is a JSON object (see the
 * CLI documentation for the accepted keys). */
ISMD_API ismd_status ismd_generate(const char* kind, const char* config_json,
                                   ismd_fixture** out);
ISMD_API ismd_status ismd_fixture_matrix(const ismd_fixture* f, ismd_matrix** out);
ISMD_API ismd_status ismd_fixture_truth(const ismd_fixture* f, ismd_matrix** out);
ISMD_API ismd_status ismd_fixture_meta(const ismd_fixture* f, char** json_out);
ISMD_API void ismd_fixture_free(ismd_fixture* f);
ISMD_API ismd_status ismd_add_noise(const ismd_matrix* a, double eps, uint64_t seed,
                                    ismd_matrix** out);

/* ---- decomposition ----------------------------------------------------- */
/* algorithm: "ismd" | "threshold" | "lowrank"; opts_json keys match the CLI
 * flags (trunc_tol, pivot_tol, jd_eps, normalize, threshold, snap,
 * gap_factor, rank_cap, error_target, coupling_tol, workers). */
ISMD_API ismd_status ismd_decompose(const char* algorithm, const ismd_matrix* a,
                                    const ismd_partition* p, const char* opts_json,
                                    ismd_result** out);
ISMD_API int64_t ismd_result_rank(const ismd_result* r);
ISMD_API double ismd_result_residual(const ismd_result* r);
ISMD_API ismd_status ismd_result_modes(const ismd_result* r, ismd_matrix** out);
/* metadata: rank, residual, sparseness, local_ranks, threshold, timings,
 * options echo */
ISMD_API ismd_status ismd_result_json(const ismd_result* r, char** out);
ISMD_API void ismd_result_free(ismd_result* r);

/* ---- evaluation and benchmarking -------------------------------------- */
/* request: {"checks": [...], "matrix": path?, "modes": path, "truth": path?,
 *  "partition": spec?, "modes2": path?, "partition2": spec?, "bounds": {...}}
 * Runs the requested checks (match | residual | integer-spectrum |
 * consistency) and returns a JSON report with pass/fail per check. */
ISMD_API ismd_status ismd_evaluate(const char* request_json, char** report_json);

/* partitions_json: [{"label": ..., "spec": "grid:RxC/rxc" | path}, ...];
 * returns the timing table as CSV plus a JSON summary with baseline
 * timings (full eigendecomposition, rank-capped eigendecomposition,
 * pivoted Cholesky). */
ISMD_API ismd_status ismd_bench(const ismd_matrix* a, const char* partitions_json,
                                int repeats, const char* opts_json, char** csv_out,
                                char** summary_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ISMD_ISMD_H */
