/*
 * C interface to the low-rank tensor product graph label propagation library.
 *
 * All objects are opaque handles created by ltlp_*_load / ltlp_*_from_* /
 * ltlp_model_build and released with the matching ltlp_*_free. Every call that
 * can fail returns an ltlp_status; on failure ltlp_last_error() returns a
 * message describing the most recent error on the calling thread.
 *
 * Tensor mode i always corresponds to graph i (0-based), in the order graphs
 * are passed to ltlp_model_build.
 */
#ifndef LTLP_LTLP_H
#define LTLP_LTLP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LTLP_BUILDING_LIBRARY)
#    define LTLP_API __declspec(dllexport)
#  else
#    define LTLP_API __declspec(dllimport)
#  endif
#else
#  define LTLP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as the CLI exit codes. */
typedef enum ltlp_status {
    LTLP_OK = 0,
    LTLP_ERROR_INTERNAL = 1,
    LTLP_ERROR_VALIDATION = 2,
    LTLP_ERROR_IO = 3,
    LTLP_ERROR_NUMERICAL = 4
} ltlp_status;

typedef struct ltlp_graph ltlp_graph;
typedef struct ltlp_tensor ltlp_tensor;
typedef struct ltlp_model ltlp_model;

LTLP_API const char* ltlp_version(void);
LTLP_API const char* ltlp_last_error(void);

/* Warnings (e.g. a clamped rank) go to stderr unless silenced. */
LTLP_API void ltlp_set_quiet(int quiet);

/* ---- graphs ---------------------------------------------------------- */

/* Edge-list file with a `#nodes I` header and `row col weight` lines. */
LTLP_API ltlp_status ltlp_graph_load(const char* path, ltlp_graph** out);
/* Row-major size x size adjacency; must be symmetric and nonnegative. */
LTLP_API ltlp_status ltlp_graph_from_dense(int64_t size, const double* adjacency, ltlp_graph** out);
LTLP_API int64_t ltlp_graph_size(const ltlp_graph* graph);
LTLP_API void ltlp_graph_free(ltlp_graph* graph);

/* ---- initial tensors ------------------------------------------------- */

LTLP_API ltlp_status ltlp_tensor_load_sparse(const char* path, ltlp_tensor** out);
LTLP_API ltlp_status ltlp_tensor_load_cp(const char* path, ltlp_tensor** out);
/* indices is row-major nnz x order. */
LTLP_API ltlp_status ltlp_tensor_from_coo(size_t order, const int64_t* dims, size_t nnz,
                                          const int32_t* indices, const double* values,
                                          ltlp_tensor** out);
/* Builds a rank-`rank` CP tensor from pairwise similarity files via symmetric NMF. */
LTLP_API ltlp_status ltlp_tensor_from_pairwise(const char* const* paths, size_t count,
                                               size_t order, const int64_t* sizes, int64_t rank,
                                               uint64_t seed, ltlp_tensor** out);
LTLP_API size_t ltlp_tensor_order(const ltlp_tensor* tensor);
LTLP_API int ltlp_tensor_is_cp(const ltlp_tensor* tensor);
LTLP_API void ltlp_tensor_free(ltlp_tensor* tensor);

/* ---- model ----------------------------------------------------------- */

typedef struct ltlp_timings {
    double eigen_seconds;
    double select_seconds;
    double compress_seconds;
} ltlp_timings;

/* threads = 0 uses the available hardware parallelism. The model keeps its
 * own copy of the tensor; graphs and tensor may be freed afterwards. */
LTLP_API ltlp_status ltlp_model_build(const ltlp_graph* const* graphs, size_t count,
                                      const ltlp_tensor* y0, double alpha, size_t rank,
                                      unsigned threads, ltlp_model** out);
LTLP_API size_t ltlp_model_rank(const ltlp_model* model);
LTLP_API size_t ltlp_model_order(const ltlp_model* model);
LTLP_API ltlp_status ltlp_model_timings(const ltlp_model* model, ltlp_timings* out);
LTLP_API ltlp_status ltlp_model_score(const ltlp_model* model, const int32_t* index, size_t order,
                                      double* out);
/* queries is row-major count x order. Writes the distinct tuples sorted by
 * score descending (then tuple ascending) into out_indices (count x order)
 * and out_scores (count); *out_rows receives the number of distinct rows. */
LTLP_API ltlp_status ltlp_model_predict(const ltlp_model* model, const int32_t* queries,
                                        size_t count, unsigned threads, int32_t* out_indices,
                                        double* out_scores, size_t* out_rows);
/* Reads a query file and writes the TSV score table atomically. */
LTLP_API ltlp_status ltlp_model_predict_file(const ltlp_model* model, const char* query_path,
                                             const char* out_path, unsigned threads,
                                             size_t* out_rows);
/* Selected spectrum sidecar: alpha, rank, order, then `lambda idx_1 .. idx_n` lines. */
LTLP_API ltlp_status ltlp_model_write_spectrum(const ltlp_model* model, const char* path);
LTLP_API void ltlp_model_free(ltlp_model* model);

/* ---- simulation benchmark -------------------------------------------- */

typedef struct ltlp_sim_config {
    int64_t size;
    size_t graphs;
    double density;
    double rewire;
    double alpha;
    size_t rank;
    uint64_t seed;
    unsigned threads;
} ltlp_sim_config;

typedef struct ltlp_sim_report {
    double auc;
    double map;
    double seconds;
    size_t rank;
} ltlp_sim_report;

LTLP_API void ltlp_sim_config_default(ltlp_sim_config* cfg);
LTLP_API ltlp_status ltlp_simulate(const ltlp_sim_config* cfg, ltlp_sim_report* out);

/* ---- dense oracle check ---------------------------------------------- */

typedef struct ltlp_oracle_report {
    size_t rank;
    uint64_t product_size;
    double full_rank_deviation;
    double closed_form_gap;
    double lowrank_deviation;
    double error_bound;
    double perturbation_spectral;
    double perturbation_frobenius;
    double best_rank_k_spectral;
    double best_rank_k_frobenius;
    double selection_gap;
    int rank_k_comparison_applicable;
    int selection_by_subsets;
    int full_rank_pass;
    int rank_k_comparison_pass;
    int selection_pass;
} ltlp_oracle_report;

LTLP_API ltlp_status ltlp_oracle_check(const ltlp_graph* const* graphs, size_t count,
                                       const ltlp_tensor* y0, double alpha, size_t rank,
                                       ltlp_oracle_report* out);

#ifdef __cplusplus
}
#endif

#endif /* LTLP_LTLP_H */
