#ifndef CUEBP_H
#define CUEBP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CuebpStatus {
  CUEBP_STATUS_OK = 0,
  CUEBP_STATUS_NULL_POINTER = 1,
  CUEBP_STATUS_INVALID_PARAMETER = 2,
  CUEBP_STATUS_SIZE_MISMATCH = 3,
  CUEBP_STATUS_PARSE = 4,
  CUEBP_STATUS_IO = 5,
  CUEBP_STATUS_OUT_OF_RANGE = 6,
  CUEBP_STATUS_EMPTY_INPUT = 7,
  CUEBP_STATUS_NOT_CONVERGED = 8,
  CUEBP_STATUS_TOO_LARGE = 9,
  CUEBP_STATUS_BUFFER_TOO_SMALL = 10,
  CUEBP_STATUS_INTERNAL = 11,
} CuebpStatus;

typedef enum CuebpMode {
  CUEBP_MODE_PERFECT = 0,
  CUEBP_MODE_IMPERFECT = 1,
} CuebpMode;

/*
 Opaque undirected graph.
 */
typedef struct CuebpGraph CuebpGraph;

/*
 Model parameters; `a = n p` and `b = n q`.
 */
typedef struct CuebpParams {
  size_t n;
  double kappa;
  double a;
  double b;
  double alpha;
  double beta;
} CuebpParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty if none. Valid
 until the next failing call on the same thread.
 */
const char *cuebp_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *cuebp_version(void);

/*
 Build a graph from `m` edges `(us[i], vs[i])`. Self-loops and
 duplicates are dropped.

 # Safety
 `us` and `vs` must point to `m` readable values; `out` must be writable.
 */
enum CuebpStatus cuebp_graph_from_edges(size_t n,
                                        const uint32_t *us,
                                        const uint32_t *vs,
                                        size_t m,
                                        struct CuebpGraph **out);

/*
 Read a whitespace-separated edge list.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CuebpStatus cuebp_graph_load(const char *path, struct CuebpGraph **out);

/*
 Sample a planted instance. `truth_out` and `cues_out` receive `n`
 indicator bytes each; cues follow the perfect model when `beta = 1`.

 # Safety
 `params` must be readable, `graph_out` writable, and both byte buffers
 must hold `params->n` bytes.
 */
enum CuebpStatus cuebp_sample(const struct CuebpParams *params,
                              uint64_t seed,
                              struct CuebpGraph **graph_out,
                              uint8_t *truth_out,
                              uint8_t *cues_out);

/*
 Node count, or 0 for a null handle.

 # Safety
 `g` must be null or a live handle.
 */
size_t cuebp_graph_node_count(const struct CuebpGraph *g);

/*
 Undirected edge count, or 0 for a null handle.

 # Safety
 `g` must be null or a live handle.
 */
size_t cuebp_graph_edge_count(const struct CuebpGraph *g);

/*
 Release a graph. Null is ignored.

 # Safety
 `g` must be null or a handle not yet freed.
 */
void cuebp_graph_free(struct CuebpGraph *g);

/*
 Run BP for `tf` steps (0 picks the default) and write `n` beliefs.
 With perfect cues the entries of cue nodes are 0.

 # Safety
 `g` and `params` must be live; `cues` and `beliefs_out` must hold `n`
 elements where `n` is the node count.
 */
enum CuebpStatus cuebp_bp_run(const struct CuebpGraph *g,
                              const uint8_t *cues,
                              const struct CuebpParams *params,
                              enum CuebpMode mode,
                              size_t tf,
                              double *beliefs_out);

/*
 Personalized PageRank restarting on the cues; writes `n` scores.

 # Safety
 `g` must be live; `cues` and `scores_out` must hold `n` elements.
 */
enum CuebpStatus cuebp_ppr_run(const struct CuebpGraph *g,
                               const uint8_t *cues,
                               double damping,
                               double tol,
                               size_t max_iters,
                               double *scores_out);

/*
 Top-`k` estimate from scores, sorted ascending into `out` (`k` slots).
 Perfect mode always includes the cues.

 # Safety
 `scores` and `cues` must hold `n` elements, `out` `k`.
 */
enum CuebpStatus cuebp_select_top_k(const double *scores,
                                    const uint8_t *cues,
                                    size_t n,
                                    size_t k,
                                    enum CuebpMode mode,
                                    uint32_t *out);

/*
 `|S delta S_hat| / K` for a truth indicator of length `n` and an
 estimate of `k` ids.

 # Safety
 `truth` must hold `n` bytes and `estimate` `k` ids; `out` writable.
 */
enum CuebpStatus cuebp_error_fraction(const uint8_t *truth,
                                      size_t n,
                                      const uint32_t *estimate,
                                      size_t k,
                                      double *out);

/*
 Large-degree variance recursion. `snr` is `lambda_alpha` in perfect
 mode and `lambda` in imperfect mode. Writes `mu^(0..)` into `mu_out`
 (capacity `cap`) and the number of entries into `len_out`; returns
 `BufferTooSmall` with `len_out` set if `cap` is insufficient.

 # Safety
 `mu_out` must hold `cap` values; `len_out` must be writable.
 */
enum CuebpStatus cuebp_de_mu(enum CuebpMode mode,
                             double snr,
                             double kappa,
                             double alpha,
                             double beta,
                             size_t t_max,
                             double *mu_out,
                             size_t cap,
                             size_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUEBP_H */
