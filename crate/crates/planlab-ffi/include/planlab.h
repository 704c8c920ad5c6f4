/* C ABI for planlab: districting-plan generation, scoring, enumeration,
 * and exact cut-edge optimization over unit graphs.
 *
 * Maintained by hand alongside crates/planlab-ffi/src/lib.rs; keep the
 * two in sync when the surface changes.
 *
 * Conventions
 * -----------
 * - plab_graph / plab_plan are opaque handles owned by this library.
 *   Free them with the matching plab_*_free exactly once.
 * - Functions return plab_status codes; results land in out-parameters.
 * - plab_last_error_message() describes the most recent failure on the
 *   calling thread, valid until the next failing call on that thread.
 */

#ifndef PLANLAB_H
#define PLANLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct plab_graph plab_graph;
typedef struct plab_plan plab_plan;

/* Status codes shared by every fallible function. */
enum plab_status {
    PLAB_OK = 0,
    PLAB_ERR_ARGUMENT = 1,   /* null handle / bad parameter          */
    PLAB_ERR_DATA = 2,       /* I/O, parsing, invariant violation    */
    PLAB_ERR_BUDGET = 3,     /* guard fired; partial result written  */
    PLAB_ERR_INCOMPLETE = 4, /* plan has unassigned units            */
};

typedef struct plab_score_report {
    /* Cut edges, or -1 when the plan is incomplete. */
    int64_t cut_edges;
    /* Max fractional population deviation; NaN when incomplete. */
    double max_deviation;
    uint8_t complete;
    uint8_t valid;
    uint32_t k;
} plab_score_report;

/* NUL-terminated library version, static storage. */
const char *plab_version(void);

/* Message for the most recent error on this thread. */
const char *plab_last_error_message(void);

/* Instances ---------------------------------------------------------- */

/* Load an instance file (planlab-instance format). NULL on failure. */
plab_graph *plab_graph_load(const char *path);

/* Build a uniform-population grid; queen != 0 adds diagonal adjacency.
 * NULL on failure. */
plab_graph *plab_graph_grid(size_t rows, size_t cols, int queen);

void plab_graph_free(plab_graph *graph);

int plab_graph_num_units(const plab_graph *graph, size_t *out);
int plab_graph_num_edges(const plab_graph *graph, size_t *out);
int plab_graph_total_population(const plab_graph *graph, uint64_t *out);

/* Plans --------------------------------------------------------------- */

/* Fetch a reference plan stored in the instance (e.g. "enacted").
 * NULL when the name is unknown. */
plab_plan *plab_graph_reference_plan(const plab_graph *graph, const char *name);

/* Load a plan CSV sized to the graph. NULL on failure. */
plab_plan *plab_plan_load(const plab_graph *graph, const char *path);

int plab_plan_save(const plab_plan *plan, const char *path);

void plab_plan_free(plab_plan *plan);

/* Scoring -------------------------------------------------------------- */

/* Score a plan under (k districts, max fractional deviation, contiguity
 * required when require_contiguity != 0). */
int plab_validate(const plab_graph *graph, const plab_plan *plan, uint16_t k,
                  double deviation, int require_contiguity,
                  plab_score_report *out);

/* Cut edges of a complete plan; PLAB_ERR_INCOMPLETE otherwise. */
int plab_cut_edges(const plab_graph *graph, const plab_plan *plan,
                   uint64_t *out);

/* Enumeration ----------------------------------------------------------- */

/* Count all contiguous, population-feasible k-district plans.
 * node_budget 0 means the library default. On PLAB_ERR_BUDGET the
 * partial count is still written. */
int plab_enumerate_count(const plab_graph *graph, uint16_t k,
                         double deviation, uint64_t node_budget,
                         uint64_t *out_count);

/* Exact optimization ----------------------------------------------------- */

/* Minimize cut edges within a wall-clock budget. out_proven is 1 when the
 * search proved optimality. When out_plan is non-NULL it receives the best
 * plan found (caller frees with plab_plan_free). PLAB_ERR_BUDGET when no
 * feasible plan was found within budget. */
int plab_exact_min_cut_edges(const plab_graph *graph, uint16_t k,
                             double deviation, uint64_t budget_seconds,
                             int allow_discontiguous, uint64_t *out_cut,
                             uint8_t *out_proven, plab_plan **out_plan);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PLANLAB_H */
