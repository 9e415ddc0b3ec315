/* C API for the curved-qit toolkit.
 *
 * Every function returns a status code (CQ_OK on success); results come back
 * through out pointers. Handles are opaque and must be released with the
 * matching cq_*_free function. On failure, cq_last_error retrieves a
 * human-readable message for the calling thread.
 *
 * Matrix data is exchanged as separate row-major real/imaginary double
 * arrays of length dim*dim, where dim = cq_space_dim(space).
 */

#ifndef CURVED_QIT_H
#define CURVED_QIT_H

#include <stdbool.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CQ_OK 0
#define CQ_ERR_NULL 1       /* null pointer / empty array argument */
#define CQ_ERR_INVALID 2    /* malformed input (dimensions, indices, json) */
#define CQ_ERR_VALIDATION 3 /* structural axiom violated (positivity, ...) */
#define CQ_ERR_NUMERIC 4    /* numerically degenerate case */

typedef struct CqSpace CqSpace;
typedef struct CqOperator CqOperator;
typedef struct CqState CqState;
typedef struct CqPovm CqPovm;
typedef struct CqChannel CqChannel;

/* Copies the last error message (NUL-terminated, truncated to cap bytes)
 * into buf and returns the untruncated message length. buf may be NULL. */
size_t cq_last_error(char *buf, size_t cap);

/* --- Fock spaces --------------------------------------------------------- */

/* Truncated bosonic Fock space with `modes` modes and per-mode occupation
 * cutoff `cutoff`; dimension is (cutoff+1)^modes. */
int cq_space_new(size_t modes, size_t cutoff, CqSpace **out);
size_t cq_space_dim(const CqSpace *space);
void cq_space_free(CqSpace *space);

/* --- Operators ----------------------------------------------------------- */

int cq_operator_new(const CqSpace *space, const double *re, const double *im,
                    CqOperator **out);
int cq_annihilation_op(const CqSpace *space, size_t mode, CqOperator **out);
int cq_number_op(const CqSpace *space, size_t mode, CqOperator **out);
void cq_operator_free(CqOperator *op);

/* --- States -------------------------------------------------------------- */

/* Checks Hermiticity, positivity, and unit trace at tolerance `tol`. */
int cq_state_new(const CqSpace *space, const double *re, const double *im,
                 double tol, CqState **out);
int cq_state_maximally_mixed(const CqSpace *space, CqState **out);
int cq_state_entries(const CqState *state, double *re, double *im);
void cq_state_free(CqState *state);

/* Truncated Gibbs state at temperature a / 2 pi for mode frequency omega. */
int cq_thermal_state(const CqSpace *space, double acceleration, double omega,
                     CqState **out);
/* Two-mode squeezed vacuum on a 2-mode space; method 0 builds the series
 * expansion, method 1 exponentiates the squeezing generator. */
int cq_two_mode_squeezed_state(const CqSpace *space, double acceleration,
                               double omega, int method, CqState **out);

int cq_expectation(const CqState *state, const CqOperator *op, double *re,
                   double *im);
int cq_trace_distance(const CqState *a, const CqState *b, double *out);

/* --- POVMs --------------------------------------------------------------- */

/* Validates positivity and completeness of `n` effects at tolerance `tol`;
 * outcomes are labelled by index. */
int cq_povm_new(const CqOperator *const *effects, size_t n, double tol,
                CqPovm **out);
/* Two-outcome detector measure {alpha a(chi)^dag a(chi), complement};
 * chi has one complex entry per mode and outcome 0 is the click. */
int cq_detector_povm(const CqSpace *space, double alpha, const double *chi_re,
                     const double *chi_im, CqPovm **out);
size_t cq_povm_outcomes(const CqPovm *povm);
/* `out` must hold cq_povm_outcomes(povm) doubles. */
int cq_povm_probabilities(const CqPovm *povm, const CqState *state,
                          double *out);
/* Builds the projective dilation and reports how far the constructed map is
 * from an isometry and how far each compressed projector is from its effect. */
int cq_neumark_check(const CqPovm *povm, double *isometry_residual,
                     double *compression_residual);
void cq_povm_free(CqPovm *povm);

/* --- Channels ------------------------------------------------------------ */

int cq_channel_new(const CqOperator *const *kraus, size_t n, bool selective,
                   double tol, CqChannel **out);
/* weight is the outcome probability (1 for non-selective channels). */
int cq_channel_apply(const CqChannel *channel, const CqState *state,
                     CqState **out, double *weight);
int cq_channel_choi_min_eigenvalue(const CqChannel *channel, double *out);
void cq_channel_free(CqChannel *channel);

/* --- Expectation matching ------------------------------------------------ */

/* Solves an expectation-matching problem given as problem JSON and writes
 * the solution JSON (free with cq_string_free). Returns CQ_ERR_VALIDATION
 * when the best iterate misses a tolerance; the JSON is still produced. */
int cq_fell_solve_json(const char *problem_json, char **out);
void cq_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* CURVED_QIT_H */
