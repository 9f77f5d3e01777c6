#ifndef NHKREIN_H
#define NHKREIN_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum NhkStatus {
  NHK_OK = 0,
  NHK_NULL_POINTER = 1,
  // Bad parameters or configuration.
  NHK_INVALID_ARGUMENT = 2,
  // Singular metric, Jordan residual, non-convergence.
  NHK_NUMERICAL = 3,
  NHK_BUFFER_TOO_SMALL = 4,
  NHK_PANIC = 5,
} NhkStatus;

typedef enum NhkModelKind {
  NHK_DISSIPATIVE_OAT = 0,
  NHK_NV_LIPKIN = 1,
} NhkModelKind;

typedef enum NhkEpMode {
  NHK_EP_AUTO = 0,
  NHK_EP_FORCE_JORDAN = 1,
  NHK_EP_FORCE_DIAGONAL = 2,
} NhkEpMode;

// `NHK_METRIC_AUTO` or one of the forced cases.
typedef enum NhkMetricMode {
  NHK_METRIC_AUTO = 0,
  NHK_METRIC_CASE_I = 1,
  NHK_METRIC_CASE_II = 2,
  NHK_METRIC_CASE_III = 3,
  NHK_METRIC_CASE_IV = 4,
} NhkMetricMode;

typedef enum NhkClassification {
  NHK_ALL_REAL = 0,
  NHK_CONJUGATE_PAIRS = 1,
  NHK_GENERAL_COMPLEX = 2,
  NHK_DEFECTIVE = 3,
} NhkClassification;

typedef enum NhkMetricCase {
  NHK_CASE_I = 1,
  NHK_CASE_II = 2,
  NHK_CASE_III = 3,
  NHK_CASE_IV = 4,
} NhkMetricCase;

typedef enum NhkInnerProduct {
  NHK_INNER_EUCLIDEAN = 0,
  NHK_INNER_METRIC = 1,
} NhkInnerProduct;

// An evolved coherent state on a fixed time grid.
typedef struct NhkEvolution NhkEvolution;

// A Hamiltonian together with its spectrum, metric and propagator.
typedef struct NhkModel NhkModel;

// Model parameters. For `NHK_DISSIPATIVE_OAT`, `a, b, c` are `ω, λ, κ`;
// for `NHK_NV_LIPKIN`, `a, b, c, d` are `ε, γ, χ, V`.
typedef struct NhkModelParams {
  enum NhkModelKind kind;
  uint32_t particles;
  double a;
  double b;
  double c;
  double d;
} NhkModelParams;

// Tolerances; zero fields take the library defaults.
typedef struct NhkTolerances {
  double tau_real;
  double tau_pair;
  double tau_defect;
  double tau_jordan;
} NhkTolerances;

// One exceptional point of the dissipative OAT family.
typedef struct NhkExceptionalPoint {
  double kappa_over_lambda;
  double eigenvalue_re;
  double eigenvalue_im;
  size_t index_a;
  size_t index_b;
  size_t block_size;
} NhkExceptionalPoint;

// Squeezing data at one time sample.
typedef struct NhkSqueezing {
  double zeta2_x;
  double zeta2_y;
  double var_x;
  double var_y;
  double mean_x;
  double mean_y;
  double mean_z;
  double uncertainty_product;
  bool satisfies_bound;
  bool is_intelligent;
} NhkSqueezing;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nhk_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next `nhk_*` call on the same thread.
const char *nhk_last_error_message(void);

// Builds a model and prepares its spectrum, metric and propagator.
// `tol` may be NULL for defaults.
//
// # Safety
// `params` and `out_model` must be valid pointers; `tol` may be NULL.
enum NhkStatus nhk_model_new(const struct NhkModelParams *params,
                             const struct NhkTolerances *tol,
                             enum NhkEpMode ep_mode,
                             enum NhkMetricMode metric_mode,
                             struct NhkModel **out_model);

// # Safety
// `model` must come from [`nhk_model_new`] and not be used afterwards.
void nhk_model_free(struct NhkModel *model);

// # Safety
// `model` must be a live handle.
size_t nhk_model_dim(const struct NhkModel *model);

// # Safety
// `model` and `out` must be valid pointers.
enum NhkStatus nhk_model_classification(const struct NhkModel *model,
                                        enum NhkClassification *out_class);

// # Safety
// `model` and `out_case` must be valid pointers.
enum NhkStatus nhk_model_metric_case(const struct NhkModel *model, enum NhkMetricCase *out_case);

// Writes the `dim` eigenvalues into `re` and `im`.
//
// # Safety
// `re` and `im` must each hold `len` doubles.
enum NhkStatus nhk_model_eigenvalues(const struct NhkModel *model,
                                     double *re,
                                     double *im,
                                     size_t len);

// Copies the Hamiltonian in row-major order as interleaved (re, im)
// pairs; `out` holds `2·dim²` doubles.
//
// # Safety
// `out` must hold `len` doubles.
enum NhkStatus nhk_model_hamiltonian(const struct NhkModel *model, double *out_buf, size_t len);

// Copies the positive metric `S_K`, laid out as in [`nhk_model_hamiltonian`].
//
// # Safety
// `out` must hold `len` doubles.
enum NhkStatus nhk_model_metric(const struct NhkModel *model, double *out_buf, size_t len);

// Real-eigenvalue counts of the dissipative OAT model at each `κ/λ` in
// `ratios`.
//
// # Safety
// `ratios` and `counts` must each hold `len` items; `tol` may be NULL.
enum NhkStatus nhk_count_real(uint32_t particles,
                              double omega,
                              double lambda,
                              const double *ratios,
                              size_t *counts,
                              size_t len,
                              const struct NhkTolerances *tol);

// Exceptional points of the dissipative OAT model in `[lo, hi]`. The
// number found is stored in `out_count` even when `capacity` is too small.
//
// # Safety
// `points` must hold `capacity` items; `out_count` must be valid; `tol`
// may be NULL.
enum NhkStatus nhk_locate_eps(uint32_t particles,
                              double omega,
                              double lambda,
                              double lo,
                              double hi,
                              size_t grid,
                              const struct NhkTolerances *tol,
                              struct NhkExceptionalPoint *points,
                              size_t capacity,
                              size_t *out_count);

// Evolves the coherent state `(θ₀, φ₀)` over the strictly ascending
// `times`.
//
// # Safety
// `model` must be live, `times` must hold `len` doubles, `out_evolution`
// must be valid.
enum NhkStatus nhk_evolve(const struct NhkModel *model,
                          double theta0,
                          double phi0,
                          const double *times,
                          size_t len,
                          struct NhkEvolution **out_evolution);

// # Safety
// `evolution` must come from [`nhk_evolve`] and not be used afterwards.
void nhk_evolution_free(struct NhkEvolution *evolution);

// # Safety
// `evolution` must be a live handle.
size_t nhk_evolution_len(const struct NhkEvolution *evolution);

// Survival probability at every sample.
//
// # Safety
// `out` must hold `len` doubles.
enum NhkStatus nhk_evolution_survival(const struct NhkEvolution *evolution,
                                      enum NhkInnerProduct inner,
                                      bool normalize,
                                      double *out_buf,
                                      size_t len);

// `⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩` at every sample, written as consecutive triples.
//
// # Safety
// `out` must hold `len` doubles (at least `3·samples`).
enum NhkStatus nhk_evolution_spin_means(const struct NhkEvolution *evolution,
                                        bool normalize,
                                        double *out_buf,
                                        size_t len);

// Squeezing data at every sample.
//
// # Safety
// `out` must hold `len` records.
enum NhkStatus nhk_evolution_squeezing(const struct NhkEvolution *evolution,
                                       struct NhkSqueezing *out_buf,
                                       size_t len);

// `⟨I(t)|I(t)⟩_S` at every sample. May overflow to infinity for long runs
// with growing modes; use [`nhk_evolution_log_s_norms`] then.
//
// # Safety
// `out` must hold `len` doubles.
enum NhkStatus nhk_evolution_s_norms(const struct NhkEvolution *evolution,
                                     double *out_buf,
                                     size_t len);

// `ln ⟨I(t)|I(t)⟩_S` at every sample, computed without overflow.
//
// # Safety
// `out` must hold `len` doubles.
enum NhkStatus nhk_evolution_log_s_norms(const struct NhkEvolution *evolution,
                                         double *out_buf,
                                         size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NHKREIN_H */
