#ifndef STEFAN_LIMITS_H
#define STEFAN_LIMITS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Side of the interface.
typedef enum SlSide {
  SL_SIDE_PLUS = 0,
  SL_SIDE_MINUS = 1,
} SlSide;

// Result codes of every fallible call.
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_NUMERICAL_FAILURE = 3,
  SL_STATUS_IO = 4,
  SL_STATUS_CONFIG = 5,
  SL_STATUS_BUFFER_TOO_SMALL = 6,
  SL_STATUS_PANIC = 7,
} SlStatus;

// Studies runnable through [`sl_run_study`].
typedef enum SlStudy {
  SL_STUDY_UNIFORMITY = 0,
  SL_STUDY_LIMIT = 1,
  SL_STUDY_SECTOR = 2,
  SL_STUDY_VALIDATE = 3,
  SL_STUDY_CROSS_CHECK = 4,
} SlStudy;

// Parsed study configuration.
typedef struct SlConfig SlConfig;

// Physical parameters.
typedef struct SlParams SlParams;

// Gridded solution of one full solve.
typedef struct SlSolution SlSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread, NUL-terminated, into `buf`.
//
// Returns the message length without the terminator; nothing is written
// when `buf` is null or `len` is too small.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t sl_last_error(char *buf, size_t len);

// Creates validated parameters with constant `a±`.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to free with [`sl_params_free`].
enum SlStatus sl_params_new(double c_plus,
                            double c_minus,
                            double delta,
                            double sigma,
                            double kappa,
                            double a_plus,
                            double a_minus,
                            double p,
                            double r_bound,
                            struct SlParams **out);

// # Safety
// `params` must be null or a handle from [`sl_params_new`] not yet freed.
void sl_params_free(struct SlParams *params);

// `ω = (λ + κ + c z)^{1/2}` on the principal branch.
//
// # Safety
// `out_re` and `out_im` must be valid pointers.
enum SlStatus sl_omega(double lambda_re,
                       double lambda_im,
                       double z_re,
                       double z_im,
                       double c,
                       double kappa,
                       double *out_re,
                       double *out_im);

// The boundary symbol `m(λ, z)` at the `(δ, σ, κ)` of `params`.
//
// # Safety
// `params` must be a live handle; `out_re` and `out_im` must be valid pointers.
enum SlStatus sl_m_symbol(const struct SlParams *params,
                          double lambda_re,
                          double lambda_im,
                          double z_re,
                          double z_im,
                          double *out_re,
                          double *out_im);

// `|f₁ + f₂| / (|f₁| + |f₂|)`.
//
// # Safety
// `out` must be a valid pointer.
enum SlStatus sl_triangle_ratio(double f1_re,
                                double f1_im,
                                double f2_re,
                                double f2_im,
                                double *out);

// Parses a JSON configuration.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
enum SlStatus sl_config_from_json(const char *json, struct SlConfig **out);

// # Safety
// `config` must be null or a handle from [`sl_config_from_json`] not yet freed.
void sl_config_free(struct SlConfig *config);

// Runs a study and writes its artifacts into `out_dir`.
//
// `failed` receives whether any row or check of the study failed.
//
// # Safety
// `config` must be a live handle, `out_dir` a NUL-terminated path and `failed` a valid pointer.
enum SlStatus sl_run_study(const struct SlConfig *config,
                           enum SlStudy study,
                           const char *out_dir,
                           bool *failed);

// Solves the configured model with its seed family made compatible.
//
// # Safety
// `config` must be a live handle; `out` must be a valid pointer.
enum SlStatus sl_solve_full(const struct SlConfig *config, struct SlSolution **out);

// Node counts of the time, tangential and normal grids.
//
// # Safety
// `sol` must be a live handle; the outputs must be valid pointers.
enum SlStatus sl_solution_dims(const struct SlSolution *sol, size_t *n_t, size_t *n_x, size_t *n_y);

// Copies `ρ` row-major in `[t, x]`.
//
// # Safety
// `sol` must be a live handle and `buf` must hold `len` doubles.
enum SlStatus sl_solution_rho(const struct SlSolution *sol, double *buf, size_t len);

// Copies `v` on one side, row-major in `[t, x, |y|]`.
//
// # Safety
// `sol` must be a live handle and `buf` must hold `len` doubles.
enum SlStatus sl_solution_v(const struct SlSolution *sol,
                            enum SlSide side,
                            double *buf,
                            size_t len);

// # Safety
// `sol` must be null or a handle from [`sl_solve_full`] not yet freed.
void sl_solution_free(struct SlSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEFAN_LIMITS_H */
