/* C interface to the perorbit library. Every call that can fail returns a po_status; the
 * message of the most recent failure on the calling thread is available from po_last_error.
 * Strings returned through char** are allocated by the library and released with po_string_free. */
#ifndef PERORBIT_H
#define PERORBIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PO_API __declspec(dllexport)
#else
#define PO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct po_system po_system;

typedef enum po_status {
  PO_OK = 0,
  PO_INVALID_ARGUMENT = 1,
  PO_PARSE_ERROR = 2,
  PO_NOT_CONVERGED = 3,
  PO_NUMERICAL_ERROR = 4,
  PO_IO_ERROR = 5,
  PO_INTERNAL_ERROR = 6
} po_status;

PO_API const char* po_version(void);
PO_API const char* po_status_string(po_status s);
PO_API const char* po_last_error(void);
PO_API void po_string_free(char* s);

/* Systems */

/* params_json: object of numeric overrides such as {"kappa": -1}; may be NULL. */
PO_API po_status po_system_builtin(const char* name, const char* params_json, po_system** out);
PO_API po_status po_system_from_json(const char* text, po_system** out);

typedef void (*po_force_fn)(const double* q, double* s, void* user);
typedef void (*po_jacobian_fn)(const double* q, double* jac_row_major, void* user);
typedef double (*po_potential_fn)(const double* q, void* user);

/* mass and damping are dim x dim row-major; forcing_json uses the "forcing" schema of system
 * files. jacobian and potential may be NULL. */
PO_API po_status po_system_custom(int dim, const double* mass, const double* damping, po_force_fn force,
                                  po_jacobian_fn jacobian, po_potential_fn potential, void* user,
                                  const char* forcing_json, po_system** out);
PO_API void po_system_free(po_system* sys);
PO_API int po_system_dim(const po_system* sys);
PO_API double po_system_omega(const po_system* sys);
PO_API po_status po_system_to_json(const po_system* sys, char** out);
PO_API po_status po_builtin_names(char** json_out);

/* Existence certificate */

PO_API po_status po_certify(const po_system* sys, uint64_t seed, char** report_json);
PO_API po_status po_counterexample1_threshold(double k1, double k2, double c1, double omega, double kappa,
                                              double c2, double* c_inf, double* f_threshold);

/* Harmonic balance */

typedef struct po_hb_options {
  double tol;
  int max_iter;
  int samples; /* 0 selects the default for K */
} po_hb_options;

PO_API po_hb_options po_hb_options_default(void);

/* Returns PO_NOT_CONVERGED with the last iterate in solution_json when Newton does not converge. */
PO_API po_status po_hb_solve(const po_system* sys, double omega, int K, const po_hb_options* opts,
                             char** solution_json);
PO_API po_status po_hb_solution_csv(const char* solution_json, int n_samples, char** csv);
PO_API po_status po_hb_study(const po_system* sys, const int* Ks, size_t n, const po_hb_options* opts,
                             char** study_json);

/* Continuation */

typedef enum po_sweep_method { PO_SWEEP_ARCLENGTH = 0, PO_SWEEP_NATURAL = 1 } po_sweep_method;
typedef enum po_sweep_parameter { PO_PARAM_FREQUENCY = 0, PO_PARAM_AMPLITUDE = 1 } po_sweep_parameter;

typedef struct po_sweep_options {
  po_sweep_method method;
  po_sweep_parameter parameter;
  double omega; /* fixed frequency for amplitude sweeps; 0 keeps the system's own */
  int K;
  double initial_step;
  double max_step;
  int max_points;
  int tag_stability;
  po_hb_options hb;
  double rtol;
  double atol;
} po_sweep_options;

PO_API po_sweep_options po_sweep_options_default(void);
/* Either output pointer may be NULL. */
PO_API po_status po_sweep(const po_system* sys, double from, double to, const po_sweep_options* opts,
                          char** branch_json, char** branch_csv);
/* Softening Duffing (kappa < 0) continued in the forcing amplitude from the three equilibria.
 * Output is {"trivial": ..., "positive": ..., "negative": ...}. */
PO_API po_status po_duffing_amplitude_sweep(double c, double omega2, double kappa, double Omega, double f_max,
                                            const po_sweep_options* opts, char** json);

/* Floquet stability map of the Mathieu-type variational system */

typedef struct po_mathieu_params {
  double omega2;
  double c1;
  double c2;
  double kappa;
  double Omega;
} po_mathieu_params;

PO_API po_mathieu_params po_mathieu_params_default(void);
/* Any output pointer may be NULL. summary_json lists counts and the boundary points. */
PO_API po_status po_floquet_map(const po_mathieu_params* p, const double* a, size_t na, const double* omega1,
                                size_t nw, double rtol, double atol, int jobs, char** map_csv,
                                char** boundary_csv, char** summary_json);

/* Fejer partial sums at t = 0 */

PO_API po_status po_fejer_demo(int blocks, const int* ns, size_t n, char** json);

/* Reproduction suite */

PO_API po_status po_repro_subsets(char** json);
/* out_dir may be NULL (nothing written); header is prepended to every CSV. The summary carries
 * "all_pass" and one entry per criterion. */
PO_API po_status po_repro(const char* subset, const char* out_dir, const char* header, uint64_t seed, int jobs,
                          char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
