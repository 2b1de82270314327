/* Exercises the C interface from plain C. */
#include "perorbit/perorbit.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                    \
    }                                                                \
  } while (0)

/* Reads the first number following "key": in a JSON text. */
static double json_number(const char* json, const char* key) {
  char pattern[64];
  snprintf(pattern, sizeof pattern, "\"%s\":", key);
  const char* p = strstr(json, pattern);
  if (!p) return NAN;
  p += strlen(pattern);
  while (*p == ' ' || *p == '\n' || *p == '[') ++p;
  return strtod(p, NULL);
}

/* Duffing restoring force q + 0.5 q^3 with its Jacobian and potential. */
static void duffing_force(const double* q, double* s, void* user) {
  const double kappa = *(const double*)user;
  s[0] = q[0] + kappa * q[0] * q[0] * q[0];
}
static void duffing_jacobian(const double* q, double* j, void* user) {
  const double kappa = *(const double*)user;
  j[0] = 1.0 + 3.0 * kappa * q[0] * q[0];
}
static double duffing_potential(const double* q, void* user) {
  const double kappa = *(const double*)user;
  return 0.5 * q[0] * q[0] + 0.25 * kappa * q[0] * q[0] * q[0] * q[0];
}

int main(void) {
  CHECK(strcmp(po_version(), "1.0.0") == 0);

  /* Error reporting. */
  po_system* sys = NULL;
  CHECK(po_system_builtin("no_such_system", NULL, &sys) == PO_INVALID_ARGUMENT);
  CHECK(sys == NULL);
  CHECK(strlen(po_last_error()) > 0);
  CHECK(po_system_from_json("{not json", &sys) == PO_PARSE_ERROR);
  CHECK(po_system_builtin("duffing", "{\"kappa\": \"x\"}", &sys) == PO_INVALID_ARGUMENT);

  /* Certificates. */
  char* out = NULL;
  CHECK(po_system_builtin("counterexample1", NULL, &sys) == PO_OK);
  CHECK(po_system_dim(sys) == 2);
  CHECK(po_certify(sys, 1, &out) == PO_OK);
  CHECK(strstr(out, "\"overall\": \"no-periodic-orbit\"") != NULL);
  po_string_free(out);
  po_system_free(sys);

  double c_inf = 0.0, f_thr = 0.0;
  CHECK(po_counterexample1_threshold(1.0, 4.0, 0.001, 1.0, 1.0, 0.0, &c_inf, &f_thr) == PO_OK);
  CHECK(fabs(c_inf - 1371.7577441) < 1e-4);
  CHECK(fabs(f_thr - 0.011777) < 1e-6);

  /* Harmonic balance on the linear truncation example. */
  CHECK(po_system_builtin("lin_sys", NULL, &sys) == PO_OK);
  po_hb_options ho = po_hb_options_default();
  CHECK(po_hb_solve(sys, 1.0, 5, &ho, &out) == PO_OK);
  CHECK(fabs(json_number(out, "amplitude") - 0.0025) < 1e-4);
  char* csv = NULL;
  CHECK(po_hb_solution_csv(out, 16, &csv) == PO_OK);
  CHECK(strncmp(csv, "t,q1\n", 5) == 0);
  po_string_free(csv);
  po_string_free(out);
  const int Ks[] = {5, 20};
  CHECK(po_hb_study(sys, Ks, 2, NULL, &out) == PO_OK);
  CHECK(strstr(out, "\"K\": 20") != NULL);
  po_string_free(out);
  po_system_free(sys);

  /* A callback system matches the built-in Duffing oscillator. */
  const double kappa = 0.5;
  const double mass = 1.0, damping = 0.05;
  const char* forcing = "{\"type\": \"fourier\", \"period\": 6.283185307179586, \"harmonics\": [{\"k\": 1, \"c\": [0.2]}]}";
  CHECK(po_system_custom(1, &mass, &damping, duffing_force, duffing_jacobian, duffing_potential, (void*)&kappa,
                         forcing, &sys) == PO_OK);
  po_system* ref = NULL;
  CHECK(po_system_builtin("duffing", "{\"c\": 0.05, \"kappa\": 0.5, \"f\": 0.2}", &ref) == PO_OK);
  char* a = NULL;
  char* b = NULL;
  CHECK(po_hb_solve(sys, 1.3, 7, NULL, &a) == PO_OK);
  CHECK(po_hb_solve(ref, 1.3, 7, NULL, &b) == PO_OK);
  CHECK(fabs(json_number(a, "amplitude") - json_number(b, "amplitude")) < 1e-9);
  po_string_free(a);
  po_string_free(b);
  /* Callbacks only allow sampled evidence for the sign conditions. */
  CHECK(po_certify(sys, 0, &out) == PO_OK);
  CHECK(strstr(out, "\"verdict\": \"declared\"") != NULL);
  CHECK(strstr(out, "\"overall\": \"inconclusive\"") != NULL);
  CHECK(json_number(out, "amplitude_bound") > 0.0);
  po_string_free(out);
  CHECK(po_system_to_json(sys, &out) == PO_INVALID_ARGUMENT || out == NULL);
  po_system_free(sys);

  /* Continuation. */
  po_sweep_options so = po_sweep_options_default();
  so.max_step = 0.1;
  char* branch = NULL;
  CHECK(po_sweep(ref, 0.8, 1.6, &so, &branch, &csv) == PO_OK);
  CHECK(strstr(branch, "\"points\"") != NULL);
  CHECK(strncmp(csv, "Omega,amp_1,", 12) == 0);
  po_string_free(branch);
  po_string_free(csv);
  po_system_free(ref);
  CHECK(po_duffing_amplitude_sweep(0.01, 1.0, 1.0, 1.0, 0.1, NULL, &out) == PO_INVALID_ARGUMENT);

  /* Stability map. */
  po_mathieu_params mp = po_mathieu_params_default();
  const double as[] = {0.0, 0.05, 0.1};
  const double ws[] = {0.3, 1.45};
  char* summary = NULL;
  CHECK(po_floquet_map(&mp, as, 3, ws, 2, 0.0, 0.0, 1, &csv, NULL, &summary) == PO_OK);
  CHECK(json_number(summary, "cells") == 6.0);
  CHECK(json_number(summary, "max_liouville_defect") < 1e-8);
  po_string_free(csv);
  po_string_free(summary);
  CHECK(po_floquet_map(&mp, as, 0, ws, 2, 0.0, 0.0, 1, NULL, NULL, NULL) == PO_INVALID_ARGUMENT);

  /* Fejer demo and reproduction entry points. */
  const int ns[] = {0, 511};
  CHECK(po_fejer_demo(2, ns, 2, &out) == PO_OK);
  CHECK(json_number(out, "argmax_n") == 511.0);
  CHECK(json_number(out, "full_sum") == 0.0);
  po_string_free(out);
  CHECK(po_repro("thresholds", NULL, NULL, 1, 1, &out) == PO_OK);
  CHECK(strstr(out, "\"all_pass\": true") != NULL);
  po_string_free(out);
  CHECK(po_repro("bogus", NULL, NULL, 1, 1, &out) == PO_INVALID_ARGUMENT);

  if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
  else printf("all C interface checks passed\n");
  return failures ? 1 : 0;
}
