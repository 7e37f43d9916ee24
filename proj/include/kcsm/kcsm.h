/* kcsm — kinetically constrained spin model laboratory.
 *
 * C interface to the shared library. All functions return a kcsm_status;
 * on failure kcsm_last_error() describes the problem (thread-local).
 * Handles are opaque and must be released with their _free function.
 */
#ifndef KCSM_H
#define KCSM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KCSM_API __declspec(dllexport)
#else
#define KCSM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kcsm_status {
  KCSM_OK = 0,
  KCSM_ERR_INVALID = 1,     /* bad arguments, schema violations */
  KCSM_ERR_UNSUPPORTED = 2, /* operation undefined for this model/topology */
  KCSM_ERR_CAP = 3,         /* exact-analysis size cap exceeded */
  KCSM_ERR_SOLVER = 4,      /* eigensolver failure */
  KCSM_ERR_IO = 5,
  KCSM_ERR_INTERNAL = 6
} kcsm_status;

typedef struct kcsm_model kcsm_model;

KCSM_API const char* kcsm_version(void);

/* Message for the most recent failure on this thread ("" if none). */
KCSM_API const char* kcsm_last_error(void);

/* ---- models -------------------------------------------------------- */

/* Builds a model from a JSON descriptor, e.g.
 *   {"schema":1,"name":"east","n":8,"q":0.5,"boundary":"minimal"}
 * Catalog names: east, fa1f, fa2f, fajf, north-east, spiral,
 * two-children-tree, tree-east. */
KCSM_API kcsm_status kcsm_model_create(const char* json_descriptor,
                                       kcsm_model** out);
KCSM_API void kcsm_model_free(kcsm_model* model);

KCSM_API int kcsm_model_num_vertices(const kcsm_model* model);

/* spins: one byte per vertex (0 = vacant, 1 = occupied), length n. */
KCSM_API kcsm_status kcsm_constraint(const kcsm_model* model,
                                     const uint8_t* spins, int n, int vertex,
                                     int* out);

/* ---- bootstrap map -------------------------------------------------- */

/* One synchronous application of the bootstrap map, in place. */
KCSM_API kcsm_status kcsm_bootstrap_step(const kcsm_model* model,
                                         uint8_t* spins, int n);

/* Iterates the map to its fixed point; all_zero reports complete emptying. */
KCSM_API kcsm_status kcsm_bootstrap_closure(const kcsm_model* model,
                                            uint8_t* spins, int n,
                                            int* all_zero);

/* ---- exact spectra --------------------------------------------------- */

typedef struct kcsm_spectral_report {
  double gap;
  double relaxation_time;
  double residual;
  long long dim;
  long long components; /* multiplicity of the zero eigenvalue */
  int converged;
} kcsm_spectral_report;

KCSM_API kcsm_status kcsm_spectral_gap(const kcsm_model* model,
                                       kcsm_spectral_report* out);

/* Smallest Dirichlet eigenvalue with A = {configurations whose `vertex` is
 * vacant}. */
KCSM_API kcsm_status kcsm_dirichlet_eigenvalue(const kcsm_model* model,
                                               int vertex, double* out);

/* ---- dynamics -------------------------------------------------------- */

/* Persistence estimate at the t_grid points (len entries each). F, F0, F1,
 * se may each be NULL if not wanted. */
KCSM_API kcsm_status kcsm_persistence(const kcsm_model* model, int origin,
                                      const double* t_grid, int len,
                                      int samples, uint64_t seed, double* F,
                                      double* F0, double* F1, double* se);

/* ---- experiment runner ----------------------------------------------- */

/* Runs one experiment described by a schema-1 config JSON (the same schema
 * the CLI uses). On return *summary_json (malloc'd; free with
 * kcsm_string_free) carries the run summary, and *exit_code the CLI-style
 * exit code (0 ok, 1 check failures, 2 validation error, 3 solver error).
 * The status is KCSM_OK whenever the runner itself executed. */
KCSM_API kcsm_status kcsm_run_experiment(const char* config_json,
                                         char** summary_json, int* exit_code);

KCSM_API void kcsm_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* KCSM_H */
