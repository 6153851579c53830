/* C interface to the bridge-simulation library.
 *
 * All functions returning int use the status codes below and record a
 * human-readable message retrievable with bs_last_error() (thread-local).
 * Functions returning pointers yield NULL on failure, with the message set.
 * Every object created here is destroyed by the matching *_free function.
 */
#ifndef BRIDGESIM_H
#define BRIDGESIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define BS_OK 0
#define BS_ERR_NUMERIC 1 /* runtime/numerical failure */
#define BS_ERR_CONFIG 2  /* invalid argument or configuration */

const char* bs_version(void);
const char* bs_last_error(void);

/* ---- models ------------------------------------------------------------ */

typedef struct bs_model bs_model;

/* Built-in scalar examples, constant dispersion sigma. */
bs_model* bs_model_ou(double alpha, double sigma);     /* b(x) = -alpha x        */
bs_model* bs_model_sine(double sigma);                 /* b(x) = -sin(2 pi x)    */
bs_model* bs_model_ou_sine(double sigma);              /* b(x) = -x/2 - sin(2 pi x) */

/* Custom model via callbacks. States and matrices are row-major arrays.
 * drift: out has d entries; dispersion: out has d*d_noise entries;
 * jacobian (optional, may be NULL): out has d*d entries. */
typedef void (*bs_vec_fn)(double t, const double* x, double* out, void* ctx);
bs_model* bs_model_custom(int d, int d_noise, bs_vec_fn drift, bs_vec_fn dispersion,
                          bs_vec_fn jacobian, void* ctx);
int bs_model_dim(const bs_model* model);
void bs_model_free(bs_model* model);

/* ---- time grids ---------------------------------------------------------- */

typedef struct bs_grid bs_grid;

bs_grid* bs_grid_uniform(double T, size_t n_steps);
size_t bs_grid_steps(const bs_grid* grid);
double bs_grid_node(const bs_grid* grid, size_t i);
void bs_grid_free(bs_grid* grid);

/* ---- simulation ---------------------------------------------------------- */

typedef struct bs_batch bs_batch;

typedef struct bs_sim_opts {
  const char* proposal;     /* delyon-hu-0 | delyon-hu-1 | residual | lna-residual |
                               guided | adjusted-v1 | adjusted-v2 */
  const char* aux;          /* simple51 | lna | brownian | custom (guided only) */
  const char* sigma_policy; /* constant-end | interpolate */
  double t0;                /* interpolate switch time; < 0 means unset */
  uint64_t seed;
  size_t n_paths;
  int threads;
  /* custom auxiliary constants (aux == "custom"), row-major:
     aux_B d*d, aux_beta d, aux_sigma d*aux_sigma_cols */
  const double* aux_B;
  const double* aux_beta;
  const double* aux_sigma;
  int aux_sigma_cols;
} bs_sim_opts;

/* guided / simple51 / constant-end, t0 unset, seed 0, 1 path, 1 thread */
bs_sim_opts bs_sim_opts_default(void);

/* Simulates n_paths bridges from u to v over [0, T] and computes the
 * family's log weights (where defined). */
int bs_simulate(const bs_model* model, const double* u, const double* v, double T,
                const bs_grid* grid, const bs_sim_opts* opts, bs_batch** out);

/* Deterministic drift flow from u, written as (steps+1) x d row-major. */
int bs_flow(const bs_model* model, const double* u, const bs_grid* grid, double* out);

size_t bs_batch_size(const bs_batch* batch);   /* number of paths */
size_t bs_batch_nodes(const bs_batch* batch);  /* nodes per path (steps+1) */
int bs_batch_dim(const bs_batch* batch);
/* Path j states, (nodes) x d row-major. */
int bs_batch_path(const bs_batch* batch, size_t j, double* out);
int bs_batch_has_weights(const bs_batch* batch);
int bs_batch_weight_total(const bs_batch* batch, size_t j, double* out);
/* Named component (log_psi1, log_psi2, log_const, g_integral); BS_ERR_CONFIG
 * when the family does not carry it. */
int bs_batch_weight_component(const bs_batch* batch, size_t j, const char* name, double* out);
int bs_batch_ess(const bs_batch* batch, double* out);
/* Self-normalized IS estimate of E[x_coord(t_node)^power] with its standard
 * error (power 1 or 2). */
int bs_batch_is_estimate(const bs_batch* batch, size_t node, int coord, int power,
                         double* value, double* se);
/* Self-normalized weighted mean path (equal weights for weightless families),
 * (nodes) x d row-major. */
int bs_batch_mean_path(const bs_batch* batch, double* out);
/* CSV emission: paths as path_id,t,x_0,...  weights as
 * path_id,log_total,log_psi1,log_psi2,log_const,g_integral. */
int bs_batch_write_paths_csv(const bs_batch* batch, const char* file);
int bs_batch_write_weights_csv(const bs_batch* batch, const char* file);
void bs_batch_free(bs_batch* batch);

/* ---- backward tables ----------------------------------------------------- */

typedef struct bs_table bs_table;

/* Builds the guiding tables K(t), v(t) for the chosen auxiliary (same aux
 * semantics as bs_sim_opts; custom constants passed the same way). */
int bs_table_build(const bs_model* model, const double* u, const double* v, double T,
                   const bs_grid* grid, const bs_sim_opts* opts, bs_table** out);
size_t bs_table_nodes(const bs_table* table);
/* Node i: K d*d row-major and v d entries. */
int bs_table_row(const bs_table* table, size_t i, double* K, double* v);
/* CSV: t,K_00,...,v_0,... */
int bs_table_write_csv(const bs_table* table, const char* file);
void bs_table_free(bs_table* table);

/* ---- reference oracles ---------------------------------------------------- */

/* Closed-form conditional mean of the linear-drift bridge at time t (d values). */
int bs_ou_bridge_mean(double alpha, double sigma, const double* u, const double* v, int d,
                      double T, double t, double* out);

/* Exact linear-drift bridge paths (alpha != 0); a batch without weights. */
int bs_ou_bridge_exact(double alpha, double sigma, const double* u, const double* v, int d,
                       const bs_grid* grid, uint64_t seed, size_t n_paths, bs_batch** out);

/* Endpoint-rejection bridge sampler; returns the accepted paths as a batch
 * without weights and reports the acceptance rate. max_attempts 0 picks the
 * default budget. */
int bs_rejection_oracle(const bs_model* model, const double* u, const double* v, double T,
                        const bs_grid* grid, double eps, size_t n_accept, uint64_t seed,
                        size_t max_attempts, int threads, bs_batch** out,
                        double* acceptance_rate);

/* ---- Metropolis-Hastings -------------------------------------------------- */

typedef struct bs_mh bs_mh;

/* Independence MH over bridge proposals (family must carry a weight). Every
 * `thin`-th state of the chain is stored. */
int bs_mh_run(const bs_model* model, const double* u, const double* v, double T,
              const bs_grid* grid, const bs_sim_opts* opts, size_t n_iterations, size_t thin,
              bs_mh** out);
size_t bs_mh_iterations(const bs_mh* mh);
double bs_mh_acceptance_rate(const bs_mh* mh);
/* Per-iteration chain log-weight and 0/1 acceptance flags (n_iterations each;
 * either pointer may be NULL). */
int bs_mh_trace(const bs_mh* mh, double* log_weight, int* accepted);
size_t bs_mh_stored(const bs_mh* mh);
/* Stored snapshot k: its iteration index and states ((nodes) x d row-major;
 * either output may be NULL). */
int bs_mh_stored_path(const bs_mh* mh, size_t k, size_t* iteration, double* out);
void bs_mh_free(bs_mh* mh);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BRIDGESIM_H */
