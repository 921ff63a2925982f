#ifndef BDPCA_H
#define BDPCA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BDPCA_API __declspec(dllexport)
#else
#define BDPCA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define BDPCA_VERSION "0.1.0"

typedef enum bdpca_status {
  BDPCA_OK = 0,
  BDPCA_ERR_INVALID_INPUT = 1,
  BDPCA_ERR_DOMAIN = 2,
  BDPCA_ERR_NOT_PSD = 3,
  BDPCA_ERR_CONVERGENCE = 4,
  BDPCA_ERR_PRECONDITION = 5,
  BDPCA_ERR_CORRUPT_MESSAGE = 6,
  BDPCA_ERR_IO = 7,
  BDPCA_ERR_PARSE = 8,
  BDPCA_ERR_TIMEOUT = 9,
  BDPCA_ERR_INTERNAL = 100
} bdpca_status;

typedef enum bdpca_log_level { BDPCA_LOG_INFO = 0, BDPCA_LOG_WARNING = 1 } bdpca_log_level;

/* Matrices cross the boundary as column-major double arrays. */

BDPCA_API const char* bdpca_version(void);
BDPCA_API const char* bdpca_status_name(int status);
/* Message of the last failed call on this thread; "" if none. */
BDPCA_API const char* bdpca_last_error(void);

typedef void (*bdpca_log_fn)(int level, const char* message, void* user);
/* NULL restores the default stderr sink. */
BDPCA_API void bdpca_set_log_callback(bdpca_log_fn fn, void* user);

/* ---- shards ---------------------------------------------------------- */

typedef struct bdpca_shard bdpca_shard;

BDPCA_API int bdpca_shard_create(size_t p, size_t n, const double* samples, uint32_t machine_id, bdpca_shard** out);
/* Binary BDPX or CSV (one sample per row); csv_machine_id labels CSV input. */
BDPCA_API int bdpca_shard_read(const char* path, uint32_t csv_machine_id, bdpca_shard** out);
BDPCA_API int bdpca_shard_write(const bdpca_shard* shard, const char* path);
BDPCA_API int bdpca_shard_dims(const bdpca_shard* shard, size_t* p, size_t* n, uint32_t* machine_id);
BDPCA_API void bdpca_shard_free(bdpca_shard* shard);

/* ---- truncated summaries --------------------------------------------- */

typedef struct bdpca_summary bdpca_summary;

BDPCA_API int bdpca_summary_create(size_t p, size_t q, const double* values, const double* vectors,
                                   bdpca_summary** out);
BDPCA_API int bdpca_local_summary(const bdpca_shard* shard, size_t q, int center, bdpca_summary** out);
BDPCA_API int bdpca_summary_dims(const bdpca_summary* s, size_t* p, size_t* q);
BDPCA_API int bdpca_summary_values(const bdpca_summary* s, double* out);   /* q */
BDPCA_API int bdpca_summary_vectors(const bdpca_summary* s, double* out);  /* p*q */
BDPCA_API void bdpca_summary_free(bdpca_summary* s);

/* ---- aggregation ------------------------------------------------------ */

typedef struct bdpca_beta_config {
  double beta;
  double delta;
  double eigen_floor;
} bdpca_beta_config;

BDPCA_API void bdpca_beta_config_init(bdpca_beta_config* cfg);

typedef struct bdpca_result bdpca_result;

/* weights may be NULL (uniform). */
BDPCA_API int bdpca_aggregate_beta(const bdpca_summary* const* summaries, size_t m, const bdpca_beta_config* cfg,
                                   size_t r, const double* weights, bdpca_result** out);
BDPCA_API int bdpca_aggregate_fan(const bdpca_summary* const* summaries, size_t m, size_t r, bdpca_result** out);

BDPCA_API int bdpca_result_dims(const bdpca_result* res, size_t* p, size_t* r);
BDPCA_API int bdpca_result_sigma(const bdpca_result* res, double* out);            /* p*p */
BDPCA_API int bdpca_result_leading_values(const bdpca_result* res, double* out);   /* r */
BDPCA_API int bdpca_result_leading_vectors(const bdpca_result* res, double* out);  /* p*r */
BDPCA_API const char* bdpca_result_branch(const bdpca_result* res);
BDPCA_API int bdpca_result_tie_warning(const bdpca_result* res);
BDPCA_API void bdpca_result_free(bdpca_result* res);

/* Matrix beta-divergence D(m1, m2); beta 0 and -1 select the limits. */
BDPCA_API int bdpca_divergence(const double* m1, const double* m2, size_t p, double beta, double* out);

/* ---- cross-validated beta selection ------------------------------------ */

typedef struct bdpca_cv_result bdpca_cv_result;

BDPCA_API int bdpca_select_beta(const bdpca_summary* const* summaries_q, size_t m, size_t r, size_t folds,
                                uint64_t seed, const double* candidates, size_t n_candidates, double delta,
                                bdpca_cv_result** out);
BDPCA_API size_t bdpca_cv_candidate_count(const bdpca_cv_result* cv);
BDPCA_API double bdpca_cv_candidate(const bdpca_cv_result* cv, size_t i);
BDPCA_API double bdpca_cv_score(const bdpca_cv_result* cv, size_t i);
BDPCA_API size_t bdpca_cv_fold_count(const bdpca_cv_result* cv);
BDPCA_API double bdpca_cv_best_beta(const bdpca_cv_result* cv);
BDPCA_API size_t bdpca_cv_best_index(const bdpca_cv_result* cv);
BDPCA_API void bdpca_cv_result_free(bdpca_cv_result* cv);

/* ---- perturbation ------------------------------------------------------ */

typedef struct bdpca_tolerance {
  double tau;
  double lambda_tilde_l;
  int order_invariant;
  double perturbed_supremum;
} bdpca_tolerance;

/* spectra: m rows of p eigenvalues, row after row. noise_index is 1-based. */
BDPCA_API int bdpca_perturbation_tolerance(const double* spectra, size_t m, size_t p, size_t r, size_t noise_index,
                                           double d_l, double beta, bdpca_tolerance* out);
BDPCA_API int bdpca_sample_spectra(size_t m, size_t p, size_t r, uint64_t seed, double* out);

/* ---- cluster ----------------------------------------------------------- */

enum { BDPCA_MODE_FIXED = 0, BDPCA_MODE_CV = 1 };

typedef struct bdpca_job {
  uint32_t r;
  uint32_t q;
  int mode;
  double beta;
  double delta;
  int center;
  int weighted;
  uint32_t cv_folds;
  uint64_t cv_seed;
  const double* candidates; /* NULL: {-1, 0, 1} */
  size_t n_candidates;
} bdpca_job;

BDPCA_API void bdpca_job_init(bdpca_job* job);

typedef struct bdpca_round bdpca_round;

/* timeout_ms 0 uses BDPCA_TIMEOUT_SECS or 30 s. */
BDPCA_API int bdpca_run_in_process(const bdpca_shard* const* shards, size_t m, const bdpca_job* job,
                                   uint64_t timeout_ms, bdpca_round** out);

/* Borrowed views, valid until bdpca_round_free. cv is NULL in fixed mode. */
BDPCA_API const bdpca_result* bdpca_round_result(const bdpca_round* round);
BDPCA_API const bdpca_cv_result* bdpca_round_cv(const bdpca_round* round);
BDPCA_API double bdpca_round_beta_used(const bdpca_round* round);
BDPCA_API size_t bdpca_round_contributor_count(const bdpca_round* round);
BDPCA_API uint32_t bdpca_round_contributor_id(const bdpca_round* round, size_t i);
BDPCA_API size_t bdpca_round_frame_bytes(const bdpca_round* round, size_t i);
BDPCA_API size_t bdpca_round_missing_count(const bdpca_round* round);
BDPCA_API void bdpca_round_free(bdpca_round* round);

typedef struct bdpca_server bdpca_server;

/* port 0 picks an ephemeral port; bind_address NULL means 127.0.0.1. */
BDPCA_API int bdpca_server_open(uint16_t port, const char* bind_address, bdpca_server** out);
BDPCA_API uint16_t bdpca_server_port(const bdpca_server* server);
BDPCA_API int bdpca_server_serve(bdpca_server* server, const bdpca_job* job, size_t expected_workers,
                                 uint64_t timeout_ms, bdpca_round** out);
BDPCA_API void bdpca_server_close(bdpca_server* server);

/* frame_bytes (nullable) receives the size of the summary frame sent. */
BDPCA_API int bdpca_worker_run(const char* host, uint16_t port, const bdpca_shard* shard, uint64_t timeout_ms,
                               size_t* frame_bytes);

/* ---- simulation experiments ------------------------------------------- */

enum { BDPCA_DIST_GAUSSIAN = 0, BDPCA_DIST_T3 = 1 };

typedef struct bdpca_experiment {
  size_t p, n, m, r, q;
  int distribution;
  const char* methods;      /* "all", or a list such as "-1,0,cv,fan" */
  const double* candidates; /* NULL: {-1, 0, 1} */
  size_t n_candidates;
  size_t cv_folds;
  int has_cv_seed;
  uint64_t cv_seed;
  double delta;
  size_t replicates;
  size_t k_max;
  uint64_t seed;
  int center;
  int weighted;
  unsigned threads;
} bdpca_experiment;

/* Desk-scale defaults, or the full-scale p = 500 and 100 replicates. */
BDPCA_API void bdpca_experiment_init(bdpca_experiment* spec, int paper_scale);
BDPCA_API int bdpca_parse_distribution(const char* name, int* out);

typedef struct bdpca_experiment_result bdpca_experiment_result;

BDPCA_API int bdpca_experiment_run(const bdpca_experiment* spec, bdpca_experiment_result** out);
/* Main CSV plus summary_frequencies.csv and mean_rho.csv beside it. */
BDPCA_API int bdpca_experiment_write(const bdpca_experiment_result* res, const char* csv_path);
BDPCA_API size_t bdpca_experiment_row_count(const bdpca_experiment_result* res);
BDPCA_API size_t bdpca_experiment_frequency_count(const bdpca_experiment_result* res);
BDPCA_API int bdpca_experiment_frequency(const bdpca_experiment_result* res, size_t i, double* beta, size_t* count);
BDPCA_API size_t bdpca_experiment_mean_count(const bdpca_experiment_result* res);
BDPCA_API int bdpca_experiment_mean(const bdpca_experiment_result* res, size_t i, const char** method, size_t* k,
                                    double* mean_rho);
BDPCA_API void bdpca_experiment_result_free(bdpca_experiment_result* res);

/* Replicate-0 population: shard_<id>.bdpx, truth.csv, eigenvalues.csv. */
BDPCA_API int bdpca_generate(const bdpca_experiment* spec, const char* out_dir);
BDPCA_API int bdpca_emit_plot_script(const char* csv_path, const char* script_path);

#ifdef __cplusplus
}
#endif

#endif /* BDPCA_H */
