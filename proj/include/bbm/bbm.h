/* C interface to the bbm library. All functions return a bbm_status; on failure the message is
 * available from bbm_last_error() on the calling thread until the next call on that thread.
 * Strings handed out by the library are released with bbm_string_free. */
#ifndef BBM_BBM_H
#define BBM_BBM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define BBM_API __declspec(dllexport)
#else
#  define BBM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bbm_status {
    BBM_OK = 0,
    BBM_ERR_POPULATION_CAP = 1,
    BBM_ERR_NOT_A_CHECKPOINT = 2,
    BBM_ERR_UNKNOWN_LABEL = 3,
    BBM_ERR_NOT_ALIVE = 4,
    BBM_ERR_OUT_OF_RANGE = 5,
    BBM_ERR_INSUFFICIENT_SAMPLES = 6,
    BBM_ERR_QUADRATURE = 7,
    BBM_ERR_UNKNOWN_STATISTIC = 8,
    BBM_ERR_INSUFFICIENT_POINTS = 9,
    BBM_ERR_DEGENERATE_WEIGHTS = 10,
    BBM_ERR_CONFIG = 11,
    BBM_ERR_IO = 12,
    BBM_ERR_INVALID_ARGUMENT = 98,
    BBM_ERR_INTERNAL = 99
} bbm_status;

typedef struct bbm_snapshot bbm_snapshot;

typedef struct bbm_fit {
    double slope;
    double intercept;
    double slope_std_error;
    double r_squared;
    size_t points_used;
} bbm_fit;

BBM_API const char* bbm_version(void);
BBM_API const char* bbm_last_error(void);
BBM_API void bbm_string_free(char* s);

/* Snapshots */
BBM_API bbm_status bbm_snapshot_simulate(double horizon, const double* checkpoints, size_t count,
                                         uint64_t seed, size_t population_cap, bbm_snapshot** out);
BBM_API void bbm_snapshot_free(bbm_snapshot* s);
BBM_API bbm_status bbm_snapshot_node_count(const bbm_snapshot* s, size_t* out);
BBM_API bbm_status bbm_snapshot_alive_count(const bbm_snapshot* s, double time, size_t* out);
/* Writes min(capacity, alive) positions; *written receives the alive count. */
BBM_API bbm_status bbm_snapshot_positions(const bbm_snapshot* s, double time, double* buffer,
                                          size_t capacity, size_t* written);
BBM_API bbm_status bbm_snapshot_save(const bbm_snapshot* s, const char* path, int as_json);
BBM_API bbm_status bbm_snapshot_load(const char* path, bbm_snapshot** out);

/* log W_t(beta) */
BBM_API bbm_status bbm_additive_martingale_log(const bbm_snapshot* s, double beta, double t,
                                               double* out);
/* nu_{beta,t}([a,1]); route 0 = pairwise, 1 = aggregated */
BBM_API bbm_status bbm_overlap_tail(const bbm_snapshot* s, double beta, double a, double t,
                                    int route, double* out);

/* Theory */
BBM_API bbm_status bbm_psi_typ(double beta, double* out);
BBM_API bbm_status bbm_psi_mean(double beta, double* out);
BBM_API bbm_status bbm_exact_mean_overlap_beta0(double a, double t, double rel_tol, double* out);

/* Experiments. Summaries are JSON documents; *all_pass is 1 when every verdict passed. */
BBM_API bbm_status bbm_run_experiment_json(const char* config_json, char** summary_out,
                                           int* all_pass);
BBM_API bbm_status bbm_run_experiment_file(const char* config_path, char** summary_out,
                                           int* all_pass);
/* Newline-separated suite names. */
BBM_API bbm_status bbm_suite_names(char** out);
BBM_API bbm_status bbm_run_suite(const char* name, char** report_out, int* pass);

/* Fits */
BBM_API bbm_status bbm_fit_exponent(const double* t, const double* log_estimate, const double* se,
                                    size_t count, bbm_fit* out);
BBM_API bbm_status bbm_fit_estimates_csv(const char* path, bbm_fit* out);

#ifdef __cplusplus
}
#endif

#endif
