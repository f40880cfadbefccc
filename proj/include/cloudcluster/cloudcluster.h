/* C interface to the cloud-cluster detection library.
 *
 * All functions return cc_status; outputs go through pointers. Handles are
 * opaque and freed with their matching *_free function. On failure,
 * cc_last_error() returns a thread-local description of what went wrong.
 */
#ifndef CLOUDCLUSTER_H
#define CLOUDCLUSTER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cc_status {
    CC_OK = 0,
    CC_ERROR_INVALID_ARGUMENT = 1,
    CC_ERROR_DOMAIN = 2,
    CC_ERROR_CAP_EXCEEDED = 3,
    CC_ERROR_CONFIG = 4,
    CC_ERROR_IO = 5,
    CC_ERROR_INTERNAL = 6,
} cc_status;

typedef enum cc_method {
    CC_METHOD_EXACT = 0,
    CC_METHOD_BENNETT = 1,
} cc_method;

const char* cc_status_name(cc_status status);

/* Message describing the most recent failure on this thread; never NULL. */
const char* cc_last_error(void);

/* ------------------------------------------------------------------ */
/* System assembly                                                     */

typedef struct cc_system cc_system;

/* A new system with the given prior on the event and loss weights.
 * Clusters start empty; add at least one sensor per cluster before use.
 * Thresholds default to 0 (always inside the reachable range). */
cc_status cc_system_create(double p1, double loss_fa, double loss_md, cc_system** out);
void cc_system_free(cc_system* system);

cc_status cc_system_add_cluster(cc_system* system, size_t* out_index);
cc_status cc_system_add_sensor(cc_system* system, size_t cluster, double p_fa, double p_md,
                               double p_com);
cc_status cc_system_set_threshold(cc_system* system, size_t cluster, double gamma);
cc_status cc_system_get_threshold(const cc_system* system, size_t cluster, double* out);
cc_status cc_system_cluster_count(const cc_system* system, size_t* out);
cc_status cc_system_threshold_range(const cc_system* system, size_t cluster, double* l_min,
                                    double* l_max);
cc_status cc_system_fc_threshold(const cc_system* system, double* gamma);

/* ------------------------------------------------------------------ */
/* Detection quantities                                                */

cc_status cc_fusion_weights(double p_fa, double p_md, double* w1, double* w0);
cc_status cc_cluster_com_prob(const cc_system* system, size_t cluster, double* p_com);

/* Error pair of one cluster at its current threshold. cap = 0 keeps the
 * default enumeration cap (20 sensors). */
cc_status cc_cluster_error_probs(const cc_system* system, size_t cluster, cc_method method,
                                 size_t cap, double* p_fa, double* p_md);

/* Error pair of the final fusion-center decision. caps of 0 keep the
 * defaults (20 sensors per cluster, 10 clusters). */
cc_status cc_fc_error_probs(const cc_system* system, cc_method cluster_method,
                            cc_method fc_method, size_t cluster_cap, size_t fc_cap,
                            double* p_fa, double* p_md);

cc_status cc_expected_loss(const cc_system* system, double p_fa, double p_md, double* loss);

/* ------------------------------------------------------------------ */
/* Numerics                                                            */

cc_status cc_lambert_w0(double x, double* w);

/* Improved Bennett tail bound U(n, alpha, M, sigma2); *valid is 0 when the
 * 0 < alpha < n*M window fails and the trivial bound 1 is returned. */
cc_status cc_bennett_u(uint64_t n, double alpha, double m, double sigma2, double* value,
                       int* valid);

/* ------------------------------------------------------------------ */
/* Threshold optimization                                              */

typedef struct cc_opt_result {
    double loss;
    uint64_t sweeps;
    int converged;
} cc_opt_result;

/* Gauss-Seidel coordinate search over all cluster thresholds; methods per
 * the size switch with the given caps (0 = defaults). Updates the system's
 * thresholds in place. */
cc_status cc_optimize_thresholds(cc_system* system, size_t points_per_sensor,
                                 size_t cluster_cap, size_t fc_cap, cc_opt_result* out);

/* Shared-threshold sweep for systems of identical clusters. */
cc_status cc_optimize_equal_threshold(cc_system* system, size_t points_per_sensor,
                                      size_t cluster_cap, size_t fc_cap, cc_opt_result* out);

/* ------------------------------------------------------------------ */
/* Monte Carlo                                                         */

typedef struct cc_sim_result {
    uint64_t trials;
    double p_fa;
    double p_md;
    double loss;
} cc_sim_result;

/* Simulate the full generative process. A fixed seed reproduces results
 * exactly. trace_path, when non-NULL, receives one JSON record per trial. */
cc_status cc_simulate(const cc_system* system, uint64_t trials, uint64_t seed,
                      const char* trace_path, cc_sim_result* out);

/* ------------------------------------------------------------------ */
/* Config-driven experiments                                           */

typedef struct cc_run_options {
    int has_seed;        /* nonzero: use `seed` instead of the config's */
    uint64_t seed;
    size_t cluster_cap;  /* 0 keeps the config value */
    size_t fc_cap;       /* 0 keeps the config value */
    const char* curves;  /* comma-separated names, NULL keeps the config */
    uint64_t mc_trials;  /* nonzero adds a Monte Carlo cross-check column */
} cc_run_options;

/* Run every sweep point and curve of a JSON experiment config and write
 * the CSV. options may be NULL. */
cc_status cc_run_experiment(const char* config_path, const char* csv_path,
                            const cc_run_options* options);

/* Build the homogeneous system of one sweep point of a config (thresholds
 * at 0). sweep_index addresses the swept axis. */
cc_status cc_config_build_system(const char* config_path, size_t sweep_index, cc_system** out);

#ifdef __cplusplus
}
#endif

#endif /* CLOUDCLUSTER_H */
