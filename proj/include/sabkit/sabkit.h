/*
 * Copyright 2026 The sabkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of the sabkit shared library.
 *
 * Every function returns a sabkit_status. On failure a message is available
 * from sabkit_last_error() on the calling thread until the next call on that
 * thread. Objects are opaque handles created by the library and released
 * with the matching *_free function (which accepts NULL). Times are in hours
 * and rates per hour unless stated otherwise.
 */

#ifndef SABKIT_SABKIT_H
#define SABKIT_SABKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(SABKIT_BUILDING_LIBRARY)
#define SABKIT_API __declspec(dllexport)
#else
#define SABKIT_API __declspec(dllimport)
#endif
#else
#define SABKIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sabkit_status {
    SABKIT_OK = 0,
    SABKIT_ERR_INVALID = 1,          /* bad argument, malformed input */
    SABKIT_ERR_NONIDENTIFIABLE = 2,  /* a parameter cannot be estimated */
    SABKIT_ERR_IO = 3,
    SABKIT_ERR_NUMERIC = 4,
    SABKIT_ERR_INTERNAL = 5
} sabkit_status;

SABKIT_API const char* sabkit_last_error(void);
SABKIT_API const char* sabkit_version(void);

/* ------------------------------------------------------------------------ */
/* Observations                                                             */
/* ------------------------------------------------------------------------ */

typedef struct sabkit_dataset sabkit_dataset;

/* Reads the observation CSV (header u_hours,y,delta,pi). Each u value is
 * multiplied by hours_per_unit. */
SABKIT_API sabkit_status sabkit_dataset_read_csv(const char* path, double hours_per_unit,
                                                 sabkit_dataset** out);
SABKIT_API sabkit_status sabkit_dataset_write_csv(const sabkit_dataset* data, const char* path);
SABKIT_API sabkit_status sabkit_dataset_size(const sabkit_dataset* data, size_t* out);
/* Number of records whose abandonment indicator is missing. */
SABKIT_API sabkit_status sabkit_dataset_uncertain(const sabkit_dataset* data, size_t* out);
SABKIT_API void sabkit_dataset_free(sabkit_dataset* data);

/* i.i.d. complete data: T ~ exp(theta), W ~ exp(gamma), Y ~ Bernoulli(q). */
SABKIT_API sabkit_status sabkit_sample_iid(double theta, double gamma, double q, size_t n_records,
                                           uint64_t seed, sabkit_dataset** out);

/* Masks complete data: every silent abandonment and, with probability p_ss,
 * every served record loses its abandonment indicator. */
SABKIT_API sabkit_status sabkit_mask(const sabkit_dataset* complete, double p_ss, uint64_t seed,
                                     sabkit_dataset** out);

/* ------------------------------------------------------------------------ */
/* Estimation                                                               */
/* ------------------------------------------------------------------------ */

typedef enum sabkit_method {
    SABKIT_METHOD_EM = 0,
    SABKIT_METHOD_M1 = 1, /* right-censored MLE */
    SABKIT_METHOD_M2 = 2  /* left- and right-censored MLE */
} sabkit_method;

typedef enum sabkit_m0_policy {
    SABKIT_M0_SERVICE = 0,
    SABKIT_M0_KAB = 1,      /* method 1 only */
    SABKIT_M0_SAB = 2,      /* method 2 only */
    SABKIT_M0_THRESHOLD = 3 /* method 2 only: pi >= threshold is silent */
} sabkit_m0_policy;

typedef enum sabkit_init {
    SABKIT_INIT_ALL_SAB = 0,
    SABKIT_INIT_ALL_SR = 1,
    SABKIT_INIT_FIFTY_FIFTY = 2,
    SABKIT_INIT_FROM_PI = 3,
    SABKIT_INIT_RANDOM = 4
} sabkit_init;

typedef struct sabkit_fit_options {
    sabkit_method method;
    sabkit_m0_policy m0_policy;
    double pi_threshold;
    sabkit_init init;
    double epsilon;
    size_t max_iters;
    uint64_t seed; /* random initialization */
} sabkit_fit_options;

typedef struct sabkit_fit_result {
    double theta;
    double q;
    double gamma;
    size_t iterations;
    int converged;
    double loglik; /* observed-data log-likelihood in (theta, gamma) */
} sabkit_fit_result;

SABKIT_API void sabkit_fit_options_default(sabkit_fit_options* options);
SABKIT_API sabkit_status sabkit_estimate(const sabkit_dataset* data,
                                         const sabkit_fit_options* options,
                                         sabkit_fit_result* out);

/* Formats "method,theta,q,gamma,iterations,converged,loglik" into buf
 * (NUL-terminated). *needed receives the full length without the NUL. */
SABKIT_API sabkit_status sabkit_format_fit_row(const char* method, const sabkit_fit_result* fit,
                                               char* buf, size_t size, size_t* needed);

/* ------------------------------------------------------------------------ */
/* Simulation                                                               */
/* ------------------------------------------------------------------------ */

typedef struct sabkit_sim_config {
    double lambda;
    double theta;
    double q;
    size_t n_slots;
    double mu_sr;
    double mu_sab; /* INFINITY: phantom customers release their slot at once */
    double horizon;
    double warmup;
    uint64_t seed;
} sabkit_sim_config;

typedef struct sabkit_perf {
    double p_wait;
    double p_ab;
    double e_queue;
    double e_wait;
    double e_wait_served;
    double e_queue_true;
} sabkit_perf;

typedef enum sabkit_extract_mode {
    SABKIT_EXTRACT_COMPLETE = 0,
    SABKIT_EXTRACT_MASKED = 1,       /* uses p_ss and seed */
    SABKIT_EXTRACT_BY_INDICATION = 2 /* served without indication lose delta */
} sabkit_extract_mode;

typedef struct sabkit_simulation sabkit_simulation;

SABKIT_API void sabkit_sim_config_default(sabkit_sim_config* config);
/* Reads a scenario file (flat key = value). replications may be NULL; a NULL
 * p_ss is allowed, otherwise it receives the mask probability or NAN when
 * the file asks for masking by indication. */
SABKIT_API sabkit_status sabkit_sim_config_read(const char* path, sabkit_sim_config* config,
                                                size_t* replications, double* p_ss);

SABKIT_API sabkit_status sabkit_simulate(const sabkit_sim_config* config,
                                         sabkit_simulation** out);
SABKIT_API sabkit_status sabkit_simulation_perf(const sabkit_simulation* sim, sabkit_perf* out);
SABKIT_API sabkit_status sabkit_simulation_size(const sabkit_simulation* sim, size_t* out);
SABKIT_API sabkit_status sabkit_simulation_write_records(const sabkit_simulation* sim,
                                                         const char* path);
SABKIT_API sabkit_status sabkit_simulation_observations(const sabkit_simulation* sim,
                                                        sabkit_extract_mode mode, double p_ss,
                                                        uint64_t seed, sabkit_dataset** out);
SABKIT_API void sabkit_simulation_free(sabkit_simulation* sim);

/* Appends one PerfMeasures row (header written when the file is new or
 * append is 0). */
SABKIT_API sabkit_status sabkit_write_perf_csv(const char* path, size_t replication,
                                               const sabkit_perf* perf, int append);

/* ------------------------------------------------------------------------ */
/* Analytics                                                                */
/* ------------------------------------------------------------------------ */

SABKIT_API sabkit_status sabkit_erlang_a(double lambda, double mu, double theta, size_t n_slots,
                                         sabkit_perf* out);

typedef struct sabkit_effort_segment {
    double share;
    double los; /* minutes */
    double work_fraction;
    int is_sab;
} sabkit_effort_segment;

SABKIT_API sabkit_status sabkit_effort(const sabkit_effort_segment* segments, size_t count,
                                       double* out);
SABKIT_API sabkit_status sabkit_scope_report(double p_kab, double p_m0, double pi_bar,
                                             double* p_ab_total, double* sab_share);
SABKIT_API sabkit_status sabkit_q_from_proportions(double p_c2, double p_m0,
                                                   double p_c3_given_m0, double* out);

/* ------------------------------------------------------------------------ */
/* Experiments                                                              */
/* ------------------------------------------------------------------------ */

typedef enum sabkit_experiment_kind {
    SABKIT_EXPERIMENT_ACCURACY = 0,
    SABKIT_EXPERIMENT_SENSITIVITY = 1,
    SABKIT_EXPERIMENT_ROBUSTNESS = 2,
    SABKIT_EXPERIMENT_QUEUEFIT = 3,
    SABKIT_EXPERIMENT_SCENARIO = 4
} sabkit_experiment_kind;

typedef struct sabkit_grid_point {
    double theta;
    double q;
    double gamma;
} sabkit_grid_point;

typedef struct sabkit_experiment_spec {
    sabkit_experiment_kind kind;
    size_t replications; /* scenario: 0 takes the count from the config */
    size_t sample_size;
    size_t partitions;
    size_t restarts;
    size_t threads; /* 0: hardware concurrency */
    uint64_t seed;
    double p_ss;           /* NAN: 1 - q (or the config's mask for scenario) */
    double hours_per_unit; /* unit of the u column in input_path */
    double segment_hours;  /* queuefit */
    const char* output_dir;
    const char* input_path;
    const char* config_path;
    const sabkit_grid_point* grid; /* NULL: the kind's default grid */
    size_t grid_size;
} sabkit_experiment_spec;

SABKIT_API sabkit_status sabkit_experiment_spec_default(sabkit_experiment_kind kind,
                                                        sabkit_experiment_spec* spec);
/* Runs the experiment and writes its CSV artifacts into output_dir. */
SABKIT_API sabkit_status sabkit_run_experiment(const sabkit_experiment_spec* spec);

#ifdef __cplusplus
}
#endif

#endif /* SABKIT_SABKIT_H */
