#ifndef MGILC_H
#define MGILC_H

#include <stddef.h>

#if defined(_WIN32)
#define MGILC_API __declspec(dllexport)
#else
#define MGILC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes of the command line tool. */
typedef enum mgilc_status {
    MGILC_OK = 0,
    MGILC_ERR_USAGE = 1,
    MGILC_ERR_VALIDATION = 2,
    MGILC_ERR_NUMERICAL = 3
} mgilc_status;

typedef struct mgilc_scenario mgilc_scenario;
typedef struct mgilc_trajectory mgilc_trajectory;
typedef struct mgilc_linear mgilc_linear;
typedef struct mgilc_passivity mgilc_passivity;
typedef struct mgilc_table mgilc_table;

/* Last failure on the calling thread. Kind is an error name such as "UnknownScheme". */
MGILC_API const char* mgilc_last_error(void);
MGILC_API const char* mgilc_last_error_kind(void);

MGILC_API const char* mgilc_version(void);
MGILC_API void mgilc_string_free(char* s);

/* Scenarios. Indices are 1-based. */
MGILC_API mgilc_status mgilc_scenario_load(const char* path, mgilc_scenario** out);
MGILC_API mgilc_status mgilc_scenario_from_json(const char* text, mgilc_scenario** out);
MGILC_API void mgilc_scenario_free(mgilc_scenario* s);
MGILC_API mgilc_status mgilc_scenario_clone(const mgilc_scenario* s, mgilc_scenario** out);
MGILC_API mgilc_status mgilc_scenario_resolved_json(const mgilc_scenario* s, char** out);
MGILC_API mgilc_status mgilc_scenario_counts(const mgilc_scenario* s, size_t* mgs, size_t* ilcs, size_t* states);
MGILC_API mgilc_status mgilc_scenario_set_param(mgilc_scenario* s, const char* path, double value);
MGILC_API mgilc_status mgilc_scenario_get_param(const mgilc_scenario* s, const char* path, double* value);
MGILC_API mgilc_status mgilc_scenario_set_scheme(mgilc_scenario* s, const char* tag);
MGILC_API mgilc_status mgilc_scenario_set_t_end(mgilc_scenario* s, double t_end);
MGILC_API mgilc_status mgilc_scenario_add_event(mgilc_scenario* s, double time, size_t mg, double delta_p_load);
MGILC_API mgilc_status mgilc_scenario_clear_events(mgilc_scenario* s);

/* Simulation from the base-load equilibrium through the scheduled events. */
MGILC_API mgilc_status mgilc_simulate(const mgilc_scenario* s, mgilc_trajectory** out);
MGILC_API void mgilc_trajectory_free(mgilc_trajectory* t);
MGILC_API mgilc_status mgilc_trajectory_size(const mgilc_trajectory* t, size_t* samples, size_t* dim);
MGILC_API int mgilc_trajectory_truncated(const mgilc_trajectory* t);
MGILC_API const char* mgilc_trajectory_truncation_reason(const mgilc_trajectory* t);
MGILC_API mgilc_status mgilc_trajectory_time(const mgilc_trajectory* t, size_t k, double* value);
MGILC_API mgilc_status mgilc_trajectory_final_omega(const mgilc_trajectory* t, size_t mg, double* value);
MGILC_API mgilc_status mgilc_trajectory_final_vdc(const mgilc_trajectory* t, size_t ilc, double* value);
MGILC_API mgilc_status mgilc_trajectory_write_csv(const mgilc_trajectory* t, const char* path);
/* Per-MG frequency deviation against time. */
MGILC_API mgilc_status mgilc_trajectory_write_svg(const mgilc_trajectory* t, const char* path);

/* Linearizations at the base-load equilibrium. port: 0 grid-following ports, 1 native ports. */
MGILC_API mgilc_status mgilc_linearize_ilc(const mgilc_scenario* s, size_t ilc, int port, mgilc_linear** out);
MGILC_API mgilc_status mgilc_linearize_closed_loop(const mgilc_scenario* s, mgilc_linear** out);
MGILC_API void mgilc_linear_free(mgilc_linear* l);
MGILC_API mgilc_status mgilc_linear_dims(const mgilc_linear* l, size_t* states, size_t* inputs, size_t* outputs);
/* which is one of 'A', 'B', 'C', 'D'; row-major copy into buf of len entries. */
MGILC_API mgilc_status mgilc_linear_matrix(const mgilc_linear* l, char which, double* buf, size_t len);
MGILC_API mgilc_status mgilc_linear_abscissa(const mgilc_linear* l, double* value);
MGILC_API mgilc_status mgilc_linear_json(const mgilc_linear* l, char** out);

/* Passivity sweep of ILC ilc over points log-spaced frequencies on [w_lo, w_hi] rad/s. */
MGILC_API mgilc_status mgilc_passivity_sweep(const mgilc_scenario* s, size_t ilc, int port, size_t points, double w_lo,
                                             double w_hi, mgilc_passivity** out);
MGILC_API void mgilc_passivity_free(mgilc_passivity* p);
/* "passive", "marginal" or "non-passive". */
MGILC_API const char* mgilc_passivity_verdict(const mgilc_passivity* p);
MGILC_API mgilc_status mgilc_passivity_worst(const mgilc_passivity* p, double* omega, double* min_eig);
MGILC_API int mgilc_passivity_negative_tail(const mgilc_passivity* p);
MGILC_API mgilc_status mgilc_passivity_write_csv(const mgilc_passivity* p, const char* path);
MGILC_API mgilc_status mgilc_passivity_write_svg(const mgilc_passivity* p, const char* path);

typedef enum mgilc_stability { MGILC_STABLE = 0, MGILC_UNSTABLE = 1, MGILC_INDETERMINATE = 2 } mgilc_stability;

MGILC_API mgilc_status mgilc_classify(const mgilc_scenario* s, mgilc_stability* verdict, double* abscissa);

typedef struct mgilc_boundary {
    int beyond_range; /* 1 when the whole interval is stable */
    double boundary;
    double stable_end;
    double unstable_end;
    int probes;
} mgilc_boundary;

/* min_stable: 1 when stable above the boundary, 0 when stable below it. */
MGILC_API mgilc_status mgilc_bisect(const mgilc_scenario* s, const char* param, double lower, double upper,
                                    int min_stable, double tolerance, int log_scale, size_t workers,
                                    mgilc_boundary* out);

/* All scheme by column boundary cells. cache_dir may be NULL. */
MGILC_API mgilc_status mgilc_table3(const mgilc_scenario* s, const char* cache_dir, size_t workers, mgilc_table** out);
MGILC_API void mgilc_table_free(mgilc_table* t);
MGILC_API mgilc_status mgilc_table_write_csv(const mgilc_table* t, const char* path);
MGILC_API mgilc_status mgilc_table_text(const mgilc_table* t, char** out);

#ifdef __cplusplus
}
#endif

#endif
