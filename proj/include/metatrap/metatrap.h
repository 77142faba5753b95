#ifndef METATRAP_H
#define METATRAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(METATRAP_BUILDING_LIBRARY)
#define MT_API __attribute__((visibility("default")))
#else
#define MT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mt_chain mt_chain;

typedef enum mt_status {
  MT_OK = 0,
  MT_INVALID_ARGUMENT,
  MT_INVALID_CHAIN,
  MT_PARSE_ERROR,
  MT_SINGULAR_SYSTEM,
  MT_ZERO_MASS_STATE,
  MT_ZERO_MASS,
  MT_NON_INTEGER_TIME,
  MT_EMPTY_COMPLEMENT,
  MT_EMPTY_SET,
  MT_DIMENSION_MISMATCH,
  MT_EXTINCT_MASS,
  MT_ZERO_CONDITIONING,
  MT_NON_CONVERGENCE,
  MT_DISCONNECTED_TRAP,
  MT_NOT_BIRTH_DEATH,
  MT_INTERNAL_BOUND_VIOLATION,
  MT_BOUND_VIOLATION,
  MT_NOT_APPLICABLE,
  MT_LUMPING_VIOLATION,
  MT_TOO_LARGE,
  MT_ALL_CENSORED,
  MT_EMPTY_SAMPLE,
  MT_INTERNAL_ERROR
} mt_status;

/* Message of the last failed call on this thread ("" if none). */
MT_API const char *mt_last_error(void);
MT_API const char *mt_status_name(mt_status status);

/* Strings and arrays returned through out-parameters are owned by the caller. */
MT_API void mt_string_free(char *s);
MT_API void mt_doubles_free(double *v);
MT_API void mt_indices_free(size_t *v);

/* Chains */
MT_API mt_status mt_chain_from_json(const char *text, mt_chain **out);
MT_API mt_status mt_chain_load(const char *path, mt_chain **out);
MT_API mt_status mt_model_build(const char *name, size_t n, mt_chain **out);
MT_API mt_status mt_model_default_target(const char *name, size_t n, size_t **states, size_t *count);
MT_API void mt_chain_free(mt_chain *chain);
MT_API size_t mt_chain_state_count(const mt_chain *chain);
MT_API int mt_chain_is_continuous(const mt_chain *chain);
MT_API mt_status mt_chain_to_json(const mt_chain *chain, char **json);
/* Label of state i; the pointer lives as long as the chain. */
MT_API const char *mt_chain_label(const mt_chain *chain, size_t i);

/* Grids: start, ..., stop with `per_decade` geometric points per decade. */
MT_API mt_status mt_geometric_grid(double start, double stop, int per_decade, double **times, size_t *count);

/* Measures. Output arrays have mt_chain_state_count entries. */
MT_API mt_status mt_stationary(const mt_chain *chain, double *pi);
MT_API mt_status mt_evolve(const mt_chain *chain, const double *start, double t, double *out);
MT_API mt_status mt_qsd(const mt_chain *chain, const size_t *G, size_t g_count, double *measure, double *T_star,
                        double *decay_rate);
MT_API mt_status mt_empirical(const mt_chain *chain, size_t x, const size_t *G, size_t g_count, double *measure);
MT_API mt_status mt_mean_hitting_time(const mt_chain *chain, size_t x, const size_t *G, size_t g_count,
                                      double *mean);
/* CSV "state_label,weight". */
MT_API mt_status mt_measure_csv(const mt_chain *chain, const double *weights, char **csv);
/* CSV "t,d,d_bar". */
MT_API mt_status mt_d_profile_csv(const mt_chain *chain, const double *times, size_t count, char **csv);

/* Hitting times. CSV "t,survival,exp_reference,deviation" against e^{-t/T_ref}. */
MT_API mt_status mt_survival_csv(const mt_chain *chain, const double *start, const size_t *G, size_t g_count,
                                 const double *times, size_t count, double T_ref, char **csv);

/* Certification. On MT_NOT_APPLICABLE the JSON still holds the measured f, d, r. */
MT_API mt_status mt_certify_json(const mt_chain *chain, const size_t *G, size_t g_count, double R, double alpha,
                                 char **json);
/* Exponentiality report: CSV "start,t,survival,exp,weighted_deviation" and a JSON summary.
   An empty grid (count = 0) selects 2R .. 20 T* with 64 points per decade. */
MT_API mt_status mt_report(const mt_chain *chain, const size_t *G, size_t g_count, double R, double alpha,
                           const double *times, size_t count, double C, char **csv, char **summary_json);

/* Monte Carlo. max_time <= 0 picks the default cutoff; threads = 0 uses all cores. */
MT_API mt_status mt_simulate_csv(const mt_chain *chain, const double *start, const size_t *G, size_t g_count,
                                 uint64_t seed, size_t n_trajectories, double max_time, unsigned threads,
                                 char **csv);
/* CSV "state_label,frequency,standard_error". */
MT_API mt_status mt_occupation_csv(const mt_chain *chain, size_t x, const size_t *G, size_t g_count, uint64_t seed,
                                   size_t n_trajectories, double max_time, unsigned threads, char **csv);

/* Shuffle lumping check for n cards (3 <= n <= 8). */
MT_API mt_status mt_lump_check_json(size_t n, char **json);

#ifdef __cplusplus
}
#endif

#endif
