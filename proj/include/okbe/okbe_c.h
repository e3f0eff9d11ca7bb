#ifndef OKBE_C_H
#define OKBE_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(OKBE_BUILDING_LIBRARY)
#define OKBE_API __attribute__((visibility("default")))
#else
#define OKBE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes. They match the CLI exit codes. */
enum {
  OKBE_OK = 0,
  OKBE_ERR_INTERNAL = 1,
  OKBE_ERR_CONFIG = 2,
  OKBE_ERR_NONCONVERGENCE = 3,
  OKBE_ERR_VALIDATION = 4
};

enum { OKBE_OPTIONS_AFFORDANCE = 0, OKBE_OPTIONS_STATE_ACTION = 1, OKBE_OPTIONS_EXPLICIT = 2, OKBE_OPTIONS_DEFAULT = -1 };

enum { OKBE_CHANNEL_PRIMITIVE = 0, OKBE_CHANNEL_OPTIONS = 1 };

typedef struct okbe_scenario okbe_scenario;
typedef struct okbe_solution okbe_solution;
typedef struct okbe_plan okbe_plan;

/* Message for the last failed call on the calling thread ("" if none). */
OKBE_API const char* okbe_last_error_message(void);
OKBE_API const char* okbe_version(void);

OKBE_API int okbe_builtin_count(void);
OKBE_API const char* okbe_builtin_name(int i);

OKBE_API int okbe_scenario_builtin(const char* name, okbe_scenario** out);
OKBE_API int okbe_scenario_load(const char* path, okbe_scenario** out);
/* Built-in name or file path. */
OKBE_API int okbe_scenario_open(const char* name_or_path, okbe_scenario** out);
OKBE_API int okbe_scenario_save(const okbe_scenario* s, const char* path);
OKBE_API void okbe_scenario_free(okbe_scenario* s);

typedef struct {
  int grid_rows; /* 0 when the base space is not a grid */
  int grid_cols;
  int num_base_states;
  int num_base_actions;
  int num_modes;
  int num_hl_spaces;
  int plan_depth;
  int option_set;
} okbe_scenario_info;

OKBE_API int okbe_scenario_get_info(const okbe_scenario* s, okbe_scenario_info* out);
OKBE_API const char* okbe_scenario_name(const okbe_scenario* s);
OKBE_API const char* okbe_scenario_doc(const okbe_scenario* s);
OKBE_API const char* okbe_scenario_hl_name(const okbe_scenario* s, int space);
OKBE_API int okbe_scenario_hl_size(const okbe_scenario* s, int space);
/* Writes num_hl_spaces + 1 entries: base state first. */
OKBE_API int okbe_scenario_start(const okbe_scenario* s, int32_t* out, size_t n);
/* Runs the scenario's own expectation list; counts passed and total checks. */
OKBE_API int okbe_scenario_check(const okbe_scenario* s, int* passed, int* total);

typedef struct {
  int horizon;    /* initial event-kernel horizon, doubled as needed */
  double tol;     /* convergence tolerance */
  int max_depth;  /* plan depth; <= 0 uses the scenario's */
  int option_set; /* OKBE_OPTIONS_*; OKBE_OPTIONS_DEFAULT uses the scenario's */
  int prune_sublimation;
  int use_macros;
} okbe_config;

OKBE_API void okbe_config_default(okbe_config* cfg);

/* One option per base goal (explicit goals, or one per affordance site),
   solved in the start state's mode. */
OKBE_API int okbe_solve(const okbe_scenario* s, const okbe_config* cfg, okbe_solution** out);
OKBE_API void okbe_solution_free(okbe_solution* sol);
OKBE_API int okbe_solution_num_goals(const okbe_solution* sol);
OKBE_API const char* okbe_solution_goal_name(const okbe_solution* sol, int goal);
OKBE_API int okbe_solution_num_states(const okbe_solution* sol);
OKBE_API int okbe_solution_kappa(const okbe_solution* sol, int goal, double* out, size_t n);
OKBE_API int okbe_solution_policy(const okbe_solution* sol, int goal, int32_t* out, size_t n);
/* Per start state: total success mass, total failure mass, mean success time. */
OKBE_API int okbe_solution_summary(const okbe_solution* sol, int goal, double* success, double* failure,
                                   double* mean_time, size_t n);
OKBE_API int okbe_solution_sweeps(const okbe_solution* sol, int goal, long* sweeps, double* residual);

OKBE_API int okbe_plan_run(const okbe_scenario* s, const okbe_config* cfg, okbe_plan** out);
OKBE_API void okbe_plan_free(okbe_plan* p);

typedef struct {
  double kappa;
  double failure;
  double alive;
  double expected_time;
  int length;
  uint64_t generated;
  uint64_t expanded;
  uint64_t pruned_options;
  uint64_t pruned_nodes;
  uint64_t infeasible_options;
  uint64_t merged;
  double seconds;
} okbe_plan_summary;

OKBE_API int okbe_plan_get_summary(const okbe_plan* p, okbe_plan_summary* out);
OKBE_API const char* okbe_plan_step_name(const okbe_plan* p, int step);
/* Base-state marginals of the mass that fails during `step` and the mass
   that completes it. */
OKBE_API int okbe_plan_event_maps(const okbe_plan* p, int step, double* success, double* failure, size_t n);

typedef struct {
  double p_goal;
  double p_violation;
  double p_alive;
  double expected_time;
  uint64_t mc_runs;
  double mc_goal;
  double mc_violation;
  double mc_alive;
  /* Largest |MC - exact| over the three outcomes, in binomial standard errors. */
  double mc_max_sigma;
} okbe_verify_result;

/* Executes a named option sequence; with plan == NULL runs the planner first
   and verifies its best plan. samples == 0 skips the Monte Carlo check. */
OKBE_API int okbe_verify(const okbe_scenario* s, const okbe_config* cfg, const char* const* plan, size_t plan_len,
                         uint64_t samples, uint64_t seed, okbe_verify_result* out);

/* Per-base-state n-step empowerment (bits) with the high-level spaces at
   their start values. */
OKBE_API int okbe_empowerment_map(const okbe_scenario* s, const okbe_config* cfg, int channel, int n, double* out,
                                  size_t len);
/* Per-base-state gain when high-level space `space` changes from `before` to
   `after`. */
OKBE_API int okbe_empowerment_gain_map(const okbe_scenario* s, const okbe_config* cfg, int channel, int n, int space,
                                       int32_t before, int32_t after, double* out, size_t len);

#ifdef __cplusplus
}
#endif

#endif
