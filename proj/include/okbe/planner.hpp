#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "okbe/factorization.hpp"

namespace okbe {

// Feasibility of a sublimated task on one high-level space: the task goal
// projected onto that space and the space's own constraint factor.
struct Sublimation {
  int space = -1;
  StateActionTable goal;
  StateActionTable constraint;
  FiResult sol;
  StateActionTable q;  // f1 + f2 * E[kappa] per (state, action)

  double kappa(Index z) const { return sol.kappa[z]; }
};

FiResult sublimate(const KernelPtr& hl_kernel, const StateActionTable& f_goal, const StateActionTable& f_constraint,
                   const FiOptions& fi = {});

// Sublimated task for space k of a scenario: goal 1 wherever the task goal can
// still hold given that component.
Sublimation sublimate_task(const Ctmdp& c, int space, const FiOptions& fi = {});

struct PlanOptions {
  int max_depth = 4;
  bool prune = false;
  int sublimation_space = -1;  // -1: every space with a nontrivial sublimated goal
  std::vector<int> option_subset;  // empty: all options
  size_t max_nodes = 2'000'000;
  bool merge_duplicates = true;
};

struct PlanNode {
  int parent = -1;
  int option = -1;
  int depth = 0;
  std::vector<Atom> alive;
  double success = 0.0;
  double failure = 0.0;
  double success_time = 0.0;  // sum of p * t over success mass
  bool expanded = false;

  double expected_time() const { return success > 0.0 ? success_time / success : 0.0; }
};

struct PlanStats {
  uint64_t generated = 0;  // nodes created, root excluded
  uint64_t expanded = 0;   // nodes whose options were tried
  uint64_t pruned_options = 0;
  uint64_t pruned_nodes = 0;
  uint64_t infeasible_options = 0;
  uint64_t merged = 0;
  double seconds = 0.0;
};

struct PlanResult {
  std::vector<int> plan;
  std::vector<std::string> plan_names;
  double kappa = 0.0;
  double failure = 0.0;
  double alive = 0.0;
  double expected_time = 0.0;
  int best_node = 0;
  std::vector<PlanNode> tree;
  PlanStats stats;
};

PlanResult tree_search(const GoalKernel& g, const std::vector<Index>& start, const PlanOptions& opts);

// Left fold of compose_stoks over a sequence, giving a macro kernel.
Stok abstract_action(const std::vector<const Stok*>& stoks, const TransitionKernel* one_step = nullptr,
                     Index mode = 0);

// Distribution after executing a fixed option sequence from a start vector,
// with the task goal checked after every option.
struct PlanEvaluation {
  double p_goal = 0.0;
  double p_violation = 0.0;
  double p_alive = 0.0;
  double expected_time = 0.0;
  std::vector<double> goal_by_time;
  std::vector<Atom> alive;
};

PlanEvaluation evaluate_plan(const GoalKernel& g, const std::vector<Index>& start, const std::vector<int>& plan);

// Monte Carlo of the primitive product process executing an option sequence.
struct RolloutStats {
  uint64_t runs = 0;
  uint64_t goal = 0;
  uint64_t violation = 0;
  uint64_t alive = 0;
  std::vector<uint64_t> goal_by_time;
};

RolloutStats monte_carlo_plan(const GoalKernel& g, const std::vector<Index>& start, const std::vector<int>& plan,
                              uint64_t runs, uint64_t seed);

// Monte Carlo of chained base-space options (no high-level spaces): option i
// starts where option i-1 reached its goal, or one step later under its
// terminal action when one_step is given. Counts are per (final state, time)
// for success and failure.
struct BaseRollout {
  uint64_t runs = 0;
  std::vector<std::vector<uint64_t>> success;  // [final][time]
  std::vector<std::vector<uint64_t>> failure;
};

BaseRollout monte_carlo_options(const std::vector<const Tmdp*>& tmdps, const std::vector<const FiResult*>& sols,
                                Index start, int max_time, uint64_t runs, uint64_t seed,
                                const TransitionKernel* one_step = nullptr);

}  // namespace okbe
