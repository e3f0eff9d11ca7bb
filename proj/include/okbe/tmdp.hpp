#pragma once

#include <map>
#include <string>
#include <vector>

#include "okbe/kernels.hpp"

namespace okbe {

// f_g(x, a): probability the goal is satisfied by taking a in x.
struct GoalFunction {
  StateActionTable table;
  std::string name;
};

// f_c(x, a): the constraint is violated with probability 1 - f_c(x, a).
struct ConstraintFunction {
  StateActionTable table;
};

// 1 - prod_k (1 - f_k)
StateActionTable combine_separable_goals(const std::vector<StateActionTable>& factors);
// prod_k f_k
StateActionTable combine_separable_constraints(const std::vector<StateActionTable>& factors);

struct Tmdp {
  KernelPtr kernel;
  Index mode = 0;
  GoalFunction goal;
  ConstraintFunction constraint;

  int num_states() const { return kernel->num_states(); }
  int num_actions() const { return kernel->num_actions(); }
  void validate() const;
};

double achievement(const Tmdp& t, Index x, Index a);   // f_g * f_c
double continuation(const Tmdp& t, Index x, Index a);  // (1 - f_g) * f_c

// A high-level space: its kernel P(z' | z, alpha), the actions regarded as
// default (region-inducing), and its constraint factor f_c(z, alpha).
struct HlSpace {
  std::string name;
  KernelPtr kernel;
  std::vector<Index> default_actions;
  StateActionTable constraint;
  std::vector<std::string> state_labels;
  std::vector<std::string> action_labels;

  bool is_default(Index alpha) const;
};

// Conjunction of per-space membership tests over a state vector. Component 0
// is the base space, components 1..K the high-level spaces.
struct StatePredicate {
  struct Clause {
    int component = 0;
    std::vector<Index> values;
  };
  std::vector<Clause> clauses;

  bool empty() const { return clauses.empty(); }
  bool holds(const std::vector<Index>& parts) const;
};

struct Ctmdp {
  std::string name;
  std::string base_name = "grid";
  KernelPtr base;  // P_x(x' | x, a, e)
  int grid_rows = 0, grid_cols = 0;
  std::vector<std::string> base_action_labels;
  StateActionTable base_constraint;  // f_c,x
  std::vector<HlSpace> hl;
  AffordanceFunction F;  // may have no factors when hl is empty
  ModeFunction zeta;     // over the flattened high-level product
  std::vector<GoalFunction> base_goals;  // explicit goals on the base space
  StatePredicate task_goal;
  StatePredicate task_forbidden;  // states where the task counts as violated
  std::vector<Index> start;       // [x, z_1, ..., z_K]
  std::map<std::pair<Index, Index>, std::string> site_names;

  int num_hl() const { return static_cast<int>(hl.size()); }
  ProductLayout layout() const;
  ProductLayout hl_layout() const;
  size_t hl_flat(const std::vector<Index>& parts) const;  // parts includes the base component
  Index mode_of(const std::vector<Index>& parts) const;

  // Distribution over high-level action vectors for (x, z, a).
  std::vector<std::pair<std::vector<Index>, double>> afford(const std::vector<Index>& parts, Index a) const;
  bool is_site(Index x, Index a) const;  // some high-level state yields a non-default action
  std::vector<std::pair<Index, Index>> sites() const;

  // Product of all constraint factors for (s, a) under the afforded actions.
  double product_constraint(const std::vector<Index>& parts, Index a) const;
  // Task-level achievement at a state vector: goal predicate times the best
  // one-step constraint value and the forbidden-set indicator.
  double task_achievement(const std::vector<Index>& parts) const;
  double task_constraint(const std::vector<Index>& parts) const;

  void validate() const;
};

// One goal function per non-default affordance site (x, a).
std::vector<GoalFunction> goal_functions_from_affordance(const Ctmdp& c);

// Zeroes the constraint on the support of every goal other than goals[keep].
ConstraintFunction constraint_with_other_goals(const ConstraintFunction& base, const std::vector<GoalFunction>& goals,
                                               size_t keep);

// Checks that every (x, a) outside region_members and not in the goal support
// carries f_c = 0. Returns a description of the first violation, or empty.
std::string check_homogeneity(const ConstraintFunction& c, const GoalFunction& goal,
                              const std::vector<char>& region_members);

}  // namespace okbe
