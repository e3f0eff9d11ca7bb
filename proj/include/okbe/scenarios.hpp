#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "okbe/planner.hpp"

namespace okbe {

struct MacroSpec {
  std::string name;
  std::vector<std::string> sequence;
};

// Machine-checkable property attached to a scenario.
//   base_kappa:       kappa of `option` at base cell `cell` in `mode`, in [lo, hi]
//   plan:             tree search from the start; kappa in [lo, hi] and, when
//                     length >= 0, plan length == length
//   sublimated_kappa: sublimated kappa of `space` at `value`, in [lo, hi]
//   sum_to_one:       every option solved from every region has unit mass
struct Expectation {
  std::string kind;
  std::string option;
  std::string space;
  Index cell = 0;
  Index mode = 0;
  Index value = 0;
  int depth = 0;
  bool prune = false;
  bool macros = true;
  int length = -1;
  double lo = 0.0;
  double hi = 1.0;
};

struct ExpectationResult {
  std::string description;
  bool pass = false;
  double observed = 0.0;
};

struct Scenario {
  std::string name;
  std::string doc;
  Ctmdp c;
  std::optional<FeaturePair> features;
  OptionSetKind option_set = OptionSetKind::Affordance;
  std::vector<MacroSpec> macros;
  int plan_depth = 4;
  std::vector<Expectation> expects;
};

std::vector<std::string> builtin_names();
Scenario build_builtin(const std::string& name);

Scenario build_two_goal_grid();
Scenario build_honey_badger();
Scenario build_temperature();
// task 1: three precedence-linked bits; task 2: dead-end bits with feature
// remapping (`remapped` switches to the remapped feature map).
Scenario build_logic_precedence(int task = 1, bool remapped = false);
Scenario build_money_laps();

// Goal kernel over the scenario's option set plus its macros.
std::shared_ptr<GoalKernel> make_goal_kernel(const Scenario& s, bool with_macros = true, const FiOptions& fi = {});
std::shared_ptr<GoalKernel> make_goal_kernel(const Scenario& s, OptionSetKind kind, bool with_macros,
                                             const FiOptions& fi = {});

std::vector<ExpectationResult> check_expectations(const Scenario& s);

// Deterministic or noisy grid kernel. Actions 0..3 move up/down/left/right;
// with `stay` an extra action 4 stays in place deterministically. The
// intended move happens with probability p_intended; the rest is split evenly
// across the other three moves. Blocked cells (per mode) cannot be entered.
KernelPtr grid_kernel(int rows, int cols, double p_intended, bool stay,
                      const std::vector<std::vector<char>>& blocked_by_mode);

// JSON scenario files (schema version 1, described in README.md).
std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

bool scenarios_equal(const Scenario& a, const Scenario& b, std::string* why = nullptr);

}  // namespace okbe
