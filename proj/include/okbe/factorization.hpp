#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "okbe/okbe.hpp"

namespace okbe {

// A set of base state-actions sharing one high-level action vector, under one
// dynamics mode. Non-default regions are single affordance sites.
struct Region {
  int id = 0;
  std::vector<Index> alpha;  // default high-level action per space (sites: output at z = 0)
  Index mode = 0;
  bool is_default = true;
  std::vector<char> members;  // over x * A + a
};

std::vector<Region> identify_regions(const Ctmdp& c);

// State-prediction kernel: rho(z_f | z, t) for t = 0..max_t, dense.
struct Spk {
  int num_states = 0;
  int max_t = 0;
  std::vector<std::vector<double>> by_time;  // [t][z * n + z_f]

  double operator()(Index z, Index zf, int t) const {
    return by_time[t][static_cast<size_t>(z) * num_states + zf];
  }
};

// Powers of a single-action chain (use default_markov_chain to build it).
Spk spk(const TransitionKernel& chain, int max_t);

// High-level first-event functions for one space under one region's default
// action. f3 = (1 - f_g) f_c f_l per state.
struct HlEvent {
  int num_states = 0;
  int max_t = 0;
  std::vector<std::vector<double>> stef;  // [t][z * n + z_f]
  std::vector<std::vector<double>> alive;  // no event before t, at z_f at t: [t][z * n + z_f]
  std::vector<std::vector<double>> cef;   // [t][z]

  double complement_cef(Index z, int t) const { return t < 0 ? 1.0 : 1.0 - cef[t][z]; }
};

HlEvent hl_event_functions(const TransitionKernel& chain, const std::vector<double>& f_goal,
                           const std::vector<double>& f_constraint, const std::vector<double>& f_region, int max_t);

// Base-space counterpart of the complement CEF: probability no event (success,
// violation, infeasibility) has happened through step t.
std::vector<double> base_complement_cef(const Stok& eta, Index x);

// TEF: xi(t) = kbar(t-1) - kbar(t) for a product of complement CEFs.
std::vector<double> time_of_first_event(const std::vector<std::vector<double>>& complement_cefs);

struct Atom {
  size_t state;  // product-space index (base fastest)
  int time;
  double prob;
};

// Product-space option kernel for one start vector: first-event mass over
// (state vector, time). Without `terminal_check`, success atoms are the base
// goal events before the high-level constraints of the terminal action apply.
struct ProductStok {
  std::vector<Atom> success;
  std::vector<Atom> failure;
  bool fast_path = false;  // no high-level events were possible
  double total() const;
};

enum class OptionSetKind { Affordance, StateAction, Explicit };

struct OptionSpec {
  std::string name;
  StateActionTable goal;        // base-space goal table (empty for macros)
  std::vector<int> sequence;    // non-empty for macro options
  bool is_macro() const { return !sequence.empty(); }
};

// Base-space option solved for one (mode, region, goal).
struct BaseOption {
  Index mode = 0;
  int region = -1;
  int option = -1;
  Tmdp tmdp;
  FiResult sol;
};

// Outcome of one goal-kernel application from a single start vector, with
// times relative to initiation.
struct Outcome {
  std::vector<Atom> next;     // after the one-step boundary update (time t_f + 1)
  std::vector<Atom> failure;  // tagged with the state at the event time
  double initiation_kappa = 0.0;
};

class GoalKernel {
 public:
  GoalKernel(std::shared_ptr<const Ctmdp> c, OptionSetKind kind, const FiOptions& fi = {});

  const Ctmdp& ctmdp() const { return *c_; }
  std::shared_ptr<const Ctmdp> ctmdp_ptr() const { return c_; }
  const std::vector<OptionSpec>& options() const { return options_; }
  const std::vector<Region>& regions() const { return regions_; }
  int find_option(const std::string& name) const;

  int add_macro(const std::string& name, const std::vector<int>& sequence);

  // Region index used by options initiated at base state x (-1: none).
  int region_of_cell(Index x, Index mode) const;

  const BaseOption& base_option(Index mode, int region, int option) const;
  const Outcome& apply(size_t s, int option) const;

  // Exact product-space STOK for a base option started at `parts`.
  ProductStok product_stok(const BaseOption& bo, const std::vector<Index>& parts, bool allow_fast_path = true,
                           bool terminal_check = false) const;

  // Full distribution after applying an option to a weighted set of atoms.
  void apply_to(const std::vector<Atom>& atoms, int option, std::vector<Atom>& next, std::vector<Atom>& failure) const;

  size_t cache_size() const;

 private:
  Outcome compute(size_t s, int option) const;

  std::shared_ptr<const Ctmdp> c_;
  ProductLayout layout_;
  FiOptions fi_;
  std::vector<OptionSpec> options_;
  std::vector<Region> regions_;
  std::vector<int> cell_region_;  // [mode * X + x]
  mutable std::mutex mu_;
  mutable std::map<std::tuple<Index, int, int>, std::unique_ptr<BaseOption>> base_cache_;
  mutable std::map<std::pair<size_t, int>, std::unique_ptr<Outcome>> outcome_cache_;
};

// Per-goal solutions for every goal derived from the affordance function (or
// the explicit base goals), each with the other goals added as constraints.
struct Ensemble {
  std::vector<GoalFunction> goals;
  std::vector<Tmdp> tmdps;
  std::vector<FiResult> solutions;
  std::vector<OptionObj> options;
};

Ensemble ensemble_solve(const Ctmdp& c, Index mode = 0, const FiOptions& fi = {}, bool from_affordance = true);

std::vector<OptionSpec> option_sets(const Ctmdp& c, OptionSetKind kind, size_t max_options = 100000);

// Explicit product-space TMDP (small instances only): kernel via compose_kernels,
// goal f_g(s, a) from `base_goal` lifted, constraint = full product of factors.
Tmdp product_tmdp(const Ctmdp& c, const StateActionTable& base_goal, bool restrict_to_region = false,
                  int region = -1, const std::vector<Region>* regions = nullptr);

// Product-space TMDP whose goal is the task predicate.
Tmdp product_task_tmdp(const Ctmdp& c);

}  // namespace okbe
