#pragma once

#include <vector>

#include "okbe/tmdp.hpp"

namespace okbe {

// State-time option kernel. For each start state, success and failure mass
// over (final state, final time) with times 0..horizon-1, stored sparsely by
// final state.
class Stok {
 public:
  struct Row {
    std::vector<Index> finals;  // sorted
    std::vector<double> plus;   // finals.size() * horizon
    std::vector<double> minus;
  };

  Stok() = default;
  Stok(int num_states, int horizon) : num_states_(num_states), horizon_(horizon), rows_(num_states) {}

  int num_states() const { return num_states_; }
  int horizon() const { return horizon_; }
  const Row& row(Index start) const { return rows_[start]; }
  Row& row(Index start) { return rows_[start]; }

  double success(Index start, Index final_state, int t) const;
  double failure(Index start, Index final_state, int t) const;
  double total_success(Index start) const;
  double total_failure(Index start) const;
  double total(Index start) const { return total_success(start) + total_failure(start); }

  // Adds mass to one entry, creating the final-state column if needed.
  void add(Index start, Index final_state, int t, double plus, double minus);
  // Grows the time axis, keeping existing values.
  void extend_horizon(int new_horizon);
  // Drops trailing all-zero time slices (keeps at least one).
  void trim();

  // Optional terminal action per final state (the policy's action there).
  std::vector<Index> terminal_action;

 private:
  int num_states_ = 0;
  int horizon_ = 0;
  std::vector<Row> rows_;
};

// State option kernel: time marginalized out. Dense per start state.
struct Sok {
  int num_states = 0;
  std::vector<double> plus;   // start * n + final
  std::vector<double> minus;

  double success(Index s, Index f) const { return plus[static_cast<size_t>(s) * num_states + f]; }
  double failure(Index s, Index f) const { return minus[static_cast<size_t>(s) * num_states + f]; }
  double row_total(Index s) const;
};

struct FiOptions {
  int horizon_hint = 64;
  double tol = 1e-12;
  double residual_tol = 1e-12;  // mass allowed beyond the horizon
  long max_sweeps = 0;          // 0: 10 * |X| * horizon
  int max_horizon = 1 << 16;
  bool record_trace = false;
};

struct FiTrace {
  std::vector<double> kappa_change;    // max |kappa_k - kappa_{k-1}| per sweep
  std::vector<double> kappa_decrease;  // max (kappa_{k-1} - kappa_k) per sweep, <= 0 when monotone
  std::vector<double> eta_change;
};

struct FiResult {
  std::vector<double> kappa;
  std::vector<Index> policy;
  std::vector<double> nu;
  Stok eta;
  long sweeps = 0;
  double kappa_residual = 0.0;
  double eta_residual = 0.0;
  double horizon_residual = 0.0;
  FiTrace trace;
};

FiResult feasibility_iteration(const Tmdp& t, const FiOptions& opts = {});

struct OptionObj {
  std::vector<Index> policy;
  StateActionTable termination;  // beta(x, a)
  int goal_index = -1;
  std::vector<double> kappa;
  Stok stok;
};

OptionObj make_option(const FiResult& sol, const Tmdp& t, int goal_index = -1);

double termination_probability(double kappa, double fg, double fc);

// Chains two option kernels: success of the first initiates the second, failure
// of the first passes through. When `one_step` is given, each first-stage
// success at (x1, t1) takes one more step under the first option's terminal
// action before the second option starts at t1 + 1.
Stok compose_stoks(const Stok& first, const Stok& second, const TransitionKernel* one_step = nullptr,
                   Index mode = 0, int max_horizon = 1 << 20);

Sok compose_soks(const Sok& first, const Sok& second);
Sok stok_to_sok(const Stok& s);

struct TrajectoryEvent {
  double plus = 0.0;   // probability the first goal event happens at the last step
  double minus = 0.0;  // probability the first violation happens at the last step
  std::vector<double> plus_by_time;
  std::vector<double> minus_by_time;
};

// Event probabilities along a fixed state-action trajectory.
TrajectoryEvent trajectory_stef(const std::vector<std::pair<Index, Index>>& traj, const Tmdp& t);

// Block-matrix construction of the policy's absorbing chain; eta read off
// powers of the non-terminal block. `feasible` is the third-termination
// indicator per state.
Stok absorbing_chain_stok(const std::vector<Index>& policy, const std::vector<char>& feasible, const Tmdp& t,
                          int horizon);
// kappa = e_i^T (I - P_NN)^{-1} P_N+ 1 for every i.
std::vector<double> absorbing_chain_kappa(const std::vector<Index>& policy, const std::vector<char>& feasible,
                                          const Tmdp& t);

std::vector<char> feasibility_indicator(const std::vector<double>& kappa);

// Largest absolute entrywise difference between two kernels (success and failure).
double max_stok_difference(const Stok& a, const Stok& b);

}  // namespace okbe
