#pragma once

#include <string>
#include <vector>

#include "okbe/factorization.hpp"

namespace okbe {

// Discrete memoryless channel, one sparse row per input.
struct Channel {
  int num_outputs = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<std::string> input_labels;

  int num_inputs() const { return static_cast<int>(rows.size()); }
  void validate() const;
};

struct EmpowermentResult {
  double capacity = 0.0;  // bits
  std::vector<double> input_dist;
  int iterations = 0;
  double gap = 0.0;  // upper bound minus achieved mutual information
  std::vector<double> trace;  // mutual information per iteration
};

Channel channel_from_dense(const std::vector<std::vector<double>>& rows);

// All |A|^n action sequences from `start`; outputs are base states.
Channel build_channel_primitive(const TransitionKernel& k, Index start, int n, Index mode = 0,
                                size_t max_rows = 1'000'000);

// All |O|^n option sequences through the goal kernel; outputs are
// (state vector, time) atoms, with failure atoms kept as separate outputs.
Channel build_channel_options(const GoalKernel& g, const std::vector<Index>& start, int n,
                              size_t max_rows = 1'000'000, bool prune_infeasible = false);

EmpowermentResult channel_capacity(const Channel& c, double tol = 1e-9, int max_iters = 10'000);

double option_empowerment(const GoalKernel& g, const std::vector<Index>& s, int n);

double empowerment_gain(const GoalKernel& g, const std::vector<Index>& before, const std::vector<Index>& after,
                        int n);

// Expected empowerment gain at plan termination over the plan kernel's
// outcomes (success and failure atoms alike, each at its own state). Returns
// the index of the best plan; ties go to the lower index.
int valence_plan_selection(const GoalKernel& g, const std::vector<Index>& start,
                           const std::vector<std::vector<int>>& plans, int n, std::vector<double>* valences = nullptr);

}  // namespace okbe
