#pragma once

#include <vector>

#include "okbe/okbe.hpp"

namespace okbe {

// First-exit shortest-path solution on a deterministic kernel. Unreachable
// states carry an explicit tag instead of a numeric cost.
struct FeSolution {
  std::vector<double> value;      // meaningful only where reachable
  std::vector<char> reachable;
  std::vector<Index> policy;      // lowest-index argmin; 0 where unreachable or at the goal
  double cost = 1.0;
  Index goal = 0;
};

FeSolution solve_first_exit(const TransitionKernel& k, Index goal, double cost, Index mode = 0);

struct FeStok {
  Stok stok;
  std::vector<double> kappa;
  std::vector<Index> policy;
};

// Unit success atom at (goal, v / c) where reachable; unit failure atom at
// (x, 0) elsewhere.
FeStok fe_to_stok(const FeSolution& sol, int horizon = 0);

// Hitting distribution of a fixed policy into rewarded (success) and
// penalized (failure) states via powers of the nonterminal block. Mass still
// in nonterminal states after the horizon is reported per start state.
struct MakeshiftStok {
  Stok stok;
  std::vector<double> residual;
};

MakeshiftStok makeshift_stok(const std::vector<Index>& policy, const TransitionKernel& k,
                             const std::vector<Index>& rewarded, const std::vector<Index>& penalized, int horizon,
                             Index mode = 0);

// v(x) = sum over events of eta(x_f, t | x) gamma^t r(x_f), success and failure alike.
std::vector<double> value_from_stok(const Stok& s, const std::vector<double>& reward, double gamma);

}  // namespace okbe
