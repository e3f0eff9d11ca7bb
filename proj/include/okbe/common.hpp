#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace okbe {

using Index = std::int32_t;

// Error categories double as process exit codes for the CLI.
enum class ErrorCode : int {
  Ok = 0,
  Internal = 1,
  Config = 2,
  NonConvergence = 3,
  Validation = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

// Tolerance used when validating that a distribution sums to one.
inline constexpr double kStochasticTol = 1e-12;

// Sparse distribution over a discrete index set.
using SparseDist = std::vector<std::pair<Index, double>>;

// Table over (state, action) pairs, row-major in state.
struct StateActionTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> values;

  StateActionTable() = default;
  StateActionTable(int s, int a, double fill) : num_states(s), num_actions(a), values(static_cast<size_t>(s) * a, fill) {}

  double operator()(Index s, Index a) const { return values[static_cast<size_t>(s) * num_actions + a]; }
  double& at(Index s, Index a) { return values[static_cast<size_t>(s) * num_actions + a]; }
  bool same_shape(const StateActionTable& o) const { return num_states == o.num_states && num_actions == o.num_actions; }
};

}  // namespace okbe
