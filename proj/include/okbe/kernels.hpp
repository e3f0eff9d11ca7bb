#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "okbe/common.hpp"

namespace okbe {

struct Transition {
  Index next;
  double prob;
};

// Row-stochastic kernel P(s' | s, a, m). Rows are stored in compressed form,
// one row per (state, action, mode) triple.
class TransitionKernel {
 public:
  TransitionKernel() = default;

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_modes() const { return num_modes_; }
  size_t num_entries() const { return entries_.size(); }

  std::span<const Transition> row(Index s, Index a, Index m = 0) const {
    size_t r = row_index(s, a, m);
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  double prob(Index s, Index a, Index next, Index m = 0) const;

  bool is_deterministic() const;
  // Destination of a deterministic row; throws if the row is not a unit atom.
  Index successor(Index s, Index a, Index m = 0) const;

  friend class KernelBuilder;

 private:
  size_t row_index(Index s, Index a, Index m) const {
    return (static_cast<size_t>(s) * num_actions_ + a) * num_modes_ + m;
  }
  int num_states_ = 0;
  int num_actions_ = 0;
  int num_modes_ = 1;
  std::vector<size_t> offsets_;
  std::vector<Transition> entries_;
};

using KernelPtr = std::shared_ptr<const TransitionKernel>;

class KernelBuilder {
 public:
  KernelBuilder(int num_states, int num_actions, int num_modes = 1);

  void add(Index s, Index a, Index next, double p, Index m = 0);
  // Same distribution for every mode.
  void add_all_modes(Index s, Index a, Index next, double p);
  void set_row(Index s, Index a, const SparseDist& dist, Index m = 0);

  // Validates nonnegativity and row sums (within kStochasticTol). Rows are
  // never renormalized; a bad row is an error.
  TransitionKernel build() const;
  KernelPtr build_shared() const { return std::make_shared<const TransitionKernel>(build()); }

 private:
  int num_states_, num_actions_, num_modes_;
  std::vector<SparseDist> rows_;
};

// One factor of an affordance function: distribution over the actions of a
// target high-level space, conditioned on the driver state-action and,
// optionally, on the state of one other high-level space.
struct AffordanceFactor {
  int target = 0;
  int given = -1;  // conditioning high-level space, -1 for none
  int given_size = 1;
  int num_driver_states = 0;
  int num_driver_actions = 0;
  std::vector<SparseDist> table;  // indexed ((zg * X) + x) * A + a

  const SparseDist& at(Index zg, Index x, Index a) const {
    return table[(static_cast<size_t>(zg) * num_driver_states + x) * num_driver_actions + a];
  }
  SparseDist& at(Index zg, Index x, Index a) {
    return table[(static_cast<size_t>(zg) * num_driver_states + x) * num_driver_actions + a];
  }
};

AffordanceFactor make_constant_factor(int target, int num_driver_states, int num_driver_actions, Index action,
                                      int given = -1, int given_size = 1);

struct AffordanceFunction {
  int num_driver_states = 0;
  int num_driver_actions = 0;
  std::vector<AffordanceFactor> factors;  // at most one factor per target space
  bool allow_stochastic = false;

  // Validates distributions and, unless allow_stochastic, that every entry is a unit atom.
  void validate(const std::vector<int>& hl_sizes, const std::vector<int>& hl_actions) const;
};

// Deterministic map from a flattened high-level state to a dynamics mode.
struct ModeFunction {
  int num_modes = 1;
  std::vector<Index> map;
};

// Feature functions: (x, a) -> feature set -> high-level action vector.
struct FeaturePair {
  int num_states = 0;
  int num_actions = 0;
  int num_feature_sets = 0;
  std::vector<std::string> feature_set_names;
  std::vector<SparseDist> state_to_features;  // indexed x * A + a, over feature-set ids
  // Per target space: feature set -> distribution over that space's actions.
  std::vector<int> targets;
  std::vector<std::vector<SparseDist>> features_to_actions;  // [target][feature set]
};

AffordanceFunction affordance_from_features(const FeaturePair& fp, bool allow_stochastic = false);

// Product-space layout: driver index varies fastest.
struct ProductLayout {
  std::vector<int> sizes;  // driver first, then driven spaces

  size_t total() const;
  size_t encode(const std::vector<Index>& parts) const;
  std::vector<Index> decode(size_t s) const;
  Index component(size_t s, size_t k) const;
};

struct ComposeOptions {
  size_t max_entries = 10'000'000;
};

// Builds the explicit product-space kernel. With a driver and an affordance
// function, actions are the driver's actions and the driven spaces move under
// the afforded actions; the mode function selects the driver's mode. Without an
// affordance function, actions are the product of all component action sets
// (independent product). Nested calls realize multi-level chains.
TransitionKernel compose_kernels(const std::vector<const TransitionKernel*>& driven, const AffordanceFunction* F,
                                 const ModeFunction* zeta, const TransitionKernel* driver,
                                 const ComposeOptions& opts = {});

// Clamps the action axis to one action and makes the listed states absorbing.
TransitionKernel default_markov_chain(const TransitionKernel& k, Index default_action,
                                      const std::vector<Index>& absorbing, Index mode = 0);

}  // namespace okbe
