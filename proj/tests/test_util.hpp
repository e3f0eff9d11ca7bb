#pragma once

// Random instance generators and brute-force oracles shared by the unit tests
// and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "okbe/bridge.hpp"
#include "okbe/scenarios.hpp"

namespace okbe::testutil {

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random TMDP. Each row is deterministic with probability p_det, otherwise it
// spreads over two or three random successors. A few goal states and a mix of
// hard, soft and absent constraints.
inline Tmdp random_tmdp(std::mt19937_64& rng, int n, int A, double p_det) {
  KernelBuilder kb(n, A);
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < A; ++a) {
      if (uniform_real(rng, 0, 1) < p_det) {
        kb.add(s, a, uniform_int(rng, 0, n - 1), 1.0);
        continue;
      }
      int k = uniform_int(rng, 2, 3);
      std::vector<double> w(k);
      double tot = 0.0;
      for (auto& v : w) tot += (v = uniform_real(rng, 0.1, 1.0));
      std::map<Index, double> row;
      for (int j = 0; j < k; ++j) row[uniform_int(rng, 0, n - 1)] += w[j] / tot;
      SparseDist d(row.begin(), row.end());
      double sum = 0.0;
      for (auto& [i, p] : d) sum += p;
      d.back().second += 1.0 - sum;
      kb.set_row(s, a, d);
    }
  Tmdp t;
  t.kernel = kb.build_shared();
  t.goal.table = StateActionTable(n, A, 0.0);
  t.constraint.table = StateActionTable(n, A, 1.0);
  int goals = std::max(1, n / 20);
  for (int g = 0; g < goals; ++g) {
    Index s = uniform_int(rng, 0, n - 1);
    double v = uniform_real(rng, 0, 1) < 0.5 ? 1.0 : uniform_real(rng, 0.3, 1.0);
    for (Index a = 0; a < A; ++a) t.goal.table.at(s, a) = v;
  }
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < A; ++a) {
      double u = uniform_real(rng, 0, 1);
      if (u < 0.05)
        t.constraint.table.at(s, a) = 0.0;
      else if (u < 0.25)
        t.constraint.table.at(s, a) = uniform_real(rng, 0.8, 1.0);
    }
  return t;
}

// Largest gap between the iteration's event kernel and the block-matrix
// kernel of the same policy and feasibility indicator.
inline double oracle_stok_error(const Tmdp& t, const FiResult& r) {
  auto oracle = absorbing_chain_stok(r.policy, feasibility_indicator(r.kappa), t, r.eta.horizon());
  return max_stok_difference(r.eta, oracle);
}

struct Maze {
  KernelPtr kernel;
  Index goal = 0;
  int rows = 0, cols = 0;
};

// Deterministic grid with random walls (cells that cannot be entered).
inline Maze random_maze(std::mt19937_64& rng, int rows, int cols, double wall_frac) {
  Maze m;
  m.rows = rows;
  m.cols = cols;
  std::vector<char> walls(static_cast<size_t>(rows) * cols, 0);
  for (auto& w : walls) w = uniform_real(rng, 0, 1) < wall_frac;
  m.goal = uniform_int(rng, 0, rows * cols - 1);
  walls[m.goal] = 0;
  m.kernel = grid_kernel(rows, cols, 1.0, true, {walls});
  return m;
}

inline Tmdp maze_tmdp(const Maze& m) {
  Tmdp t;
  t.kernel = m.kernel;
  const int n = m.kernel->num_states(), A = m.kernel->num_actions();
  t.goal.table = StateActionTable(n, A, 0.0);
  for (Index a = 0; a < A; ++a) t.goal.table.at(m.goal, a) = 1.0;
  t.constraint.table = StateActionTable(n, A, 1.0);
  return t;
}

inline HlSpace hl_space(const std::string& name, KernelPtr k, std::vector<Index> defaults) {
  HlSpace h;
  h.name = name;
  h.default_actions = std::move(defaults);
  h.constraint = StateActionTable(k->num_states(), k->num_actions(), 1.0);
  for (Index z = 0; z < k->num_states(); ++z) h.state_labels.push_back(std::to_string(z));
  for (Index a = 0; a < k->num_actions(); ++a) h.action_labels.push_back("a" + std::to_string(a));
  h.kernel = std::move(k);
  return h;
}

// Action 0 keeps the bits, action b + 1 sets bit b.
inline KernelPtr bits_kernel(int bits) {
  const int n = 1 << bits;
  KernelBuilder kb(n, 1 + bits);
  for (Index v = 0; v < n; ++v) {
    kb.add(v, 0, v, 1.0);
    for (int b = 0; b < bits; ++b) kb.add(v, b + 1, v | (1 << b), 1.0);
  }
  return kb.build_shared();
}

// Action 0 drains one level (with probability `drain` when stochastic),
// action 1 refills to the top.
inline KernelPtr level_kernel(int n, double drain) {
  KernelBuilder kb(n, 2);
  for (Index z = 0; z < n; ++z) {
    Index down = std::max(0, z - 1);
    if (drain >= 1.0 || down == z) {
      kb.add(z, 0, down, 1.0);
    } else {
      kb.add(z, 0, down, drain);
      kb.add(z, 0, z, 1.0 - drain);
    }
    kb.add(z, 1, n - 1, 1.0);
  }
  return kb.build_shared();
}

// Makes (cell, action) a site that emits `alpha` on space `k`.
inline void add_site(Ctmdp& c, int k, Index cell, Index action, Index alpha) {
  c.F.factors[k].at(0, cell, action) = {{alpha, 1.0}};
}

inline void init_affordances(Ctmdp& c) {
  const int X = c.base->num_states(), A = c.base->num_actions();
  c.F.num_driver_states = X;
  c.F.num_driver_actions = A;
  c.F.factors.clear();
  for (int k = 0; k < c.num_hl(); ++k) c.F.factors.push_back(make_constant_factor(k, X, A, c.hl[k].default_actions[0]));
}

// 4x4 noisy grid with a 5-level hydration space: the level drains by one per
// step, hitting zero under the draining action violates the task, and a water
// cell refills. The task is to reach the far corner.
inline Ctmdp hydration_instance() {
  Ctmdp c;
  c.name = "hydration_4x4";
  c.grid_rows = c.grid_cols = 4;
  c.base = grid_kernel(4, 4, 0.85, true, {});
  const int X = 16, A = 5;
  c.base_constraint = StateActionTable(X, A, 1.0);
  for (Index a = 0; a < A; ++a) c.base_constraint.at(9, a) = 0.9;
  HlSpace h = hl_space("hydration", level_kernel(5, 1.0), {0});
  h.constraint.at(0, 0) = 0.0;
  c.hl.push_back(std::move(h));
  init_affordances(c);
  add_site(c, 0, 6, 4, 1);
  c.task_goal.clauses.push_back({0, {15}});
  c.start = {0, 4};
  c.validate();
  return c;
}

// 3x3 deterministic grid with three static bits set at three sites. Bits 1
// and 2 may only be set after bit 0.
inline Ctmdp static_logic_instance() {
  Ctmdp c;
  c.name = "logic_3x3";
  c.grid_rows = c.grid_cols = 3;
  c.base = grid_kernel(3, 3, 1.0, true, {});
  const int X = 9, A = 5;
  c.base_constraint = StateActionTable(X, A, 1.0);
  HlSpace h = hl_space("bits", bits_kernel(3), {0});
  for (Index z = 0; z < 8; ++z)
    if (!(z & 1)) h.constraint.at(z, 2) = h.constraint.at(z, 3) = 0.0;
  c.hl.push_back(std::move(h));
  init_affordances(c);
  add_site(c, 0, 2, 4, 1);
  add_site(c, 0, 6, 4, 2);
  add_site(c, 0, 8, 4, 3);
  c.task_goal.clauses.push_back({1, {7}});
  c.start = {0, 0};
  c.validate();
  return c;
}

struct RandomCtmdpOptions {
  bool deterministic = true;
  bool level_space = false;  // add a draining level space (not static)
  bool allow_modes = true;   // a door that opens once bit 0 is set
  bool base_target = false;  // the task also asks for a base cell
  int max_bits = 2;
  int max_rows = 3;
  int max_cols = 3;
};

inline Ctmdp random_ctmdp(std::mt19937_64& rng, const RandomCtmdpOptions& o) {
  Ctmdp c;
  c.name = "random";
  const int rows = uniform_int(rng, 2, o.max_rows), cols = uniform_int(rng, 2, o.max_cols);
  const int X = rows * cols, A = 5;
  c.grid_rows = rows;
  c.grid_cols = cols;
  const int bits = uniform_int(rng, 1, o.max_bits);
  const int sites_needed = bits + (o.level_space ? 1 : 0);
  std::vector<Index> cells(X);
  for (Index x = 0; x < X; ++x) cells[x] = x;
  std::shuffle(cells.begin(), cells.end(), rng);
  size_t next = 0;
  std::vector<Index> site_cells;
  for (int i = 0; i < sites_needed && next < cells.size(); ++i) site_cells.push_back(cells[next++]);
  bool modes = o.allow_modes && next < cells.size() && uniform_int(rng, 0, 1) == 1;
  Index door = modes ? cells[next++] : -1;
  if (static_cast<int>(site_cells.size()) < sites_needed) {
    // Too small for distinct sites: fall back to a single bit without extras.
    return random_ctmdp(rng, o);
  }
  double p = o.deterministic ? 1.0 : uniform_real(rng, 0.7, 0.95);
  if (modes) {
    std::vector<char> closed(X, 0), open(X, 0);
    closed[door] = 1;
    c.base = grid_kernel(rows, cols, p, true, {closed, open});
  } else {
    c.base = grid_kernel(rows, cols, p, true, {});
  }
  c.base_constraint = StateActionTable(X, A, 1.0);
  int hazards = uniform_int(rng, 0, 1);
  for (int i = 0; i < hazards && next < cells.size(); ++i) {
    Index hz = cells[next++];
    double v = o.deterministic ? 0.0 : uniform_real(rng, 0.5, 0.95);
    for (Index a = 0; a < A; ++a) c.base_constraint.at(hz, a) = v;
  }

  HlSpace hb = hl_space("bits", bits_kernel(bits), {0});
  for (int b = 1; b < bits; ++b)
    if (uniform_int(rng, 0, 1))
      for (Index z = 0; z < (1 << bits); ++z)
        if (!(z >> (b - 1) & 1)) hb.constraint.at(z, b + 1) = 0.0;
  c.hl.push_back(std::move(hb));
  int levels = 0;
  if (o.level_space) {
    levels = uniform_int(rng, 3, 5);
    double drain = o.deterministic ? 1.0 : uniform_real(rng, 0.5, 1.0);
    HlSpace hl = hl_space("level", level_kernel(levels, drain), {0});
    hl.constraint.at(0, 0) = 0.0;
    c.hl.push_back(std::move(hl));
  }
  init_affordances(c);
  for (int b = 0; b < bits; ++b) add_site(c, 0, site_cells[b], 4, b + 1);
  if (o.level_space) add_site(c, 1, site_cells[bits], 4, 1);
  if (modes) {
    auto hl = c.hl_layout();
    c.zeta.num_modes = 2;
    c.zeta.map.resize(hl.total());
    for (size_t f = 0; f < hl.total(); ++f) c.zeta.map[f] = hl.decode(f)[0] & 1;
  }
  c.task_goal.clauses.push_back({1, {(1 << bits) - 1}});
  Index start = cells[uniform_int(rng, 0, X - 1)];
  if (o.base_target) c.task_goal.clauses.push_back({0, {cells[uniform_int(rng, 0, X - 1)]}});
  c.start = {start, 0};
  if (o.level_space) c.start.push_back(levels - 1);
  c.validate();
  return c;
}

struct FactorizationCheck {
  double worst = 0.0;
  size_t compared = 0;
  size_t slow_path = 0;
};

inline void merge_atoms(std::map<std::pair<size_t, int>, double>& m, const std::vector<Atom>& atoms, double sign) {
  for (const auto& a : atoms) m[{a.state, a.time}] += sign * a.prob;
}

// Compares the factorized product kernel of every listed option, from every
// default region and every product start vector in that region's mode,
// against the absorbing chain of the lifted policy on the explicit product
// TMDP (goal lifted, constraint restricted to the region). Both the fast and
// the general path are checked when the fast path applies.
inline FactorizationCheck check_factorization(const GoalKernel& g, const std::vector<int>& options) {
  const Ctmdp& c = g.ctmdp();
  auto layout = c.layout();
  const size_t S = layout.total();
  const int X = c.base->num_states();
  FactorizationCheck out;
  for (const auto& reg : g.regions()) {
    if (!reg.is_default) continue;
    for (int o : options) {
      const auto& bo = g.base_option(reg.mode, reg.id, o);
      Tmdp prod = product_tmdp(c, bo.tmdp.goal.table, true, reg.id, &g.regions());
      std::vector<Index> policy(S);
      std::vector<char> feasible(S);
      for (size_t s = 0; s < S; ++s) {
        Index x = static_cast<Index>(s % X);
        policy[s] = bo.sol.policy[x];
        feasible[s] = bo.sol.kappa[x] > 0.0;
      }
      Stok oracle = absorbing_chain_stok(policy, feasible, prod, bo.sol.eta.horizon());
      for (size_t s = 0; s < S; ++s) {
        auto parts = layout.decode(s);
        if (c.mode_of(parts) != reg.mode) continue;
        std::map<std::pair<size_t, int>, double> want_s, want_f;
        const auto& row = oracle.row(static_cast<Index>(s));
        const int T = oracle.horizon();
        for (size_t j = 0; j < row.finals.size(); ++j)
          for (int t = 0; t < T; ++t) {
            if (row.plus[j * T + t] != 0.0) want_s[{static_cast<size_t>(row.finals[j]), t}] += row.plus[j * T + t];
            if (row.minus[j * T + t] != 0.0) want_f[{static_cast<size_t>(row.finals[j]), t}] += row.minus[j * T + t];
          }
        for (bool fast : {true, false}) {
          ProductStok ps = g.product_stok(bo, parts, fast, true);
          if (fast && !ps.fast_path) continue;
          if (!ps.fast_path) ++out.slow_path;
          auto ds = want_s, df = want_f;
          merge_atoms(ds, ps.success, -1.0);
          merge_atoms(df, ps.failure, -1.0);
          for (auto& [k, v] : ds) out.worst = std::max(out.worst, std::abs(v));
          for (auto& [k, v] : df) out.worst = std::max(out.worst, std::abs(v));
          ++out.compared;
        }
      }
    }
  }
  return out;
}

// Every affordance option plus an evenly spaced sample of at most `extra`
// other options of the goal kernel.
inline std::vector<int> sample_options(const GoalKernel& g, size_t extra) {
  std::vector<int> out;
  const auto& opts = g.options();
  size_t step = std::max<size_t>(1, opts.size() / std::max<size_t>(1, extra));
  for (size_t i = 0; i < opts.size(); i += step)
    if (!opts[i].is_macro()) out.push_back(static_cast<int>(i));
  return out;
}

// Brute-force task feasibility at the start vector.
inline double brute_force_task_kappa(const Ctmdp& c, const FiOptions& fi = {}) {
  Tmdp t = product_task_tmdp(c);
  auto r = feasibility_iteration(t, fi);
  return r.kappa[c.layout().encode(c.start)];
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace okbe::testutil
