#include <random>

#include "okbe/planner.hpp"

namespace okbe {

namespace {

template <typename Rng>
Index sample(std::span<const Transition> row, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng), acc = 0.0;
  for (const auto& tr : row) {
    acc += tr.prob;
    if (r < acc) return tr.next;
  }
  return row.back().next;
}

void expand_macros(const GoalKernel& g, int o, std::vector<int>& out) {
  const auto& spec = g.options()[o];
  if (!spec.is_macro()) {
    out.push_back(o);
    return;
  }
  for (int s : spec.sequence) expand_macros(g, s, out);
}

constexpr long kStepCap = 1'000'000;

}  // namespace

RolloutStats monte_carlo_plan(const GoalKernel& g, const std::vector<Index>& start, const std::vector<int>& plan,
                              uint64_t runs, uint64_t seed) {
  const Ctmdp& c = g.ctmdp();
  const size_t K = c.hl.size();
  std::vector<int> flat;
  for (int o : plan) expand_macros(g, o, flat);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RolloutStats st;
  st.runs = runs;
  auto record_goal = [&](long t) {
    ++st.goal;
    if (st.goal_by_time.size() <= static_cast<size_t>(t)) st.goal_by_time.resize(t + 1, 0);
    ++st.goal_by_time[t];
  };
  for (uint64_t run = 0; run < runs; ++run) {
    std::vector<Index> s = start;
    long t = 0;
    enum { Alive, Goal, Violation } status = Alive;
    auto task_check = [&]() {
      if (!c.task_forbidden.empty() && c.task_forbidden.holds(s)) {
        status = Violation;
      } else if (!c.task_goal.empty() && c.task_goal.holds(s)) {
        status = u(rng) < c.task_constraint(s) ? Goal : Violation;
      }
    };
    task_check();
    for (size_t i = 0; i < flat.size() && status == Alive; ++i) {
      Index e = c.mode_of(s);
      int region = g.region_of_cell(s[0], e);
      if (region < 0) {
        status = Violation;
        break;
      }
      const BaseOption& bo = g.base_option(e, region, flat[i]);
      bool done = false;
      for (long steps = 0; !done && status == Alive; ++steps) {
        if (steps > kStepCap) break;
        Index x = s[0];
        if (bo.sol.kappa[x] <= 0.0) {
          status = Violation;
          break;
        }
        Index a = bo.sol.policy[x];
        // Sample the afforded high-level actions.
        auto dist = c.afford(s, a);
        double r = u(rng), acc = 0.0;
        const std::vector<Index>* alpha = &dist.back().first;
        for (const auto& [v, p] : dist) {
          acc += p;
          if (r < acc) {
            alpha = &v;
            break;
          }
        }
        double fc = bo.tmdp.constraint.table(x, a);
        for (size_t k = 0; k < K; ++k) fc *= c.hl[k].constraint(s[k + 1], (*alpha)[k]);
        double fg = bo.tmdp.goal.table(x, a);
        double v = u(rng);
        if (v >= fc) {
          status = Violation;
          break;
        }
        done = v < fg * fc;
        Index mode = c.mode_of(s);
        std::vector<Index> nxt = s;
        nxt[0] = sample(c.base->row(x, a, mode), rng);
        for (size_t k = 0; k < K; ++k) nxt[k + 1] = sample(c.hl[k].kernel->row(s[k + 1], (*alpha)[k]), rng);
        s.swap(nxt);
        ++t;
      }
      if (status == Alive && done) task_check();
      else if (status == Alive) break;  // step cap reached
    }
    if (status == Goal) record_goal(t);
    else if (status == Violation) ++st.violation;
    else ++st.alive;
  }
  return st;
}

BaseRollout monte_carlo_options(const std::vector<const Tmdp*>& tmdps, const std::vector<const FiResult*>& sols,
                                Index start, int max_time, uint64_t runs, uint64_t seed,
                                const TransitionKernel* one_step) {
  require(!tmdps.empty() && tmdps.size() == sols.size(), ErrorCode::Config, "mismatched option lists");
  const int n = tmdps[0]->num_states();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BaseRollout out;
  out.runs = runs;
  out.success.assign(n, std::vector<uint64_t>(max_time, 0));
  out.failure.assign(n, std::vector<uint64_t>(max_time, 0));
  for (uint64_t run = 0; run < runs; ++run) {
    Index x = start;
    int t = 0;
    size_t i = 0;
    while (t < max_time) {
      const Tmdp& tm = *tmdps[i];
      const FiResult& sol = *sols[i];
      if (sol.kappa[x] <= 0.0) {
        ++out.failure[x][t];
        break;
      }
      Index a = sol.policy[x];
      double fg = tm.goal.table(x, a), fc = tm.constraint.table(x, a);
      double v = u(rng);
      if (v < fg * fc) {
        if (++i == tmdps.size()) {
          ++out.success[x][t];
          break;
        }
        if (one_step) {
          // Take the finishing action, then hand over at the next time.
          x = sample(one_step->row(x, a, tm.mode), rng);
          ++t;
        }
        continue;
      }
      if (v >= fc) {
        ++out.failure[x][t];
        break;
      }
      x = sample(tm.kernel->row(x, a, tm.mode), rng);
      ++t;
    }
  }
  return out;
}

}  // namespace okbe
