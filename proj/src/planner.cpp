#include "okbe/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <deque>
#include <map>
#include <unordered_set>

namespace okbe {

FiResult sublimate(const KernelPtr& hl_kernel, const StateActionTable& f_goal, const StateActionTable& f_constraint,
                   const FiOptions& fi) {
  Tmdp t;
  t.kernel = hl_kernel;
  t.goal.table = f_goal;
  t.goal.name = "sublimated";
  t.constraint.table = f_constraint;
  return feasibility_iteration(t, fi);
}

Sublimation sublimate_task(const Ctmdp& c, int space, const FiOptions& fi) {
  require(space >= 0 && space < c.num_hl(), ErrorCode::Config, "sublimation space out of range");
  const auto& h = c.hl[space];
  const int n = h.kernel->num_states(), A = h.kernel->num_actions();
  Sublimation s;
  s.space = space;
  s.goal = StateActionTable(n, A, 1.0);
  for (const auto& cl : c.task_goal.clauses) {
    if (cl.component != space + 1) continue;
    for (Index z = 0; z < n; ++z) {
      bool in = std::find(cl.values.begin(), cl.values.end(), z) != cl.values.end();
      if (!in)
        for (Index a = 0; a < A; ++a) s.goal.at(z, a) = 0.0;
    }
  }
  s.constraint = h.constraint;
  s.sol = sublimate(h.kernel, s.goal, s.constraint, fi);
  s.q = StateActionTable(n, A, 0.0);
  for (Index z = 0; z < n; ++z)
    for (Index a = 0; a < A; ++a) {
      double fg = s.goal(z, a), fc = s.constraint(z, a);
      double ek = 0.0;
      for (const auto& tr : h.kernel->row(z, a)) ek += tr.prob * s.sol.kappa[tr.next];
      s.q.at(z, a) = fg * fc + (1.0 - fg) * fc * ek;
    }
  return s;
}

namespace {

struct Child {
  std::vector<Atom> alive;
  double success = 0.0, failure = 0.0, success_time = 0.0;
  std::vector<double> goal_by_time;
};

// Applies one option to the alive atoms, then checks the task at every atom
// that reached the option's boundary.
Child step(const GoalKernel& g, const std::vector<Atom>& alive, int option, bool track_time = false) {
  const Ctmdp& c = g.ctmdp();
  auto layout = c.layout();
  std::vector<Atom> next, fail;
  g.apply_to(alive, option, next, fail);
  Child ch;
  for (const auto& f : fail) ch.failure += f.prob;
  auto credit = [&](int t, double p) {
    ch.success += p;
    ch.success_time += p * t;
    if (track_time) {
      if (ch.goal_by_time.size() <= static_cast<size_t>(t)) ch.goal_by_time.resize(t + 1, 0.0);
      ch.goal_by_time[t] += p;
    }
  };
  for (const auto& a : next) {
    auto parts = layout.decode(a.state);
    if (!c.task_forbidden.empty() && c.task_forbidden.holds(parts)) {
      ch.failure += a.prob;
      continue;
    }
    if (!c.task_goal.empty() && c.task_goal.holds(parts)) {
      double ok = c.task_constraint(parts);
      if (ok > 0.0) credit(a.time, a.prob * ok);
      ch.failure += a.prob * (1.0 - ok);
      continue;
    }
    ch.alive.push_back(a);
  }
  return ch;
}

std::string node_key(int depth, const std::vector<Atom>& alive, double success, double failure) {
  std::string k(sizeof(int) + 2 * sizeof(double) + alive.size() * (sizeof(size_t) + sizeof(int) + sizeof(double)),
                '\0');
  char* p = k.data();
  auto put = [&](const void* v, size_t n) {
    std::memcpy(p, v, n);
    p += n;
  };
  put(&depth, sizeof depth);
  put(&success, sizeof success);
  put(&failure, sizeof failure);
  for (const auto& a : alive) {
    put(&a.state, sizeof a.state);
    put(&a.time, sizeof a.time);
    put(&a.prob, sizeof a.prob);
  }
  return k;
}

bool static_under_defaults(const HlSpace& h) {
  for (Index d : h.default_actions)
    for (Index z = 0; z < h.kernel->num_states(); ++z) {
      auto row = h.kernel->row(z, d);
      if (row.size() != 1 || row[0].next != z) return false;
    }
  return true;
}

}  // namespace

PlanResult tree_search(const GoalKernel& g, const std::vector<Index>& start, const PlanOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  const Ctmdp& c = g.ctmdp();
  auto layout = c.layout();
  require(start.size() == layout.sizes.size(), ErrorCode::Config, "start vector has the wrong length");
  require(opts.max_depth >= 0, ErrorCode::Config, "negative depth limit");

  std::vector<int> option_ids = opts.option_subset;
  if (option_ids.empty())
    for (size_t i = 0; i < g.options().size(); ++i) option_ids.push_back(static_cast<int>(i));
  for (int o : option_ids)
    require(o >= 0 && o < static_cast<int>(g.options().size()), ErrorCode::Config, "option index out of range");

  std::vector<Sublimation> subs;
  std::vector<char> sub_static;
  if (opts.prune) {
    for (int k = 0; k < c.num_hl(); ++k) {
      if (opts.sublimation_space >= 0 && k != opts.sublimation_space) continue;
      bool constrained = false;
      for (const auto& cl : c.task_goal.clauses) constrained |= cl.component == k + 1;
      if (!constrained) continue;
      subs.push_back(sublimate_task(c, k));
      sub_static.push_back(static_under_defaults(c.hl[k]));
    }
  }

  PlanResult res;
  PlanNode root;
  size_t s0 = layout.encode(start);
  if (!c.task_forbidden.empty() && c.task_forbidden.holds(start)) {
    root.failure = 1.0;
  } else if (!c.task_goal.empty() && c.task_goal.holds(start)) {
    root.success = c.task_constraint(start);
    root.failure = 1.0 - root.success;
  } else {
    root.alive.push_back({s0, 0, 1.0});
  }
  res.tree.push_back(root);

  // Terminal base tuples for each option (first component for macros).
  auto terminal_tuples = [&](int o) {
    const OptionSpec* spec = &g.options()[o];
    while (spec->is_macro()) spec = &g.options()[spec->sequence.front()];
    std::vector<std::pair<Index, Index>> out;
    for (Index x = 0; x < spec->goal.num_states; ++x)
      for (Index a = 0; a < spec->goal.num_actions; ++a)
        if (spec->goal(x, a) > 0.0) out.emplace_back(x, a);
    return out;
  };
  std::vector<std::vector<std::pair<Index, Index>>> tuples(g.options().size());
  for (int o : option_ids) tuples[o] = terminal_tuples(o);

  auto node_sublimated_zero = [&](const PlanNode& n) {
    for (const auto& s : subs) {
      bool all_zero = true;
      for (const auto& at : n.alive)
        if (s.kappa(layout.component(at.state, s.space + 1)) > 0.0) all_zero = false;
      if (all_zero) return true;
    }
    return false;
  };
  auto option_sublimated_zero = [&](const PlanNode& n, int o) {
    for (size_t i = 0; i < subs.size(); ++i) {
      if (!sub_static[i]) continue;
      const auto& s = subs[i];
      bool all_zero = true;
      for (const auto& at : n.alive) {
        auto parts = layout.decode(at.state);
        Index z = parts[s.space + 1];
        for (const auto& [xg, ag] : tuples[o]) {
          auto p2 = parts;
          p2[0] = xg;
          for (const auto& [alpha, p] : c.afford(p2, ag))
            if (p > 0.0 && s.q(z, alpha[s.space]) > 0.0) all_zero = false;
        }
        if (!all_zero) break;
      }
      if (all_zero) return true;
    }
    return false;
  };

  std::unordered_set<std::string> seen;
  std::deque<int> queue{0};
  while (!queue.empty()) {
    int id = queue.front();
    queue.pop_front();
    if (res.tree[id].alive.empty() || res.tree[id].depth >= opts.max_depth) continue;
    if (opts.prune && node_sublimated_zero(res.tree[id])) {
      ++res.stats.pruned_nodes;
      continue;
    }
    res.tree[id].expanded = true;
    ++res.stats.expanded;
    for (int o : option_ids) {
      const PlanNode& parent = res.tree[id];
      bool initiable = false;
      for (const auto& a : parent.alive)
        if (g.apply(a.state, o).initiation_kappa > 0.0) {
          initiable = true;
          break;
        }
      if (!initiable) {
        ++res.stats.infeasible_options;
        continue;
      }
      if (opts.prune && option_sublimated_zero(parent, o)) {
        ++res.stats.pruned_options;
        continue;
      }
      Child ch = step(g, parent.alive, o);
      PlanNode n;
      n.parent = id;
      n.option = o;
      n.depth = parent.depth + 1;
      n.alive = std::move(ch.alive);
      n.success = parent.success + ch.success;
      n.failure = parent.failure + ch.failure;
      n.success_time = parent.success_time + ch.success_time;
      if (opts.merge_duplicates && !n.alive.empty()) {
        if (!seen.insert(node_key(n.depth, n.alive, n.success, n.failure)).second) {
          ++res.stats.merged;
          continue;
        }
      }
      require(res.tree.size() < opts.max_nodes, ErrorCode::Config, "search exceeded the node budget");
      res.tree.push_back(std::move(n));
      ++res.stats.generated;
      queue.push_back(static_cast<int>(res.tree.size()) - 1);
    }
  }

  int best = 0;
  for (size_t i = 1; i < res.tree.size(); ++i) {
    const auto& a = res.tree[i];
    const auto& b = res.tree[best];
    double tol = 1e-12 * std::max(1.0, std::abs(b.success));
    if (a.success > b.success + tol) {
      best = static_cast<int>(i);
    } else if (std::abs(a.success - b.success) <= tol && a.success > 0.0) {
      double ta = a.expected_time(), tb = b.expected_time();
      if (ta < tb - 1e-9 * std::max(1.0, tb) || (std::abs(ta - tb) <= 1e-9 * std::max(1.0, tb) && a.depth < b.depth))
        best = static_cast<int>(i);
    }
  }
  res.best_node = best;
  for (int id = best; id > 0; id = res.tree[id].parent) res.plan.push_back(res.tree[id].option);
  std::reverse(res.plan.begin(), res.plan.end());
  for (int o : res.plan) res.plan_names.push_back(g.options()[o].name);
  const auto& bn = res.tree[best];
  res.kappa = bn.success;
  res.failure = bn.failure;
  for (const auto& a : bn.alive) res.alive += a.prob;
  res.expected_time = bn.expected_time();
  res.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

Stok abstract_action(const std::vector<const Stok*>& stoks, const TransitionKernel* one_step, Index mode) {
  require(!stoks.empty(), ErrorCode::Config, "abstract action needs at least one kernel");
  Stok out = *stoks[0];
  for (size_t i = 1; i < stoks.size(); ++i) out = compose_stoks(out, *stoks[i], one_step, mode);
  return out;
}

PlanEvaluation evaluate_plan(const GoalKernel& g, const std::vector<Index>& start, const std::vector<int>& plan) {
  const Ctmdp& c = g.ctmdp();
  auto layout = c.layout();
  PlanEvaluation ev;
  if (!c.task_forbidden.empty() && c.task_forbidden.holds(start)) {
    ev.p_violation = 1.0;
    return ev;
  }
  if (!c.task_goal.empty() && c.task_goal.holds(start)) {
    ev.p_goal = c.task_constraint(start);
    ev.p_violation = 1.0 - ev.p_goal;
    ev.goal_by_time.assign(1, ev.p_goal);
    return ev;
  }
  std::vector<Atom> alive{{layout.encode(start), 0, 1.0}};
  double time_sum = 0.0;
  for (int o : plan) {
    require(o >= 0 && o < static_cast<int>(g.options().size()), ErrorCode::Config, "plan option out of range");
    if (alive.empty()) break;
    Child ch = step(g, alive, o, true);
    ev.p_goal += ch.success;
    ev.p_violation += ch.failure;
    time_sum += ch.success_time;
    if (ev.goal_by_time.size() < ch.goal_by_time.size()) ev.goal_by_time.resize(ch.goal_by_time.size(), 0.0);
    for (size_t t = 0; t < ch.goal_by_time.size(); ++t) ev.goal_by_time[t] += ch.goal_by_time[t];
    alive = std::move(ch.alive);
  }
  for (const auto& a : alive) ev.p_alive += a.prob;
  ev.alive = std::move(alive);
  ev.expected_time = ev.p_goal > 0.0 ? time_sum / ev.p_goal : 0.0;
  return ev;
}

}  // namespace okbe
