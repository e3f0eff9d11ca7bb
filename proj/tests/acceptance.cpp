// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "okbe/bridge.hpp"
#include "okbe/empowerment.hpp"
#include "okbe/scenarios.hpp"
#include "test_util.hpp"

using namespace okbe;
namespace tu = okbe::testutil;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void run(int id, const std::string& name, double limit_s, const std::function<Verdict()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = secs < limit_s;
  bool ok = v.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s criterion %d (%s): %s; %.2f s of %.0f s%s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str(), secs, limit_s, in_time ? "" : " (over the time limit)");
  std::fflush(stdout);
}

std::vector<const Region*> default_regions(const GoalKernel& g) {
  std::vector<const Region*> out;
  for (const auto& r : g.regions())
    if (r.is_default) out.push_back(&r);
  return out;
}

// Exact forward rollout of two chained options from one start state: phase-1
// mass that succeeds hands over to phase 2 at the same time (or one step
// later with the terminal action, when `one_step` is set).
struct Rollout {
  std::map<std::pair<Index, int>, double> success, failure;
};

Rollout chained_rollout(const Tmdp& t1, const FiResult& s1, const Tmdp& t2, const FiResult& s2, Index start,
                        int horizon, bool one_step) {
  const int n = t1.num_states();
  std::vector<double> v1(n, 0.0), v2(n, 0.0), pending(n, 0.0);
  v1[start] = 1.0;
  Rollout out;
  for (int t = 0; t < horizon; ++t) {
    std::vector<double> n1(n, 0.0), n2(n, 0.0);
    for (Index x = 0; x < n; ++x) v2[x] += pending[x];
    std::fill(pending.begin(), pending.end(), 0.0);
    for (Index x = 0; x < n; ++x) {
      if (v1[x] == 0.0) continue;
      if (s1.kappa[x] <= 0.0) {
        out.failure[{x, t}] += v1[x];
        continue;
      }
      Index a = s1.policy[x];
      double fg = t1.goal.table(x, a), fc = t1.constraint.table(x, a);
      double win = v1[x] * fg * fc;
      if (win != 0.0) {
        if (one_step) {
          for (const auto& tr : t1.kernel->row(x, a, t1.mode)) pending[tr.next] += win * tr.prob;
        } else {
          v2[x] += win;
        }
      }
      if (fc < 1.0) out.failure[{x, t}] += v1[x] * (1.0 - fc);
      double go = v1[x] * (1.0 - fg) * fc;
      if (go != 0.0)
        for (const auto& tr : t1.kernel->row(x, a, t1.mode)) n1[tr.next] += go * tr.prob;
    }
    for (Index x = 0; x < n; ++x) {
      if (v2[x] == 0.0) continue;
      if (s2.kappa[x] <= 0.0) {
        out.failure[{x, t}] += v2[x];
        continue;
      }
      Index a = s2.policy[x];
      double fg = t2.goal.table(x, a), fc = t2.constraint.table(x, a);
      if (fg * fc != 0.0) out.success[{x, t}] += v2[x] * fg * fc;
      if (fc < 1.0) out.failure[{x, t}] += v2[x] * (1.0 - fc);
      double go = v2[x] * (1.0 - fg) * fc;
      if (go != 0.0)
        for (const auto& tr : t2.kernel->row(x, a, t2.mode)) n2[tr.next] += go * tr.prob;
    }
    v1.swap(n1);
    v2.swap(n2);
  }
  return out;
}

double rollout_gap(const Stok& k, Index start, const Rollout& r) {
  std::map<std::pair<Index, int>, double> ds = r.success, df = r.failure;
  const auto& row = k.row(start);
  const int T = k.horizon();
  for (size_t j = 0; j < row.finals.size(); ++j)
    for (int t = 0; t < T; ++t) {
      ds[{row.finals[j], t}] -= row.plus[j * T + t];
      df[{row.finals[j], t}] -= row.minus[j * T + t];
    }
  double worst = 0.0;
  for (auto& [key, v] : ds) worst = std::max(worst, std::abs(v));
  for (auto& [key, v] : df) worst = std::max(worst, std::abs(v));
  return worst;
}

Verdict sum_to_one() {
  double worst = 0.0;
  size_t kernels = 0, outcomes = 0;
  for (const auto& name : builtin_names()) {
    auto s = build_builtin(name);
    auto g = make_goal_kernel(s, false);
    for (const Region* r : default_regions(*g))
      for (size_t o = 0; o < g->options().size(); ++o) {
        const auto& bo = g->base_option(r->mode, r->id, static_cast<int>(o));
        for (Index x = 0; x < s.c.base->num_states(); ++x) {
          double tot = 0.0;
          const auto& row = bo.sol.eta.row(x);
          for (double v : row.plus) tot += v;
          for (double v : row.minus) tot += v;
          worst = std::max(worst, std::abs(tot - 1.0));
        }
        ++kernels;
      }
    // Product-space outcomes from the start vector.
    size_t s0 = s.c.layout().encode(s.c.start);
    for (size_t o = 0; o < g->options().size(); ++o) {
      const auto& out = g->apply(s0, static_cast<int>(o));
      double tot = 0.0;
      for (const auto& a : out.next) tot += a.prob;
      for (const auto& a : out.failure) tot += a.prob;
      worst = std::max(worst, std::abs(tot - 1.0));
      ++outcomes;
    }
  }
  return {worst <= 1e-9, "max |total - 1| = " + fmt("%.3g", worst) + " over " + std::to_string(kernels) +
                             " option kernels and " + std::to_string(outcomes) + " start-vector outcomes (tol 1e-9)"};
}

Verdict absorbing_chain_equivalence() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int largest = 0;
  for (int i = 0; i < 25; ++i) {
    int n = tu::uniform_int(rng, 10, 200), A = tu::uniform_int(rng, 1, 4);
    auto t = tu::random_tmdp(rng, n, A, tu::uniform_real(rng, 0.0, 1.0));
    auto r = feasibility_iteration(t);
    worst = std::max(worst, tu::oracle_stok_error(t, r));
    largest = std::max(largest, n);
  }
  return {worst <= 1e-10, "max |eta_FI - eta_chain| = " + fmt("%.3g", worst) +
                              " on 25 random TMDPs, up to " + std::to_string(largest) + " states (tol 1e-10)"};
}

Verdict factorization_theorem() {
  struct Instance {
    std::string name;
    Ctmdp c;
  };
  std::vector<Instance> inst;
  inst.push_back({"4x4 grid x 5-level hydration", tu::hydration_instance()});
  inst.push_back({"3x3 grid x 3-bit static logic", tu::static_logic_instance()});
  std::mt19937_64 rng(99);
  for (int i = 0; i < 4; ++i) {
    tu::RandomCtmdpOptions o;
    o.deterministic = i == 3;
    o.level_space = i % 2 == 0;
    o.max_bits = 2;
    inst.push_back({"random #" + std::to_string(i), tu::random_ctmdp(rng, o)});
  }
  double worst = 0.0;
  size_t compared = 0, slow = 0;
  for (const auto& in : inst) {
    auto c = std::make_shared<Ctmdp>(in.c);
    for (auto kind : {OptionSetKind::Affordance, OptionSetKind::StateAction}) {
      GoalKernel g(c, kind);
      auto opts = kind == OptionSetKind::Affordance ? tu::sample_options(g, 0) : tu::sample_options(g, 6);
      auto res = tu::check_factorization(g, opts);
      worst = std::max(worst, res.worst);
      compared += res.compared;
      slow += res.slow_path;
    }
  }
  return {worst <= 1e-10 && inst.size() >= 5,
          "max gap " + fmt("%.3g", worst) + " over " + std::to_string(compared) + " start vectors (" +
              std::to_string(slow) + " on the general path) in " + std::to_string(inst.size()) +
              " instances (tol 1e-10)"};
}

Verdict sublimation_inequality() {
  std::mt19937_64 rng(4242);
  double worst = -1.0;
  long checks = 0;
  for (int i = 0; i < 100; ++i) {
    tu::RandomCtmdpOptions o;
    o.deterministic = tu::uniform_int(rng, 0, 2) == 0;
    o.level_space = tu::uniform_int(rng, 0, 1) == 1;
    o.base_target = tu::uniform_int(rng, 0, 1) == 1;
    o.max_bits = 3;
    Ctmdp c = tu::random_ctmdp(rng, o);
    auto full = feasibility_iteration(product_task_tmdp(c));
    auto layout = c.layout();
    for (int k = 0; k < c.num_hl(); ++k) {
      auto sub = sublimate_task(c, k);
      for (size_t s = 0; s < layout.total(); ++s) {
        double gap = full.kappa[s] - sub.kappa(layout.component(s, k + 1));
        worst = std::max(worst, gap);
        ++checks;
      }
    }
  }
  return {worst <= 1e-12, "max kappa_full - kappa_sub = " + fmt("%.3g", worst) + " over " +
                              std::to_string(checks) + " (state, space) pairs in 100 random CTMDPs (tol 1e-12)"};
}

Verdict first_exit_equivalence() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  int kappa_mismatch = 0, policy_mismatch = 0;
  for (int i = 0; i < 10; ++i) {
    auto m = tu::random_maze(rng, tu::uniform_int(rng, 4, 10), tu::uniform_int(rng, 4, 10),
                             tu::uniform_real(rng, 0.15, 0.35));
    auto t = tu::maze_tmdp(m);
    auto fi = feasibility_iteration(t);
    auto fe = fe_to_stok(solve_first_exit(*m.kernel, m.goal, 1.0), fi.eta.horizon());
    worst = std::max(worst, max_stok_difference(fe.stok, fi.eta));
    kappa_mismatch += fe.kappa != fi.kappa;
    policy_mismatch += fe.policy != fi.policy;
  }
  return {worst == 0.0 && kappa_mismatch == 0 && policy_mismatch == 0,
          "max kernel gap " + fmt("%.3g", worst) + ", kappa mismatches " + std::to_string(kappa_mismatch) +
              ", policy mismatches " + std::to_string(policy_mismatch) + " on 10 mazes (exact)"};
}

Verdict composition() {
  auto s = build_two_goal_grid();
  auto e = ensemble_solve(s.c, 0, {}, false);
  const Tmdp &t1 = e.tmdps[0], &t2 = e.tmdps[1];
  const FiResult &s1 = e.solutions[0], &s2 = e.solutions[1];
  auto plain = compose_stoks(s1.eta, s2.eta);
  auto stepped = compose_stoks(s1.eta, s2.eta, s.c.base.get(), 0);
  const int H = s1.eta.horizon() + s2.eta.horizon() + 1;
  double worst = 0.0;
  for (Index x = 0; x < s.c.base->num_states(); ++x) {
    worst = std::max(worst, rollout_gap(plain, x, chained_rollout(t1, s1, t2, s2, x, H, false)));
    worst = std::max(worst, rollout_gap(stepped, x, chained_rollout(t1, s1, t2, s2, x, H, true)));
  }

  // Monte Carlo against the composed kernel from the start cell. Each option
  // treats the other goal as a constraint, so the second one starts after
  // the first one's terminal step.
  const Index x0 = s.c.start[0];
  const uint64_t N = 100000;
  const Stok& mixed = stepped;
  auto mc = monte_carlo_options({&t1, &t2}, {&s1, &s2}, x0, mixed.horizon(), N, 12345, s.c.base.get());
  // Bins: failure, and success split into four time bins at the exact quartiles.
  std::vector<double> succ_t(mixed.horizon(), 0.0);
  double fail_exact = mixed.total_failure(x0);
  const auto& row = mixed.row(x0);
  const int T = mixed.horizon();
  for (size_t j = 0; j < row.finals.size(); ++j)
    for (int t = 0; t < T; ++t) succ_t[t] += row.plus[j * T + t];
  std::vector<uint64_t> succ_mc(T, 0);
  uint64_t fail_mc = 0;
  for (size_t f = 0; f < mc.success.size(); ++f)
    for (int t = 0; t < T; ++t) {
      succ_mc[t] += mc.success[f][t];
      fail_mc += mc.failure[f][t];
    }
  double total_succ = 0.0;
  for (double v : succ_t) total_succ += v;
  std::vector<std::pair<double, uint64_t>> bins{{fail_exact, fail_mc}};
  double cum = 0.0;
  std::pair<double, uint64_t> bin{0.0, 0};
  int q = 1;
  for (int t = 0; t < T; ++t) {
    bin.first += succ_t[t];
    bin.second += succ_mc[t];
    cum += succ_t[t];
    if (cum >= total_succ * q / 4.0 - 1e-15 || t == T - 1) {
      bins.push_back(bin);
      bin = {0.0, 0};
      ++q;
    }
  }
  // The success histogram must not be degenerate.
  int live_bins = 0;
  for (size_t b = 1; b < bins.size(); ++b) live_bins += bins[b].first > 0.0;
  double worst_sigma = 0.0;
  bool mc_ok = total_succ > 0.0 && live_bins >= 2;
  for (const auto& [p, k] : bins) {
    double phat = static_cast<double>(k) / N;
    double sigma = std::sqrt(std::max(p * (1.0 - p), 0.0) / N);
    if (sigma == 0.0) {
      mc_ok = mc_ok && k == 0;
      continue;
    }
    double z = std::abs(phat - p) / sigma;
    worst_sigma = std::max(worst_sigma, z);
    mc_ok = mc_ok && z <= 3.0;
  }
  return {worst <= 1e-10 && mc_ok,
          "max |compose - chained rollout| = " + fmt("%.3g", worst) + " (with and without the terminal step, tol " +
              "1e-10); Monte Carlo 1e5 runs from the start cell, exact success " + fmt("%.4f", total_succ) +
              ", worst of " + std::to_string(bins.size()) + " bins " +
              fmt("%.2f", worst_sigma) + " sigma (limit 3)"};
}

Verdict plan_lengths() {
  auto s = build_money_laps();
  auto prim = make_goal_kernel(s, false);
  PlanOptions po;
  po.max_depth = 32;
  auto r1 = tree_search(*prim, s.c.start, po);
  auto abs = make_goal_kernel(s, true);
  po.max_depth = 12;
  auto r2 = tree_search(*abs, s.c.start, po);
  bool ok = r1.plan.size() == 32 && r2.plan.size() == 12 && r1.kappa > 0.0 && r2.kappa > 0.0;
  return {ok, "primitive-option plan length " + std::to_string(r1.plan.size()) + " (want 32), abstract-action " +
                  "plan length " + std::to_string(r2.plan.size()) + " (want 12), kappa " + fmt("%.3g", r1.kappa) +
                  " / " + fmt("%.3g", r2.kappa)};
}

Verdict pruning() {
  auto s = build_logic_precedence(1, false);
  auto g = make_goal_kernel(s);
  PlanOptions po;
  po.max_depth = s.plan_depth;
  auto plain = tree_search(*g, s.c.start, po);
  po.prune = true;
  auto pruned = tree_search(*g, s.c.start, po);
  long saved = static_cast<long>(plain.stats.generated) - static_cast<long>(pruned.stats.generated);
  double worst = std::abs(plain.kappa - pruned.kappa);
  for (const auto& name : builtin_names()) {
    auto sc = build_builtin(name);
    auto gk = make_goal_kernel(sc);
    PlanOptions p;
    p.max_depth = sc.plan_depth;
    double a = tree_search(*gk, sc.c.start, p).kappa;
    p.prune = true;
    double b = tree_search(*gk, sc.c.start, p).kappa;
    worst = std::max(worst, std::abs(a - b));
  }
  return {saved == 2 && worst == 0.0,
          "logic task 1 node expansions " + std::to_string(plain.stats.generated) + " -> " +
              std::to_string(pruned.stats.generated) + " (saved " + std::to_string(saved) +
              ", want 2); max kappa change from pruning over all built-ins " + fmt("%.3g", worst)};
}

Verdict verification() {
  auto s = build_honey_badger();
  auto g = make_goal_kernel(s);
  PlanOptions po;
  po.max_depth = s.plan_depth;
  auto r = tree_search(*g, s.c.start, po);
  auto ev = evaluate_plan(*g, s.c.start, r.plan);
  double comp = std::abs(ev.p_violation - (1.0 - ev.p_goal));
  bool ok = ev.p_goal >= 0.25 && ev.p_goal <= 0.35 && comp <= 1e-12;
  std::string plan;
  for (const auto& n : r.plan_names) plan += (plan.empty() ? "" : ",") + n;
  return {ok, "plan [" + plan + "] p_goal " + fmt("%.4f", ev.p_goal) + " (want [0.25, 0.35]), p_violation " +
                  fmt("%.4f", ev.p_violation) + ", |p_violation - (1 - p_goal)| = " + fmt("%.3g", comp)};
}

Verdict empowerment_cases() {
  double worst_det = 0.0;
  for (int k : {1, 2, 3, 7, 16}) {
    std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i) rows[i][i] = 1.0;
    worst_det = std::max(worst_det, std::abs(channel_capacity(channel_from_dense(rows)).capacity - std::log2(k)));
  }
  double uni = channel_capacity(channel_from_dense({{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25},
                                                    {0.25, 0.25, 0.25, 0.25}}))
                   .capacity;
  double bsc = channel_capacity(channel_from_dense({{0.9, 0.1}, {0.1, 0.9}})).capacity;
  double bsc_err = std::abs(bsc - (1.0 - tu::binary_entropy(0.1)));
  bool ok = worst_det <= 1e-9 && std::abs(uni) <= 1e-12 && bsc_err <= 1e-6;
  return {ok, "deterministic max error " + fmt("%.3g", worst_det) + " (tol 1e-9), uniform " +
                  fmt("%.3g", std::abs(uni)) + " (tol 1e-12), binary crossover 0.1 error " + fmt("%.3g", bsc_err) +
                  " (tol 1e-6)"};
}

Verdict monotone_convergence() {
  FiOptions fi;
  fi.record_trace = true;
  double worst_increase = -1.0, worst_residual = 0.0;
  size_t solves = 0;
  auto take = [&](const FiResult& r) {
    for (double d : r.trace.kappa_decrease) worst_increase = std::max(worst_increase, d);
    worst_residual = std::max(worst_residual, r.kappa_residual);
    if (!r.trace.kappa_change.empty()) worst_residual = std::max(worst_residual, r.trace.kappa_change.back());
    ++solves;
  };
  for (const auto& name : builtin_names()) {
    auto s = build_builtin(name);
    auto g = make_goal_kernel(s, false, fi);
    for (const Region* r : default_regions(*g))
      for (size_t o = 0; o < g->options().size(); ++o) take(g->base_option(r->mode, r->id, static_cast<int>(o)).sol);
    // A world with neither base goals nor sites has no ensemble.
    if (!s.c.base_goals.empty() || !s.c.sites().empty()) {
      auto e = ensemble_solve(s.c, s.c.mode_of(s.c.start), fi, s.c.base_goals.empty());
      for (const auto& sol : e.solutions) take(sol);
    }
    for (int k = 0; k < s.c.num_hl(); ++k) take(sublimate_task(s.c, k, fi).sol);
  }
  return {worst_increase <= 0.0 && worst_residual < 1e-12,
          "largest per-sweep decrease of any kappa entry " + fmt("%.3g", std::max(0.0, worst_increase)) +
              " (must be 0), final residual " + fmt("%.3g", worst_residual) + " (tol 1e-12) over " +
              std::to_string(solves) + " solves"};
}

Verdict sufficiency() {
  struct Case {
    std::string name;
    Ctmdp c;
    bool is_static;
    int depth;
  };
  std::vector<Case> cases;
  {
    auto t = build_temperature();
    cases.push_back({"temperature", t.c, false, t.plan_depth});
  }
  for (auto [task, remap] : {std::pair{1, false}, std::pair{2, false}, std::pair{2, true}}) {
    auto l = build_logic_precedence(task, remap);
    cases.push_back({l.name, l.c, true, l.plan_depth});
  }
  std::mt19937_64 rng(5150);
  for (int i = 0; i < 10; ++i) {
    tu::RandomCtmdpOptions o;
    o.deterministic = true;
    o.level_space = i % 3 == 2;
    o.base_target = i % 2 == 1;
    o.max_bits = 2;
    Ctmdp c = tu::random_ctmdp(rng, o);
    int bits = static_cast<int>(std::log2(c.hl[0].kernel->num_states()) + 0.5);
    cases.push_back({"random #" + std::to_string(i), c, !o.level_space, bits + 1 + (o.level_space ? 2 : 0)});
  }
  double worst = 0.0;
  int compared = 0;
  size_t biggest = 0;
  std::string worst_case = "-";
  for (const auto& cs : cases) {
    size_t S = cs.c.layout().total();
    if (S > 50000) continue;
    biggest = std::max(biggest, S);
    double brute = tu::brute_force_task_kappa(cs.c);
    auto c = std::make_shared<Ctmdp>(cs.c);
    std::vector<OptionSetKind> kinds{OptionSetKind::StateAction};
    // The affordance set only covers base cells that are sites.
    bool base_clause = false;
    for (const auto& cl : cs.c.task_goal.clauses) base_clause = base_clause || cl.component == 0;
    if (cs.is_static && !base_clause) kinds.push_back(OptionSetKind::Affordance);
    for (auto kind : kinds) {
      GoalKernel g(c, kind);
      PlanOptions po;
      po.max_depth = cs.depth;
      double k = tree_search(g, cs.c.start, po).kappa;
      double gap = std::abs(k - brute);
      if (gap > worst) {
        worst = gap;
        worst_case = cs.name + (kind == OptionSetKind::Affordance ? " (affordance)" : " (state-action)");
      }
      ++compared;
    }
  }
  return {worst <= 1e-9, "max |kappa_plan - kappa_brute| = " + fmt("%.3g", worst) + " (worst: " + worst_case +
                             ") over " + std::to_string(compared) + " searches, up to " + std::to_string(biggest) +
                             " product states (tol 1e-9)"};
}

}  // namespace

int main() {
  run(1, "sum-to-one", 10, sum_to_one);
  run(2, "absorbing-chain oracle", 30, absorbing_chain_equivalence);
  run(3, "kernel factorization", 60, factorization_theorem);
  run(4, "sublimation bound", 60, sublimation_inequality);
  run(5, "first-exit equivalence", 5, first_exit_equivalence);
  run(6, "composition", 20, composition);
  run(7, "plan lengths", 60, plan_lengths);
  run(8, "pruning", 10, pruning);
  run(9, "verification", 120, verification);
  run(10, "empowerment", 5, empowerment_cases);
  run(11, "monotone convergence", 30, monotone_convergence);
  run(12, "planner sufficiency", 120, sufficiency);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
