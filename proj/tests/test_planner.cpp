#include "doctest.h"

#include <cmath>
#include <random>

#include "okbe/scenarios.hpp"
#include "test_util.hpp"

using namespace okbe;

TEST_CASE("temperature: direct routes overheat, the detour through the cold region works") {
  auto s = build_temperature();
  auto g = make_goal_kernel(s);
  PlanOptions po;
  po.max_depth = 2;
  CHECK(tree_search(*g, s.c.start, po).kappa == 0.0);
  po.max_depth = 3;
  auto r = tree_search(*g, s.c.start, po);
  CHECK(r.kappa == doctest::Approx(1.0));
  CHECK(r.plan.size() == 3);
  CHECK(r.plan_names.size() == 3);
  auto ev = evaluate_plan(*g, s.c.start, r.plan);
  CHECK(ev.p_goal == doctest::Approx(1.0));
  CHECK(ev.p_violation == doctest::Approx(0.0));
}

TEST_CASE("sublimation bounds the logic task and detects the dead end") {
  auto s = build_logic_precedence(2, false);
  auto sub = sublimate_task(s.c, 0);
  // Setting the third bit first closes off the other two.
  CHECK(sub.kappa(0b100) == 0.0);
  CHECK(sub.kappa(0) == 1.0);
  auto g = make_goal_kernel(s);
  PlanOptions po;
  po.max_depth = 3;
  CHECK(tree_search(*g, s.c.start, po).kappa == 0.0);
}

TEST_CASE("pruning keeps the best plan and saves nodes") {
  auto s = build_logic_precedence(1, false);
  auto g = make_goal_kernel(s);
  PlanOptions po;
  po.max_depth = 3;
  auto plain = tree_search(*g, s.c.start, po);
  po.prune = true;
  auto pruned = tree_search(*g, s.c.start, po);
  CHECK(plain.kappa == pruned.kappa);
  CHECK(pruned.stats.generated < plain.stats.generated);
  CHECK(pruned.stats.pruned_options > 0);
  CHECK(pruned.plan_names.front() == plain.plan_names.front());
}

TEST_CASE("plan evaluation splits mass into goal, violation and alive") {
  auto s = build_honey_badger();
  auto g = make_goal_kernel(s);
  PlanOptions po;
  po.max_depth = s.plan_depth;
  auto r = tree_search(*g, s.c.start, po);
  auto ev = evaluate_plan(*g, s.c.start, r.plan);
  CHECK(ev.p_goal == doctest::Approx(r.kappa).epsilon(1e-12));
  CHECK(ev.p_goal + ev.p_violation + ev.p_alive == doctest::Approx(1.0).epsilon(1e-12));
  auto mc = monte_carlo_plan(*g, s.c.start, r.plan, 20000, 5);
  double p = static_cast<double>(mc.goal) / mc.runs;
  double sigma = std::sqrt(ev.p_goal * (1.0 - ev.p_goal) / mc.runs);
  CHECK(std::abs(p - ev.p_goal) <= 4.0 * sigma);
}

TEST_CASE("abstract action is the left fold of compositions") {
  auto s = build_two_goal_grid();
  auto e = ensemble_solve(s.c, 0, {}, false);
  auto fold = abstract_action({&e.solutions[0].eta, &e.solutions[1].eta, &e.solutions[0].eta});
  auto manual = compose_stoks(compose_stoks(e.solutions[0].eta, e.solutions[1].eta), e.solutions[0].eta);
  CHECK(max_stok_difference(fold, manual) == 0.0);
}

TEST_CASE("money laps: macros shorten the plan") {
  auto s = build_money_laps();
  auto g = make_goal_kernel(s, true);
  PlanOptions po;
  po.max_depth = 12;
  auto r = tree_search(*g, s.c.start, po);
  CHECK(r.kappa == doctest::Approx(1.0));
  CHECK(r.plan.size() == 12);
}

TEST_CASE("state-action planning matches the product-space optimum on small deterministic worlds") {
  std::mt19937_64 rng(3);
  testutil::RandomCtmdpOptions o;
  o.max_bits = 2;
  for (int i = 0; i < 4; ++i) {
    Ctmdp c = testutil::random_ctmdp(rng, o);
    GoalKernel g(std::make_shared<Ctmdp>(c), OptionSetKind::StateAction);
    PlanOptions po;
    po.max_depth = 3;
    auto r = tree_search(g, c.start, po);
    CHECK(r.kappa == doctest::Approx(testutil::brute_force_task_kappa(c)).epsilon(1e-9));
  }
}
