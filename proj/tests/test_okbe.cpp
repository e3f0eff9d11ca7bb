#include "doctest.h"

#include <cmath>
#include <random>

#include "okbe/okbe.hpp"
#include "test_util.hpp"

using namespace okbe;

namespace {

// Corridor 0 -> 1 -> 2 with the goal at 2 and a 0.9 constraint everywhere.
Tmdp corridor() {
  KernelBuilder kb(3, 1);
  kb.add(0, 0, 1, 1.0);
  kb.add(1, 0, 2, 1.0);
  kb.add(2, 0, 2, 1.0);
  Tmdp t;
  t.kernel = kb.build_shared();
  t.goal.table = StateActionTable(3, 1, 0.0);
  t.goal.table.at(2, 0) = 1.0;
  t.constraint.table = StateActionTable(3, 1, 0.9);
  return t;
}

}  // namespace

TEST_CASE("corridor feasibility and event kernel in closed form") {
  auto r = feasibility_iteration(corridor());
  CHECK(r.kappa[0] == doctest::Approx(0.729).epsilon(1e-14));
  CHECK(r.kappa[1] == doctest::Approx(0.81).epsilon(1e-14));
  CHECK(r.kappa[2] == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(r.eta.success(0, 2, 2) == doctest::Approx(0.729));
  CHECK(r.eta.failure(0, 0, 0) == doctest::Approx(0.1));
  CHECK(r.eta.failure(0, 1, 1) == doctest::Approx(0.09));
  CHECK(r.eta.failure(0, 2, 2) == doctest::Approx(0.081));
  for (Index x = 0; x < 3; ++x) CHECK(r.eta.total(x) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.nu[0] == doctest::Approx(1.0 + 0.9 * (1.0 + 0.9)));
}

TEST_CASE("infeasible states terminate at once with a failure") {
  KernelBuilder kb(2, 1);
  kb.add(0, 0, 0, 1.0);
  kb.add(1, 0, 1, 1.0);
  Tmdp t;
  t.kernel = kb.build_shared();
  t.goal.table = StateActionTable(2, 1, 0.0);
  t.goal.table.at(1, 0) = 1.0;
  t.constraint.table = StateActionTable(2, 1, 1.0);
  auto r = feasibility_iteration(t);
  CHECK(r.kappa[0] == 0.0);
  CHECK(r.eta.failure(0, 0, 0) == 1.0);
  CHECK(r.eta.total_success(0) == 0.0);
  CHECK(r.eta.success(1, 1, 0) == 1.0);
}

TEST_CASE("policy prefers the shorter of two equally safe routes") {
  // 0 -> goal directly with action 1, or through 1 with action 0.
  KernelBuilder kb(3, 2);
  kb.add(0, 0, 1, 1.0);
  kb.add(0, 1, 2, 1.0);
  kb.add(1, 0, 2, 1.0);
  kb.add(1, 1, 2, 1.0);
  kb.add(2, 0, 2, 1.0);
  kb.add(2, 1, 2, 1.0);
  Tmdp t;
  t.kernel = kb.build_shared();
  t.goal.table = StateActionTable(3, 2, 0.0);
  t.goal.table.at(2, 0) = t.goal.table.at(2, 1) = 1.0;
  t.constraint.table = StateActionTable(3, 2, 1.0);
  auto r = feasibility_iteration(t);
  CHECK(r.kappa[0] == 1.0);
  CHECK(r.policy[0] == 1);
  CHECK(r.policy[2] == 0);
  CHECK(r.eta.success(0, 2, 1) == 1.0);
}

TEST_CASE("event kernel matches the absorbing-chain oracle on random instances") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 8; ++i) {
    auto t = testutil::random_tmdp(rng, testutil::uniform_int(rng, 5, 40), testutil::uniform_int(rng, 1, 3), 0.5);
    FiOptions fi;
    fi.record_trace = true;
    auto r = feasibility_iteration(t, fi);
    CHECK(testutil::oracle_stok_error(t, r) <= 1e-10);
    auto k = absorbing_chain_kappa(r.policy, feasibility_indicator(r.kappa), t);
    for (size_t s = 0; s < k.size(); ++s) CHECK(std::abs(k[s] - r.kappa[s]) <= 1e-10);
    for (double d : r.trace.kappa_decrease) CHECK(d <= 0.0);
    CHECK(r.kappa_residual < 1e-12);
  }
}

TEST_CASE("option termination function") {
  CHECK(termination_probability(0.0, 0.0, 1.0) == 1.0);
  CHECK(termination_probability(0.5, 1.0, 0.8) == doctest::Approx(1.0));
  CHECK(termination_probability(0.5, 0.0, 0.8) == doctest::Approx(0.2));
  auto t = corridor();
  auto r = feasibility_iteration(t);
  auto o = make_option(r, t, 3);
  CHECK(o.goal_index == 3);
  CHECK(o.termination(1, 0) == doctest::Approx(0.1));
  CHECK(o.termination(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("trajectory first-event probabilities") {
  auto t = corridor();
  auto ev = trajectory_stef({{0, 0}, {1, 0}, {2, 0}}, t);
  CHECK(ev.plus == doctest::Approx(0.729));
  CHECK(ev.minus == doctest::Approx(0.081));
  CHECK(ev.minus_by_time[0] == doctest::Approx(0.1));
  CHECK(ev.plus_by_time[1] == 0.0);
}

TEST_CASE("composition conserves mass and shifts time") {
  auto t = corridor();
  auto r = feasibility_iteration(t);
  auto c = compose_stoks(r.eta, r.eta);
  for (Index x = 0; x < 3; ++x) CHECK(c.total(x) == doctest::Approx(1.0).epsilon(1e-14));
  // Second leg starts at 2 at time 2 and succeeds there at once.
  CHECK(c.success(0, 2, 2) == doctest::Approx(0.729 * 0.9));
  auto c1 = compose_stoks(r.eta, r.eta, t.kernel.get());
  CHECK(c1.success(0, 2, 3) == doctest::Approx(0.729 * 0.9));
  auto sok = stok_to_sok(c);
  CHECK(sok.row_total(0) == doctest::Approx(1.0));
  auto direct = compose_soks(stok_to_sok(r.eta), stok_to_sok(r.eta));
  for (Index x = 0; x < 3; ++x)
    for (Index f = 0; f < 3; ++f) {
      CHECK(direct.success(x, f) == doctest::Approx(sok.success(x, f)));
      CHECK(direct.failure(x, f) == doctest::Approx(sok.failure(x, f)));
    }
}

TEST_CASE("stok storage grows and trims") {
  Stok s(2, 2);
  s.add(0, 1, 1, 0.5, 0.0);
  s.add(0, 0, 0, 0.0, 0.5);
  s.extend_horizon(6);
  CHECK(s.horizon() == 6);
  CHECK(s.success(0, 1, 1) == 0.5);
  s.trim();
  CHECK(s.horizon() == 2);
  CHECK(s.total(0) == 1.0);
  CHECK(s.total(1) == 0.0);
}
