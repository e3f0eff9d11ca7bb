#include "doctest.h"

#include <cmath>
#include <random>

#include "okbe/bridge.hpp"
#include "test_util.hpp"

using namespace okbe;

TEST_CASE("first-exit solution agrees with feasibility iteration on mazes") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 5; ++i) {
    auto m = testutil::random_maze(rng, 5, 6, 0.25);
    auto t = testutil::maze_tmdp(m);
    auto fi = feasibility_iteration(t);
    auto fe = fe_to_stok(solve_first_exit(*m.kernel, m.goal, 1.0), fi.eta.horizon());
    CHECK(max_stok_difference(fe.stok, fi.eta) == 0.0);
    CHECK(fe.kappa == fi.kappa);
    CHECK(fe.policy == fi.policy);
  }
}

TEST_CASE("first exit marks unreachable states and scales by cost") {
  KernelBuilder kb(3, 1);
  kb.add(0, 0, 1, 1.0);
  kb.add(1, 0, 1, 1.0);
  kb.add(2, 0, 2, 1.0);
  auto k = kb.build();
  auto s = solve_first_exit(k, 1, 2.5);
  CHECK(s.reachable == std::vector<char>{1, 1, 0});
  CHECK(s.value[0] == 2.5);
  auto st = fe_to_stok(s);
  CHECK(st.stok.success(0, 1, 1) == 1.0);
  CHECK(st.stok.failure(2, 2, 0) == 1.0);
  CHECK_THROWS_AS(solve_first_exit(k, 1, 0.0), Error);
  auto noisy = grid_kernel(2, 2, 0.5, false, {});
  CHECK_THROWS_AS(solve_first_exit(*noisy, 0, 1.0), Error);
}

TEST_CASE("makeshift kernel of a fixed policy hits rewarded and penalized states") {
  auto k = grid_kernel(1, 4, 0.8, false, {});
  std::vector<Index> right(4, 3);
  auto ms = makeshift_stok(right, *k, {3}, {0}, 400);
  for (Index x = 1; x < 3; ++x)
    CHECK(ms.stok.total(x) + ms.residual[x] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ms.stok.success(3, 3, 0) == 1.0);
  CHECK(ms.stok.failure(0, 0, 0) == 1.0);
  CHECK(ms.residual[1] < 1e-12);
  CHECK_THROWS_AS(makeshift_stok(right, *k, {1}, {1}, 10), Error);
}

TEST_CASE("values from an event kernel") {
  Stok s(2, 3);
  s.add(0, 1, 2, 1.0, 0.0);
  s.add(1, 1, 0, 0.5, 0.5);
  auto v = value_from_stok(s, {0.0, 10.0}, 0.5);
  CHECK(v[0] == doctest::Approx(2.5));
  CHECK(v[1] == doctest::Approx(10.0));
  CHECK_THROWS_AS(value_from_stok(s, {0.0, 1.0}, 1.5), Error);
}
