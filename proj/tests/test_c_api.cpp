#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "okbe/okbe_c.h"

TEST_CASE("C API: built-ins, info and errors") {
  CHECK(okbe_builtin_count() >= 7);
  CHECK(std::string(okbe_builtin_name(0)).size() > 0);
  CHECK(okbe_builtin_name(-1) == nullptr);
  okbe_scenario* s = nullptr;
  CHECK(okbe_scenario_open("no_such_world", &s) == OKBE_ERR_CONFIG);
  CHECK(s == nullptr);
  CHECK(std::string(okbe_last_error_message()).find("no_such_world") != std::string::npos);
  REQUIRE(okbe_scenario_builtin("two_goal_grid", &s) == OKBE_OK);
  CHECK(std::string(okbe_last_error_message()).empty());
  okbe_scenario_info info;
  REQUIRE(okbe_scenario_get_info(s, &info) == OKBE_OK);
  CHECK(info.grid_rows == 10);
  CHECK(info.num_base_states == 100);
  CHECK(info.num_hl_spaces == 0);
  CHECK(info.option_set == OKBE_OPTIONS_EXPLICIT);
  CHECK(std::string(okbe_scenario_name(s)) == "two_goal_grid");
  int32_t start[1];
  CHECK(okbe_scenario_start(s, start, 0) != OKBE_OK);
  CHECK(okbe_scenario_start(s, start, 1) == OKBE_OK);
  okbe_scenario_free(s);
  CHECK(okbe_scenario_get_info(nullptr, &info) != OKBE_OK);
}

TEST_CASE("C API: solving emits one map per goal") {
  okbe_scenario* s = nullptr;
  REQUIRE(okbe_scenario_open("two_goal_grid", &s) == OKBE_OK);
  okbe_config cfg;
  okbe_config_default(&cfg);
  okbe_solution* sol = nullptr;
  REQUIRE(okbe_solve(s, &cfg, &sol) == OKBE_OK);
  REQUIRE(okbe_solution_num_goals(sol) == 2);
  CHECK(std::string(okbe_solution_goal_name(sol, 0)) == "g1");
  const int n = okbe_solution_num_states(sol);
  std::vector<double> kappa(n), succ(n), fail(n), time(n);
  std::vector<int32_t> pol(n);
  CHECK(okbe_solution_kappa(sol, 0, kappa.data(), kappa.size()) == OKBE_OK);
  CHECK(okbe_solution_policy(sol, 0, pol.data(), pol.size()) == OKBE_OK);
  CHECK(okbe_solution_summary(sol, 1, succ.data(), fail.data(), time.data(), n) == OKBE_OK);
  for (int x = 0; x < n; ++x) {
    CHECK(kappa[x] >= 0.0);
    CHECK(kappa[x] <= 1.0);
    CHECK(succ[x] + fail[x] == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(okbe_solution_kappa(sol, 5, kappa.data(), kappa.size()) != OKBE_OK);
  long sweeps = 0;
  double residual = 1.0;
  CHECK(okbe_solution_sweeps(sol, 0, &sweeps, &residual) == OKBE_OK);
  CHECK(sweeps > 0);
  CHECK(residual < 1e-12);
  okbe_solution_free(sol);
  okbe_scenario_free(s);
}

TEST_CASE("C API: plan, verify and empowerment") {
  okbe_scenario* s = nullptr;
  REQUIRE(okbe_scenario_open("logic_precedence", &s) == OKBE_OK);
  okbe_config cfg;
  okbe_config_default(&cfg);
  okbe_plan* p = nullptr;
  REQUIRE(okbe_plan_run(s, &cfg, &p) == OKBE_OK);
  okbe_plan_summary sum;
  REQUIRE(okbe_plan_get_summary(p, &sum) == OKBE_OK);
  CHECK(sum.kappa == doctest::Approx(1.0));
  CHECK(sum.length == 3);
  CHECK(std::string(okbe_plan_step_name(p, 0)) == "D");
  std::vector<double> succ(9), fail(9);
  CHECK(okbe_plan_event_maps(p, 0, succ.data(), fail.data(), 9) == OKBE_OK);
  double tot = 0.0;
  for (int i = 0; i < 9; ++i) tot += succ[i] + fail[i];
  CHECK(tot == doctest::Approx(1.0));
  okbe_plan_free(p);

  const char* plan[] = {"D", "E", "F"};
  okbe_verify_result v;
  REQUIRE(okbe_verify(s, &cfg, plan, 3, 2000, 1, &v) == OKBE_OK);
  CHECK(v.p_goal == doctest::Approx(1.0));
  CHECK(v.p_violation == doctest::Approx(0.0));
  CHECK(v.mc_goal == 1.0);
  const char* wrong[] = {"E"};
  REQUIRE(okbe_verify(s, &cfg, wrong, 1, 0, 1, &v) == OKBE_OK);
  CHECK(v.p_violation == doctest::Approx(1.0));
  const char* unknown[] = {"Q"};
  CHECK(okbe_verify(s, &cfg, unknown, 1, 0, 1, &v) == OKBE_ERR_CONFIG);

  std::vector<double> e(9);
  CHECK(okbe_empowerment_map(s, &cfg, OKBE_CHANNEL_PRIMITIVE, 1, e.data(), e.size()) == OKBE_OK);
  CHECK(e[4] == doctest::Approx(std::log2(5.0)).epsilon(1e-9));
  CHECK(okbe_empowerment_gain_map(s, &cfg, OKBE_CHANNEL_OPTIONS, 1, 0, 0, 7, e.data(), e.size()) == OKBE_OK);
  CHECK(okbe_empowerment_map(s, &cfg, 9, 1, e.data(), e.size()) == OKBE_ERR_CONFIG);
  okbe_scenario_free(s);
}

TEST_CASE("C API: scenario check runs the expectation list") {
  okbe_scenario* s = nullptr;
  REQUIRE(okbe_scenario_open("temperature", &s) == OKBE_OK);
  int passed = 0, total = 0;
  REQUIRE(okbe_scenario_check(s, &passed, &total) == OKBE_OK);
  CHECK(total > 0);
  CHECK(passed == total);
  okbe_scenario_free(s);
}
