#include "doctest.h"

#include <cmath>

#include "okbe/empowerment.hpp"
#include "okbe/scenarios.hpp"
#include "test_util.hpp"

using namespace okbe;

TEST_CASE("deterministic channel with k outputs has capacity log2 k") {
  for (int k : {1, 2, 5, 8}) {
    std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i) rows[i][i] = 1.0;
    auto r = channel_capacity(channel_from_dense(rows));
    CHECK(std::abs(r.capacity - std::log2(k)) <= 1e-9);
  }
}

TEST_CASE("channels with identical rows carry nothing") {
  auto r = channel_capacity(channel_from_dense({{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}}));
  CHECK(std::abs(r.capacity) <= 1e-12);
}

TEST_CASE("binary symmetric channel") {
  auto r = channel_capacity(channel_from_dense({{0.9, 0.1}, {0.1, 0.9}}));
  CHECK(std::abs(r.capacity - (1.0 - testutil::binary_entropy(0.1))) <= 1e-6);
  CHECK(r.gap <= 1e-9);
  CHECK(r.input_dist[0] == doctest::Approx(0.5));
  for (size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-15);
}

TEST_CASE("malformed channels are rejected") {
  Channel c;
  c.num_outputs = 2;
  c.rows = {{{0, 0.5}}};
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_THROWS_AS(channel_from_dense({{1.0}, {0.5, 0.5}}), Error);
}

TEST_CASE("primitive empowerment counts reachable cells") {
  auto k = grid_kernel(5, 5, 1.0, true, {});
  // One step from the center reaches five cells, from a corner three.
  auto center = channel_capacity(build_channel_primitive(*k, 12, 1));
  auto corner = channel_capacity(build_channel_primitive(*k, 0, 1));
  CHECK(center.capacity == doctest::Approx(std::log2(5.0)).epsilon(1e-9));
  CHECK(corner.capacity == doctest::Approx(std::log2(3.0)).epsilon(1e-9));
  auto two = channel_capacity(build_channel_primitive(*k, 12, 2));
  CHECK(two.capacity == doctest::Approx(std::log2(13.0)).epsilon(1e-9));
}

TEST_CASE("option empowerment is bounded and its gain is a difference") {
  auto s = build_logic_precedence(1, false);
  auto g = make_goal_kernel(s);
  auto before = s.c.start;
  auto after = before;
  after[1] = 1;
  double e0 = option_empowerment(*g, before, 1), e1 = option_empowerment(*g, after, 1);
  CHECK(e0 >= 0.0);
  CHECK(e0 <= std::log2(static_cast<double>(g->options().size())) + 1e-9);
  CHECK(empowerment_gain(*g, before, after, 1) == doctest::Approx(e1 - e0).epsilon(1e-12));
}

TEST_CASE("valence selection prefers the plan ending in the more empowered state") {
  auto s = build_logic_precedence(1, false);
  auto g = make_goal_kernel(s);
  std::vector<double> v;
  int best = valence_plan_selection(*g, s.c.start, {{0}, {1}}, 1, &v);
  REQUIRE(v.size() == 2);
  CHECK(best == (v[1] > v[0] ? 1 : 0));
}
