#include "okbe/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace okbe {

namespace {

const std::vector<std::string> kMoveLabels = {"up", "down", "left", "right", "stay"};

// Rows of characters; see the legend in each builder.
struct Layout {
  std::vector<std::string> rows;
  int num_rows() const { return static_cast<int>(rows.size()); }
  int num_cols() const { return static_cast<int>(rows[0].size()); }
  Index cell(int r, int c) const { return r * num_cols() + c; }
  std::vector<Index> find(char ch) const {
    std::vector<Index> out;
    for (int r = 0; r < num_rows(); ++r)
      for (int c = 0; c < num_cols(); ++c)
        if (rows[r][c] == ch) out.push_back(cell(r, c));
    return out;
  }
  Index find_one(char ch) const {
    auto v = find(ch);
    require(v.size() == 1, ErrorCode::Internal, std::string("layout needs exactly one '") + ch + "'");
    return v[0];
  }
  std::vector<char> mask(const std::string& chars) const {
    std::vector<char> m(static_cast<size_t>(num_rows()) * num_cols(), 0);
    for (int r = 0; r < num_rows(); ++r)
      for (int c = 0; c < num_cols(); ++c)
        if (chars.find(rows[r][c]) != std::string::npos) m[cell(r, c)] = 1;
    return m;
  }
};

HlSpace make_space(const std::string& name, KernelPtr k, std::vector<Index> defaults,
                   std::vector<std::string> state_labels, std::vector<std::string> action_labels) {
  HlSpace h;
  h.name = name;
  h.default_actions = std::move(defaults);
  h.constraint = StateActionTable(k->num_states(), k->num_actions(), 1.0);
  h.kernel = std::move(k);
  h.state_labels = std::move(state_labels);
  h.action_labels = std::move(action_labels);
  return h;
}

std::vector<std::string> bit_labels(int bits) {
  std::vector<std::string> out;
  for (int v = 0; v < (1 << bits); ++v) {
    std::string s;
    for (int b = 0; b < bits; ++b) s += (v >> b & 1) ? '1' : '0';
    out.push_back(s);
  }
  return out;
}

std::vector<std::string> range_labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

// Bit-setting kernel: action 0 keeps the state, action b + 1 sets bit b.
KernelPtr bit_kernel(int bits, int extra_actions = 0) {
  const int n = 1 << bits;
  KernelBuilder kb(n, 1 + bits + extra_actions);
  for (Index v = 0; v < n; ++v) {
    kb.add(v, 0, v, 1.0);
    for (int b = 0; b < bits; ++b) kb.add(v, b + 1, v | (1 << b), 1.0);
    for (int e = 0; e < extra_actions; ++e) kb.add(v, 1 + bits + e, v, 1.0);
  }
  return kb.build_shared();
}

Expectation plan_expect(int depth, double lo, double hi, int length = -1, bool prune = false, bool macros = true) {
  Expectation e;
  e.kind = "plan";
  e.depth = depth;
  e.lo = lo;
  e.hi = hi;
  e.length = length;
  e.prune = prune;
  e.macros = macros;
  return e;
}

Expectation sum_to_one_expect() {
  Expectation e;
  e.kind = "sum_to_one";
  return e;
}

}  // namespace

KernelPtr grid_kernel(int rows, int cols, double p_intended, bool stay,
                      const std::vector<std::vector<char>>& blocked_by_mode) {
  require(rows > 0 && cols > 0, ErrorCode::Config, "grid needs positive dimensions");
  require(p_intended >= 0.0 && p_intended <= 1.0, ErrorCode::Config, "intended-move probability out of range");
  const int n = rows * cols, A = stay ? 5 : 4;
  const int M = std::max<int>(1, static_cast<int>(blocked_by_mode.size()));
  KernelBuilder kb(n, A, M);
  const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
  for (Index m = 0; m < M; ++m) {
    const std::vector<char>* blocked = blocked_by_mode.empty() ? nullptr : &blocked_by_mode[m];
    auto dest = [&](Index x, int d) {
      int r = x / cols + dr[d], c = x % cols + dc[d];
      if (r < 0 || r >= rows || c < 0 || c >= cols) return x;
      Index y = r * cols + c;
      if (blocked && (*blocked)[y]) return x;
      return y;
    };
    for (Index x = 0; x < n; ++x) {
      for (int a = 0; a < 4; ++a) {
        if (p_intended >= 1.0) {
          kb.add(x, a, dest(x, a), 1.0, m);
          continue;
        }
        double other = (1.0 - p_intended) / 3.0;
        for (int d = 0; d < 4; ++d) kb.add(x, a, dest(x, d), d == a ? p_intended : other, m);
      }
      if (stay) kb.add(x, 4, x, 1.0, m);
    }
  }
  return kb.build_shared();
}

Scenario build_two_goal_grid() {
  // Legend: '1' first goal, '2' second goal, 'o' constraint cell, 'S' start.
  Layout L{{
      "..........",
      "..........",
      ".......11.",
      "........1.",
      "..........",
      "..oooooo..",
      "..........",
      ".2........",
      ".22.......",
      ".........S",
  }};
  Scenario s;
  s.name = "two_goal_grid";
  s.doc = "10x10 grid, intended move 80% and each other direction 6.67%. Two 3-cell goal sets and a band of "
          "constraint cells. Options are the two explicit base goals. The task asks to stand in the second goal "
          "set after the last option's terminal step, which slips out of the set most of the time.";
  Ctmdp& c = s.c;
  c.name = s.name;
  c.grid_rows = L.num_rows();
  c.grid_cols = L.num_cols();
  c.base = grid_kernel(c.grid_rows, c.grid_cols, 0.8, false, {});
  c.base_action_labels = {kMoveLabels.begin(), kMoveLabels.begin() + 4};
  const int X = c.base->num_states(), A = c.base->num_actions();
  c.base_constraint = StateActionTable(X, A, 1.0);
  for (Index x : L.find('o'))
    for (Index a = 0; a < A; ++a) c.base_constraint.at(x, a) = 0.0;
  for (char g : {'1', '2'}) {
    GoalFunction gf;
    gf.name = std::string("g") + g;
    gf.table = StateActionTable(X, A, 0.0);
    for (Index x : L.find(g))
      for (Index a = 0; a < A; ++a) gf.table.at(x, a) = 1.0;
    c.base_goals.push_back(std::move(gf));
  }
  c.task_goal.clauses.push_back({0, L.find('2')});
  c.start = {L.find_one('S')};
  s.option_set = OptionSetKind::Explicit;
  s.plan_depth = 2;
  Expectation e;
  e.kind = "base_kappa";
  e.option = "g1";
  e.cell = L.find('1')[0];
  e.lo = e.hi = 1.0;
  s.expects.push_back(e);
  e.option = "g2";
  e.cell = L.find('o')[0];
  e.lo = e.hi = 0.0;
  s.expects.push_back(e);
  s.expects.push_back(sum_to_one_expect());
  s.expects.push_back(plan_expect(2, 0.15, 0.25, 2));
  return s;
}

Scenario build_temperature() {
  // Legend: 'S' start, 'G' goal, 'c' cold cells, everything else hot.
  Layout L{{
      "S...G",
      ".cc..",
  }};
  Scenario s;
  s.name = "temperature";
  s.doc = "Hot and cold regions drive a 4-level temperature space up or down by one per step; taking a hot step "
          "at the top level overheats. The direct route overheats, so the agent has to pass through the cold "
          "cells on the way.";
  Ctmdp& c = s.c;
  c.name = s.name;
  c.grid_rows = L.num_rows();
  c.grid_cols = L.num_cols();
  c.base = grid_kernel(c.grid_rows, c.grid_cols, 1.0, false, {});
  c.base_action_labels = {kMoveLabels.begin(), kMoveLabels.begin() + 4};
  const int X = c.base->num_states(), A = c.base->num_actions();
  c.base_constraint = StateActionTable(X, A, 1.0);
  const int levels = 4;
  KernelBuilder tk(levels, 2);
  for (Index y = 0; y < levels; ++y) {
    tk.add(y, 0, std::min(y + 1, levels - 1), 1.0);
    tk.add(y, 1, std::max(y - 1, 0), 1.0);
  }
  auto temp = make_space("temperature", tk.build_shared(), {0, 1}, range_labels(levels), {"warm", "cool"});
  temp.constraint.at(levels - 1, 0) = 0.0;
  c.hl.push_back(std::move(temp));
  c.F.num_driver_states = X;
  c.F.num_driver_actions = A;
  auto f = make_constant_factor(0, X, A, 0);
  for (Index x : L.find('c'))
    for (Index a = 0; a < A; ++a) f.at(0, x, a) = {{1, 1.0}};
  c.F.factors.push_back(std::move(f));
  c.task_goal.clauses.push_back({0, {L.find_one('G')}});
  c.start = {L.find_one('S'), 0};
  s.option_set = OptionSetKind::StateAction;
  s.plan_depth = 3;
  s.expects.push_back(plan_expect(1, 0.0, 0.0));
  s.expects.push_back(plan_expect(2, 0.0, 0.0));
  s.expects.push_back(plan_expect(3, 1.0, 1.0, 3));
  s.expects.push_back(sum_to_one_expect());
  return s;
}

Scenario build_logic_precedence(int task, bool remapped) {
  require(task == 1 || task == 2, ErrorCode::Config, "logic task must be 1 or 2");
  // Legend: 'S' start; task 1 sites 'D', 'E', 'F'; task 2 feature cells
  // 'b' blue, 'g' green, 'y' yellow.
  Layout L = task == 1 ? Layout{{"D.E", ".S.", "..F"}} : Layout{{"b.g", ".S.", "..y"}};
  Scenario s;
  s.name = task == 1 ? "logic_precedence" : (remapped ? "logic_remapped" : "logic_dead_end");
  Ctmdp& c = s.c;
  c.name = s.name;
  c.grid_rows = 3;
  c.grid_cols = 3;
  c.base = grid_kernel(3, 3, 1.0, true, {});
  c.base_action_labels = kMoveLabels;
  const int X = c.base->num_states(), A = c.base->num_actions();
  const Index interact = 4;
  c.base_constraint = StateActionTable(X, A, 1.0);
  auto sigma = make_space("sigma", bit_kernel(3), {0}, bit_labels(3),
                          task == 1 ? std::vector<std::string>{"noop", "set_D", "set_E", "set_F"}
                                    : std::vector<std::string>{"noop", "set_A", "set_B", "set_C"});
  for (Index v = 0; v < 8; ++v) {
    if (task == 1) {
      // E and F require D.
      if (!(v & 1)) sigma.constraint.at(v, 2) = sigma.constraint.at(v, 3) = 0.0;
    } else {
      // Setting C closes off A and B.
      if (v & 4) sigma.constraint.at(v, 1) = sigma.constraint.at(v, 2) = 0.0;
    }
  }
  c.hl.push_back(std::move(sigma));
  c.F.num_driver_states = X;
  c.F.num_driver_actions = A;
  if (task == 1) {
    s.doc = "3x3 grid with three interaction sites setting bits D, E and F of a logic space; E and F are "
            "constrained unless D is already set. Task: all three bits.";
    auto f = make_constant_factor(0, X, A, 0);
    const char names[3] = {'D', 'E', 'F'};
    for (int b = 0; b < 3; ++b) {
      Index x = L.find_one(names[b]);
      f.at(0, x, interact) = {{b + 1, 1.0}};
      c.site_names[{x, interact}] = std::string(1, names[b]);
    }
    c.F.factors.push_back(std::move(f));
  } else {
    s.doc = std::string("3x3 grid whose interaction cells carry blue, green and yellow features. Bits A, B, C; "
                        "setting C first is a dead end. ") +
            (remapped ? "The remapped feature map lets yellow set C, so the task becomes feasible."
                      : "Under the original feature map no cell sets C and the task is infeasible.");
    FeaturePair fp;
    fp.num_states = X;
    fp.num_actions = A;
    fp.num_feature_sets = 4;
    fp.feature_set_names = {"none", "blue", "green", "yellow"};
    fp.state_to_features.assign(static_cast<size_t>(X) * A, SparseDist{{0, 1.0}});
    const char cells[3] = {'b', 'g', 'y'};
    const char* names[3] = {"A", "B", "C"};
    for (int k = 0; k < 3; ++k) {
      Index x = L.find_one(cells[k]);
      fp.state_to_features[static_cast<size_t>(x) * A + interact] = {{k + 1, 1.0}};
      c.site_names[{x, interact}] = names[k];
    }
    fp.targets = {0};
    fp.features_to_actions = {{{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{remapped ? 3 : 0, 1.0}}}};
    c.F = affordance_from_features(fp);
    s.features = std::move(fp);
  }
  c.task_goal.clauses.push_back({1, {7}});
  c.start = {L.find_one('S'), 0};
  s.option_set = OptionSetKind::Affordance;
  s.plan_depth = 3;
  if (task == 1) {
    s.expects.push_back(plan_expect(3, 1.0, 1.0, 3));
    s.expects.push_back(plan_expect(3, 1.0, 1.0, 3, true));
  } else {
    Expectation e;
    e.kind = "sublimated_kappa";
    e.space = "sigma";
    e.value = 4;  // only C set
    e.lo = e.hi = 0.0;
    s.expects.push_back(e);
    e.value = 0;
    e.lo = e.hi = 1.0;
    s.expects.push_back(e);
    s.expects.push_back(remapped ? plan_expect(3, 1.0, 1.0, 3) : plan_expect(3, 0.0, 0.0));
  }
  s.expects.push_back(sum_to_one_expect());
  return s;
}

Scenario build_money_laps() {
  // Legend: '#' wall, 'S' start, '1' and '2' hallway checkpoints, 'A' airport,
  // 'D' door (interaction cell in front of the club), 'C' club (blocked while
  // the door is closed).
  Layout L{{
      "S.1..#",
      ".###.#",
      "A###DC",
      ".###.#",
      "..2..#",
  }};
  Scenario s;
  s.name = "money_laps";
  s.doc = "Square hallway with two checkpoints and an airport. Visiting checkpoint 1, checkpoint 2, then the "
          "airport earns one dollar; the checkpoint bits reset after the airport. With ten dollars the door "
          "opens and the club can be entered.";
  Ctmdp& c = s.c;
  c.name = s.name;
  c.grid_rows = L.num_rows();
  c.grid_cols = L.num_cols();
  auto walls = L.mask("#");
  auto closed = walls;
  closed[L.find_one('C')] = 1;
  c.base = grid_kernel(c.grid_rows, c.grid_cols, 1.0, true, {closed, walls});
  c.base_action_labels = kMoveLabels;
  const int X = c.base->num_states(), A = c.base->num_actions();
  const Index interact = 4;
  c.base_constraint = StateActionTable(X, A, 1.0);

  // Checkpoint bits: bit 0 checkpoint 1, bit 1 checkpoint 2, bit 2 airport.
  // The default action clears a completed lap.
  KernelBuilder sk(8, 4);
  for (Index v = 0; v < 8; ++v) {
    sk.add(v, 0, v == 7 ? 0 : v, 1.0);
    for (int b = 0; b < 3; ++b) sk.add(v, b + 1, v | (1 << b), 1.0);
  }
  auto sigma = make_space("sigma", sk.build_shared(), {0}, bit_labels(3), {"noop", "check_1", "check_2", "fly"});
  for (Index v = 0; v < 8; ++v) {
    sigma.constraint.at(v, 1) = (v & 1) ? 0.0 : 1.0;
    sigma.constraint.at(v, 2) = ((v & 1) && !(v & 2)) ? 1.0 : 0.0;
    sigma.constraint.at(v, 3) = v == 3 ? 1.0 : 0.0;
  }
  const int max_money = 10;
  KernelBuilder yk(max_money + 1, 2);
  for (Index y = 0; y <= max_money; ++y) {
    yk.add(y, 0, y, 1.0);
    yk.add(y, 1, std::min(y + 1, max_money), 1.0);
  }
  auto wealth = make_space("wealth", yk.build_shared(), {0}, range_labels(max_money + 1), {"noop", "earn"});
  // Door states: closed, open, inside.
  KernelBuilder ek(3, 4);
  for (Index e = 0; e < 3; ++e) {
    ek.add(e, 0, e, 1.0);
    ek.add(e, 1, e == 0 ? 1 : e, 1.0);
    ek.add(e, 2, e == 1 ? 2 : e, 1.0);
    ek.add(e, 3, e, 1.0);
  }
  auto door = make_space("door", ek.build_shared(), {0}, {"closed", "open", "inside"},
                         {"noop", "buy", "enter", "refuse"});
  for (Index e = 0; e < 3; ++e) {
    door.constraint.at(e, 2) = e == 1 ? 1.0 : 0.0;
    door.constraint.at(e, 3) = 0.0;
  }
  c.hl = {std::move(sigma), std::move(wealth), std::move(door)};

  c.F.num_driver_states = X;
  c.F.num_driver_actions = A;
  auto fs = make_constant_factor(0, X, A, 0);
  auto fy = make_constant_factor(1, X, A, 0, 0, 8);
  auto fe = make_constant_factor(2, X, A, 0, 1, max_money + 1);
  Index c1 = L.find_one('1'), c2 = L.find_one('2'), air = L.find_one('A'), dcell = L.find_one('D'),
        club = L.find_one('C');
  fs.at(0, c1, interact) = {{1, 1.0}};
  fs.at(0, c2, interact) = {{2, 1.0}};
  fs.at(0, air, interact) = {{3, 1.0}};
  // The airport pays only when the lap is complete.
  fy.at(3, air, interact) = {{1, 1.0}};
  for (Index y = 0; y <= max_money; ++y) {
    fe.at(y, dcell, interact) = {{y == max_money ? 1 : 3, 1.0}};
    fe.at(y, club, interact) = {{2, 1.0}};
  }
  c.F.factors = {std::move(fs), std::move(fy), std::move(fe)};
  c.site_names[{c1, interact}] = "check_1";
  c.site_names[{c2, interact}] = "check_2";
  c.site_names[{air, interact}] = "airport";
  c.site_names[{dcell, interact}] = "buy";
  c.site_names[{club, interact}] = "enter";
  // Mode 0 while the door is closed, 1 afterwards.
  c.zeta.num_modes = 2;
  auto hl = c.hl_layout();
  c.zeta.map.resize(hl.total());
  for (size_t i = 0; i < hl.total(); ++i) c.zeta.map[i] = hl.decode(i)[2] == 0 ? 0 : 1;
  c.task_goal.clauses.push_back({3, {2}});
  c.start = {L.find_one('S'), 0, 0, 0};
  s.option_set = OptionSetKind::Affordance;
  s.macros.push_back({"lap", {"check_1", "check_2", "airport"}});
  s.plan_depth = 12;
  s.expects.push_back(plan_expect(32, 1.0, 1.0, 32, false, false));
  s.expects.push_back(plan_expect(12, 1.0, 1.0, 12, false, true));
  s.expects.push_back(sum_to_one_expect());
  return s;
}

Scenario build_honey_badger() {
  // Legend: '#' wall, 'S' start, 'K' key, 'H' honey, 'W' flowers, 'R' friend,
  // 'L' lake, 'D' door (passable once the key bit is set), 'X' fire.
  Layout L{{
      "R..X#H.",
      "...X#..",
      "L..X#.L",
      "......D",
      "...X#..",
      "S..X#.W",
      ".K..#..",
  }};
  Scenario s;
  s.name = "honey_badger";
  s.doc = "Grid world with hydration and a 3-bit task space (key, honey, flowers); honey and flowers require the "
          "key, which also opens the door. Fire cells are base-space constraints; hydration drops by one per "
          "step and is restored at a lake. Task: be at the friend with all three bits set.";
  Ctmdp& c = s.c;
  c.name = s.name;
  c.grid_rows = L.num_rows();
  c.grid_cols = L.num_cols();
  auto walls = L.mask("#");
  auto closed = walls;
  for (Index d : L.find('D')) closed[d] = 1;
  c.base = grid_kernel(c.grid_rows, c.grid_cols, 0.95, true, {closed, walls});
  c.base_action_labels = kMoveLabels;
  const int X = c.base->num_states(), A = c.base->num_actions();
  const Index interact = 4;
  c.base_constraint = StateActionTable(X, A, 1.0);
  for (Index x : L.find('X'))
    for (Index a = 0; a < A; ++a) c.base_constraint.at(x, a) = 0.0;

  // Task bits: key (bit 0), honey (bit 1), flowers (bit 2); action 4 hands over.
  auto sigma = make_space("sigma", bit_kernel(3, 1), {0}, bit_labels(3), {"noop", "key", "honey", "flowers", "give"});
  for (Index v = 0; v < 8; ++v) {
    sigma.constraint.at(v, 1) = (v & 1) ? 0.0 : 1.0;
    sigma.constraint.at(v, 2) = ((v & 1) && !(v & 2)) ? 1.0 : 0.0;
    sigma.constraint.at(v, 3) = ((v & 1) && !(v & 4)) ? 1.0 : 0.0;
    sigma.constraint.at(v, 4) = v == 7 ? 1.0 : 0.0;
  }
  const int max_water = 14;
  KernelBuilder hk(max_water + 1, 2);
  for (Index y = 0; y <= max_water; ++y) {
    hk.add(y, 0, std::max(y - 1, 0), 1.0);
    hk.add(y, 1, max_water, 1.0);
  }
  auto water = make_space("hydration", hk.build_shared(), {0}, range_labels(max_water + 1), {"thirst", "drink"});
  water.constraint.at(0, 0) = 0.0;
  c.hl = {std::move(sigma), std::move(water)};

  c.F.num_driver_states = X;
  c.F.num_driver_actions = A;
  auto fs = make_constant_factor(0, X, A, 0);
  auto fw = make_constant_factor(1, X, A, 0);
  auto site = [&](char ch, const std::string& name, int sigma_action, int water_action) {
    auto cells = L.find(ch);
    for (size_t i = 0; i < cells.size(); ++i) {
      fs.at(0, cells[i], interact) = {{sigma_action, 1.0}};
      fw.at(0, cells[i], interact) = {{water_action, 1.0}};
      c.site_names[{cells[i], interact}] = cells.size() == 1 ? name : name + "_" + std::to_string(i + 1);
    }
  };
  site('K', "key", 1, 0);
  site('H', "honey", 2, 0);
  site('W', "flowers", 3, 0);
  site('R', "friend", 4, 0);
  site('L', "lake", 0, 1);
  c.F.factors = {std::move(fs), std::move(fw)};
  c.zeta.num_modes = 2;
  auto hl = c.hl_layout();
  c.zeta.map.resize(hl.total());
  for (size_t i = 0; i < hl.total(); ++i) c.zeta.map[i] = (hl.decode(i)[0] & 1) ? 1 : 0;
  c.task_goal.clauses.push_back({0, {L.find_one('R')}});
  c.task_goal.clauses.push_back({1, {7}});
  c.start = {L.find_one('S'), 0, max_water};
  s.option_set = OptionSetKind::Affordance;
  s.plan_depth = 6;
  s.expects.push_back(plan_expect(6, 0.25, 0.35));
  s.expects.push_back(sum_to_one_expect());
  return s;
}

std::vector<std::string> builtin_names() {
  return {"two_goal_grid", "honey_badger", "temperature", "logic_precedence", "logic_dead_end", "logic_remapped",
          "money_laps"};
}

Scenario build_builtin(const std::string& name) {
  if (name == "two_goal_grid") return build_two_goal_grid();
  if (name == "honey_badger") return build_honey_badger();
  if (name == "temperature") return build_temperature();
  if (name == "logic_precedence") return build_logic_precedence(1, false);
  if (name == "logic_dead_end") return build_logic_precedence(2, false);
  if (name == "logic_remapped") return build_logic_precedence(2, true);
  if (name == "money_laps") return build_money_laps();
  throw Error(ErrorCode::Config, "unknown built-in scenario '" + name + "'");
}

std::shared_ptr<GoalKernel> make_goal_kernel(const Scenario& s, OptionSetKind kind, bool with_macros,
                                             const FiOptions& fi) {
  auto g = std::make_shared<GoalKernel>(std::make_shared<const Ctmdp>(s.c), kind, fi);
  if (with_macros)
    for (const auto& m : s.macros) {
      std::vector<int> seq;
      for (const auto& n : m.sequence) {
        int o = g->find_option(n);
        require(o >= 0, ErrorCode::Config, "macro " + m.name + " names unknown option " + n);
        seq.push_back(o);
      }
      g->add_macro(m.name, seq);
    }
  return g;
}

std::shared_ptr<GoalKernel> make_goal_kernel(const Scenario& s, bool with_macros, const FiOptions& fi) {
  return make_goal_kernel(s, s.option_set, with_macros, fi);
}

std::vector<ExpectationResult> check_expectations(const Scenario& s) {
  std::vector<ExpectationResult> out;
  std::shared_ptr<GoalKernel> with, without;
  auto kernel = [&](bool macros) {
    auto& slot = macros ? with : without;
    if (!slot) slot = make_goal_kernel(s, macros);
    return slot;
  };
  const double slack = 1e-9;
  for (const auto& e : s.expects) {
    ExpectationResult r;
    if (e.kind == "base_kappa") {
      auto g = kernel(false);
      int o = g->find_option(e.option);
      require(o >= 0, ErrorCode::Config, "expectation names unknown option " + e.option);
      int region = g->region_of_cell(e.cell, e.mode);
      r.observed = region < 0 ? 0.0 : g->base_option(e.mode, region, o).sol.kappa[e.cell];
      r.pass = r.observed >= e.lo - slack && r.observed <= e.hi + slack;
      r.description = "kappa of " + e.option + " at cell " + std::to_string(e.cell);
    } else if (e.kind == "plan") {
      auto g = kernel(e.macros);
      PlanOptions po;
      po.max_depth = e.depth;
      po.prune = e.prune;
      auto res = tree_search(*g, s.c.start, po);
      r.observed = res.kappa;
      r.pass = r.observed >= e.lo - slack && r.observed <= e.hi + slack &&
               (e.length < 0 || static_cast<int>(res.plan.size()) == e.length);
      r.description = "plan search to depth " + std::to_string(e.depth) + (e.prune ? " with pruning" : "") +
                      ": kappa " + std::to_string(res.kappa) + ", length " + std::to_string(res.plan.size());
    } else if (e.kind == "sublimated_kappa") {
      int k = -1;
      for (int i = 0; i < s.c.num_hl(); ++i)
        if (s.c.hl[i].name == e.space) k = i;
      require(k >= 0, ErrorCode::Config, "expectation names unknown space " + e.space);
      auto sub = sublimate_task(s.c, k);
      r.observed = sub.kappa(e.value);
      r.pass = r.observed >= e.lo - slack && r.observed <= e.hi + slack;
      r.description = "sublimated kappa of " + e.space + " at " + std::to_string(e.value);
    } else if (e.kind == "sum_to_one") {
      auto g = kernel(false);
      double worst = 0.0;
      for (size_t o = 0; o < g->options().size(); ++o)
        for (const auto& reg : g->regions()) {
          if (!reg.is_default) continue;
          const auto& bo = g->base_option(reg.mode, reg.id, static_cast<int>(o));
          for (Index x = 0; x < s.c.base->num_states(); ++x)
            worst = std::max(worst, std::abs(bo.sol.eta.total(x) - 1.0));
        }
      r.observed = worst;
      r.pass = worst <= 1e-9;
      r.description = "every option kernel sums to one";
    } else {
      throw Error(ErrorCode::Config, "unknown expectation kind '" + e.kind + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace okbe
