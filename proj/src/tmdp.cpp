#include "okbe/tmdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace okbe {

namespace {

void check_unit_interval(const StateActionTable& t, const std::string& what) {
  for (double v : t.values)
    require(v >= 0.0 && v <= 1.0 && std::isfinite(v), ErrorCode::Validation, what + " has a value outside [0,1]");
}

}  // namespace

StateActionTable combine_separable_goals(const std::vector<StateActionTable>& factors) {
  require(!factors.empty(), ErrorCode::Validation, "no goal factors to combine");
  StateActionTable out(factors[0].num_states, factors[0].num_actions, 1.0);
  for (const auto& f : factors) {
    require(f.same_shape(out), ErrorCode::Validation, "goal factors have different shapes");
    for (size_t i = 0; i < f.values.size(); ++i) out.values[i] *= (1.0 - f.values[i]);
  }
  for (double& v : out.values) v = 1.0 - v;
  return out;
}

StateActionTable combine_separable_constraints(const std::vector<StateActionTable>& factors) {
  require(!factors.empty(), ErrorCode::Validation, "no constraint factors to combine");
  StateActionTable out(factors[0].num_states, factors[0].num_actions, 1.0);
  for (const auto& f : factors) {
    require(f.same_shape(out), ErrorCode::Validation, "constraint factors have different shapes");
    for (size_t i = 0; i < f.values.size(); ++i) out.values[i] *= f.values[i];
  }
  return out;
}

void Tmdp::validate() const {
  require(kernel != nullptr, ErrorCode::Validation, "TMDP without a kernel");
  require(mode >= 0 && mode < kernel->num_modes(), ErrorCode::Validation, "TMDP mode out of range");
  require(goal.table.num_states == num_states() && goal.table.num_actions == num_actions(), ErrorCode::Validation,
          "goal function does not match the kernel");
  require(constraint.table.num_states == num_states() && constraint.table.num_actions == num_actions(),
          ErrorCode::Validation, "constraint function does not match the kernel");
  check_unit_interval(goal.table, "goal function");
  check_unit_interval(constraint.table, "constraint function");
}

double achievement(const Tmdp& t, Index x, Index a) { return t.goal.table(x, a) * t.constraint.table(x, a); }

double continuation(const Tmdp& t, Index x, Index a) {
  return (1.0 - t.goal.table(x, a)) * t.constraint.table(x, a);
}

bool HlSpace::is_default(Index alpha) const {
  return std::find(default_actions.begin(), default_actions.end(), alpha) != default_actions.end();
}

bool StatePredicate::holds(const std::vector<Index>& parts) const {
  for (const auto& c : clauses) {
    if (c.component < 0 || c.component >= static_cast<int>(parts.size())) return false;
    if (std::find(c.values.begin(), c.values.end(), parts[c.component]) == c.values.end()) return false;
  }
  return true;
}

ProductLayout Ctmdp::layout() const {
  ProductLayout l;
  l.sizes.push_back(base->num_states());
  for (const auto& h : hl) l.sizes.push_back(h.kernel->num_states());
  return l;
}

ProductLayout Ctmdp::hl_layout() const {
  ProductLayout l;
  for (const auto& h : hl) l.sizes.push_back(h.kernel->num_states());
  if (l.sizes.empty()) l.sizes.push_back(1);
  return l;
}

size_t Ctmdp::hl_flat(const std::vector<Index>& parts) const {
  size_t idx = 0;
  for (size_t k = hl.size(); k-- > 0;) idx = idx * hl[k].kernel->num_states() + parts[k + 1];
  return idx;
}

Index Ctmdp::mode_of(const std::vector<Index>& parts) const {
  if (zeta.map.empty()) return 0;
  return zeta.map[hl_flat(parts)];
}

std::vector<std::pair<std::vector<Index>, double>> Ctmdp::afford(const std::vector<Index>& parts, Index a) const {
  std::vector<std::pair<std::vector<Index>, double>> out(1, {std::vector<Index>(hl.size(), 0), 1.0});
  for (const auto& f : F.factors) {
    Index zg = f.given >= 0 ? parts[1 + f.given] : 0;
    const auto& d = f.at(zg, parts[0], a);
    std::vector<std::pair<std::vector<Index>, double>> next;
    for (const auto& [vec, p] : out)
      for (const auto& [alpha, q] : d) {
        auto v = vec;
        v[f.target] = alpha;
        next.emplace_back(std::move(v), p * q);
      }
    out.swap(next);
  }
  return out;
}

bool Ctmdp::is_site(Index x, Index a) const {
  for (const auto& f : F.factors)
    for (Index zg = 0; zg < f.given_size; ++zg)
      for (const auto& [alpha, p] : f.at(zg, x, a))
        if (p > 0.0 && !hl[f.target].is_default(alpha)) return true;
  return false;
}

std::vector<std::pair<Index, Index>> Ctmdp::sites() const {
  std::vector<std::pair<Index, Index>> out;
  for (Index x = 0; x < base->num_states(); ++x)
    for (Index a = 0; a < base->num_actions(); ++a)
      if (is_site(x, a)) out.emplace_back(x, a);
  return out;
}

double Ctmdp::product_constraint(const std::vector<Index>& parts, Index a) const {
  double c = base_constraint(parts[0], a);
  if (c == 0.0 || hl.empty()) return c;
  double acc = 0.0;
  for (const auto& [alpha, p] : afford(parts, a)) {
    double v = p;
    for (size_t k = 0; k < hl.size(); ++k) v *= hl[k].constraint(parts[k + 1], alpha[k]);
    acc += v;
  }
  return c * acc;
}

double Ctmdp::task_constraint(const std::vector<Index>& parts) const {
  if (!task_forbidden.empty() && task_forbidden.holds(parts)) return 0.0;
  double best = 0.0;
  for (Index a = 0; a < base->num_actions(); ++a) best = std::max(best, product_constraint(parts, a));
  return best;
}

double Ctmdp::task_achievement(const std::vector<Index>& parts) const {
  if (task_goal.empty() || !task_goal.holds(parts)) return 0.0;
  return task_constraint(parts);
}

void Ctmdp::validate() const {
  require(base != nullptr, ErrorCode::Validation, "scenario has no base kernel");
  const int X = base->num_states(), A = base->num_actions();
  require(base_constraint.num_states == X && base_constraint.num_actions == A, ErrorCode::Validation,
          "base constraint does not match the base kernel");
  check_unit_interval(base_constraint, "base constraint");
  std::vector<int> sizes, actions;
  for (const auto& h : hl) {
    require(h.kernel != nullptr, ErrorCode::Validation, "high-level space " + h.name + " has no kernel");
    require(h.kernel->num_modes() == 1, ErrorCode::Validation, "high-level kernels must have one mode");
    require(h.constraint.num_states == h.kernel->num_states() && h.constraint.num_actions == h.kernel->num_actions(),
            ErrorCode::Validation, "constraint for space " + h.name + " has the wrong shape");
    check_unit_interval(h.constraint, "constraint for space " + h.name);
    for (Index d : h.default_actions)
      require(d >= 0 && d < h.kernel->num_actions(), ErrorCode::Validation,
              "default action out of range in space " + h.name);
    sizes.push_back(h.kernel->num_states());
    actions.push_back(h.kernel->num_actions());
  }
  if (!hl.empty()) {
    require(F.num_driver_states == X && F.num_driver_actions == A, ErrorCode::Validation,
            "affordance function does not match the base space");
    require(F.factors.size() == hl.size(), ErrorCode::Validation,
            "affordance function needs exactly one factor per high-level space");
    F.validate(sizes, actions);
  }
  size_t hl_total = hl_layout().total();
  if (base->num_modes() > 1 || !zeta.map.empty()) {
    require(zeta.map.size() == hl_total, ErrorCode::Validation, "mode function does not cover the high-level product");
    require(zeta.num_modes == base->num_modes(), ErrorCode::Validation, "mode count mismatch");
    for (Index m : zeta.map)
      require(m >= 0 && m < zeta.num_modes, ErrorCode::Validation, "mode function output out of range");
  }
  for (const auto& g : base_goals) {
    require(g.table.num_states == X && g.table.num_actions == A, ErrorCode::Validation,
            "goal " + g.name + " does not match the base space");
    check_unit_interval(g.table, "goal " + g.name);
  }
  auto l = layout();
  require(start.size() == l.sizes.size(), ErrorCode::Validation, "start vector has the wrong length");
  for (size_t k = 0; k < start.size(); ++k)
    require(start[k] >= 0 && start[k] < l.sizes[k], ErrorCode::Validation, "start component out of range");
  for (const auto* p : {&task_goal, &task_forbidden})
    for (const auto& c : p->clauses) {
      require(c.component >= 0 && c.component < static_cast<int>(l.sizes.size()), ErrorCode::Validation,
              "task predicate names an unknown space");
      for (Index v : c.values)
        require(v >= 0 && v < l.sizes[c.component], ErrorCode::Validation, "task predicate value out of range");
    }
}

std::vector<GoalFunction> goal_functions_from_affordance(const Ctmdp& c) {
  auto s = c.sites();
  require(!s.empty(), ErrorCode::Validation, "affordance function has no non-default outputs");
  std::vector<GoalFunction> out;
  for (const auto& [x, a] : s) {
    GoalFunction g;
    g.table = StateActionTable(c.base->num_states(), c.base->num_actions(), 0.0);
    g.table.at(x, a) = 1.0;
    g.name = "site_" + std::to_string(x) + "_" + std::to_string(a);
    out.push_back(std::move(g));
  }
  return out;
}

ConstraintFunction constraint_with_other_goals(const ConstraintFunction& base, const std::vector<GoalFunction>& goals,
                                               size_t keep) {
  require(keep < goals.size(), ErrorCode::Validation, "kept goal index out of range");
  ConstraintFunction out = base;
  for (size_t j = 0; j < goals.size(); ++j) {
    if (j == keep) continue;
    require(goals[j].table.same_shape(base.table), ErrorCode::Validation, "goal shape does not match constraint");
    for (size_t i = 0; i < base.table.values.size(); ++i)
      if (goals[j].table.values[i] > 0.0 && goals[keep].table.values[i] == 0.0) out.table.values[i] = 0.0;
  }
  return out;
}

std::string check_homogeneity(const ConstraintFunction& c, const GoalFunction& goal,
                              const std::vector<char>& region_members) {
  const auto& t = c.table;
  require(region_members.size() == t.values.size(), ErrorCode::Validation, "region mask has the wrong size");
  for (Index x = 0; x < t.num_states; ++x)
    for (Index a = 0; a < t.num_actions; ++a) {
      size_t i = static_cast<size_t>(x) * t.num_actions + a;
      if (region_members[i] || goal.table.values[i] > 0.0) continue;
      if (t.values[i] != 0.0)
        return "state-action (" + std::to_string(x) + ", " + std::to_string(a) +
               ") lies outside the region but is not constrained";
    }
  return {};
}

}  // namespace okbe
