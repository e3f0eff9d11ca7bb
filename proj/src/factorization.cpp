#include <algorithm>
#include <map>

#include "okbe/factorization.hpp"

namespace okbe {

namespace {

// High-level action vector of a non-site tuple; the same for every
// high-level state by construction, which is checked here.
std::vector<Index> default_alpha(const Ctmdp& c, Index x, Index a) {
  std::vector<Index> alpha(c.hl.size(), 0);
  for (const auto& f : c.F.factors) {
    Index first = -1;
    for (Index zg = 0; zg < f.given_size; ++zg) {
      const auto& d = f.at(zg, x, a);
      require(d.size() == 1, ErrorCode::Validation,
              "default output at (" + std::to_string(x) + ", " + std::to_string(a) + ") is not deterministic");
      if (first < 0) first = d[0].first;
      require(d[0].first == first, ErrorCode::Validation,
              "default output at (" + std::to_string(x) + ", " + std::to_string(a) +
                  ") depends on the high-level state");
    }
    alpha[f.target] = first;
  }
  return alpha;
}

}  // namespace

std::vector<Region> identify_regions(const Ctmdp& c) {
  c.validate();
  const int X = c.base->num_states(), A = c.base->num_actions(), M = c.base->num_modes();
  std::vector<Region> out;
  for (Index m = 0; m < M; ++m) {
    std::map<std::vector<Index>, size_t> by_alpha;
    std::vector<Region> sites;
    for (Index x = 0; x < X; ++x)
      for (Index a = 0; a < A; ++a) {
        size_t i = static_cast<size_t>(x) * A + a;
        if (c.is_site(x, a)) {
          Region r;
          r.is_default = false;
          r.mode = m;
          r.members.assign(static_cast<size_t>(X) * A, 0);
          r.members[i] = 1;
          std::vector<Index> parts(c.hl.size() + 1, 0);
          parts[0] = x;
          r.alpha = c.afford(parts, a).front().first;
          sites.push_back(std::move(r));
          continue;
        }
        auto alpha = default_alpha(c, x, a);
        auto it = by_alpha.find(alpha);
        if (it == by_alpha.end()) {
          Region r;
          r.alpha = alpha;
          r.mode = m;
          r.members.assign(static_cast<size_t>(X) * A, 0);
          it = by_alpha.emplace(alpha, out.size()).first;
          out.push_back(std::move(r));
        }
        out[it->second].members[i] = 1;
      }
    for (auto& r : sites) out.push_back(std::move(r));
  }
  for (size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

Spk spk(const TransitionKernel& chain, int max_t) {
  require(chain.num_actions() == 1, ErrorCode::Validation, "state-prediction kernel needs a single-action chain");
  require(max_t >= 0, ErrorCode::Config, "negative horizon");
  const int n = chain.num_states();
  Spk out;
  out.num_states = n;
  out.max_t = max_t;
  out.by_time.assign(max_t + 1, std::vector<double>(static_cast<size_t>(n) * n, 0.0));
  for (Index z = 0; z < n; ++z) out.by_time[0][static_cast<size_t>(z) * n + z] = 1.0;
  for (int t = 0; t < max_t; ++t) {
    const auto& cur = out.by_time[t];
    auto& nxt = out.by_time[t + 1];
    for (Index z = 0; z < n; ++z)
      for (Index y = 0; y < n; ++y) {
        double w = cur[static_cast<size_t>(z) * n + y];
        if (w == 0.0) continue;
        for (const auto& tr : chain.row(y, 0)) nxt[static_cast<size_t>(z) * n + tr.next] += w * tr.prob;
      }
  }
  return out;
}

HlEvent hl_event_functions(const TransitionKernel& chain, const std::vector<double>& f_goal,
                           const std::vector<double>& f_constraint, const std::vector<double>& f_region, int max_t) {
  require(chain.num_actions() == 1, ErrorCode::Validation, "event functions need a single-action chain");
  const int n = chain.num_states();
  require(f_goal.size() == static_cast<size_t>(n) && f_constraint.size() == static_cast<size_t>(n) &&
              f_region.size() == static_cast<size_t>(n),
          ErrorCode::Validation, "event-function inputs have the wrong length");
  std::vector<double> f3(n);
  for (Index z = 0; z < n; ++z) f3[z] = (1.0 - f_goal[z]) * f_constraint[z] * f_region[z];
  HlEvent out;
  out.num_states = n;
  out.max_t = max_t;
  const size_t nn = static_cast<size_t>(n) * n;
  std::vector<double> alive(nn, 0.0);
  for (Index z = 0; z < n; ++z) alive[static_cast<size_t>(z) * n + z] = 1.0;
  std::vector<double> cum(n, 0.0);
  for (int t = 0; t <= max_t; ++t) {
    std::vector<double> ev(nn, 0.0), nxt(nn, 0.0);
    for (Index z = 0; z < n; ++z)
      for (Index y = 0; y < n; ++y) {
        double w = alive[static_cast<size_t>(z) * n + y];
        if (w == 0.0) continue;
        double e = w * (1.0 - f3[y]);
        ev[static_cast<size_t>(z) * n + y] = e;
        cum[z] += e;
        double c = w * f3[y];
        if (c == 0.0) continue;
        for (const auto& tr : chain.row(y, 0)) nxt[static_cast<size_t>(z) * n + tr.next] += c * tr.prob;
      }
    out.alive.push_back(alive);
    out.stef.push_back(std::move(ev));
    out.cef.push_back(cum);
    alive.swap(nxt);
  }
  return out;
}

std::vector<double> base_complement_cef(const Stok& eta, Index x) {
  const int T = eta.horizon();
  std::vector<double> out(T);
  const auto& r = eta.row(x);
  double cum = 0.0;
  for (int t = 0; t < T; ++t) {
    for (size_t k = 0; k < r.finals.size(); ++k) cum += r.plus[k * T + t] + r.minus[k * T + t];
    out[t] = 1.0 - cum;
  }
  return out;
}

std::vector<double> time_of_first_event(const std::vector<std::vector<double>>& complement_cefs) {
  size_t T = 0;
  for (const auto& c : complement_cefs) T = std::max(T, c.size());
  std::vector<double> out(T);
  double prev = 1.0;
  for (size_t t = 0; t < T; ++t) {
    double prod = 1.0;
    for (const auto& c : complement_cefs) {
      if (c.empty()) continue;
      prod *= t < c.size() ? c[t] : c.back();
    }
    out[t] = prev - prod;
    prev = prod;
  }
  return out;
}

double ProductStok::total() const {
  double s = 0.0;
  for (const auto& a : success) s += a.prob;
  for (const auto& a : failure) s += a.prob;
  return s;
}

std::vector<OptionSpec> option_sets(const Ctmdp& c, OptionSetKind kind, size_t max_options) {
  const int X = c.base->num_states(), A = c.base->num_actions();
  std::vector<OptionSpec> out;
  auto label = [&](Index x, Index a) {
    auto it = c.site_names.find({x, a});
    if (it != c.site_names.end()) return it->second;
    std::string s = c.grid_cols > 0 ? "r" + std::to_string(x / c.grid_cols) + "c" + std::to_string(x % c.grid_cols)
                                    : "x" + std::to_string(x);
    s += ":" + (a < static_cast<Index>(c.base_action_labels.size()) ? c.base_action_labels[a] : std::to_string(a));
    return s;
  };
  auto add_tuple = [&](Index x, Index a) {
    OptionSpec o;
    o.name = label(x, a);
    o.goal = StateActionTable(X, A, 0.0);
    o.goal.at(x, a) = 1.0;
    out.push_back(std::move(o));
  };
  switch (kind) {
    case OptionSetKind::Affordance:
      for (const auto& [x, a] : c.sites()) add_tuple(x, a);
      break;
    case OptionSetKind::StateAction:
      require(static_cast<size_t>(X) * A <= max_options, ErrorCode::Config, "state-action option set is too large");
      for (Index x = 0; x < X; ++x)
        for (Index a = 0; a < A; ++a) add_tuple(x, a);
      break;
    case OptionSetKind::Explicit:
      for (const auto& g : c.base_goals) {
        OptionSpec o;
        o.name = g.name;
        o.goal = g.table;
        out.push_back(std::move(o));
      }
      break;
  }
  require(out.size() <= max_options, ErrorCode::Config, "option set is too large");
  return out;
}

Ensemble ensemble_solve(const Ctmdp& c, Index mode, const FiOptions& fi, bool from_affordance) {
  Ensemble e;
  e.goals = from_affordance ? goal_functions_from_affordance(c) : c.base_goals;
  require(!e.goals.empty(), ErrorCode::Validation, "no goals to solve for");
  ConstraintFunction base{c.base_constraint};
  for (size_t i = 0; i < e.goals.size(); ++i) {
    Tmdp t;
    t.kernel = c.base;
    t.mode = mode;
    t.goal = e.goals[i];
    t.constraint = constraint_with_other_goals(base, e.goals, i);
    auto sol = feasibility_iteration(t, fi);
    e.options.push_back(make_option(sol, t, static_cast<int>(i)));
    e.tmdps.push_back(std::move(t));
    e.solutions.push_back(std::move(sol));
  }
  return e;
}

namespace {

KernelPtr product_kernel(const Ctmdp& c) {
  std::vector<const TransitionKernel*> driven;
  for (const auto& h : c.hl) driven.push_back(h.kernel.get());
  const ModeFunction* zeta = c.zeta.map.empty() ? nullptr : &c.zeta;
  if (driven.empty()) return c.base;
  return std::make_shared<const TransitionKernel>(compose_kernels(driven, &c.F, zeta, c.base.get()));
}

}  // namespace

Tmdp product_tmdp(const Ctmdp& c, const StateActionTable& base_goal, bool restrict_to_region, int region,
                  const std::vector<Region>* regions) {
  c.validate();
  const int X = c.base->num_states(), A = c.base->num_actions();
  require(base_goal.num_states == X && base_goal.num_actions == A, ErrorCode::Validation,
          "goal does not match the base space");
  const Region* r = nullptr;
  if (restrict_to_region) {
    require(regions && region >= 0 && region < static_cast<int>(regions->size()), ErrorCode::Validation,
            "region index out of range");
    r = &(*regions)[region];
  }
  auto layout = c.layout();
  const size_t S = layout.total();
  Tmdp t;
  t.kernel = product_kernel(c);
  t.mode = 0;
  if (c.hl.empty()) t.mode = r ? r->mode : 0;
  t.goal.table = StateActionTable(static_cast<int>(S), A, 0.0);
  t.constraint.table = StateActionTable(static_cast<int>(S), A, 0.0);
  for (size_t s = 0; s < S; ++s) {
    auto parts = layout.decode(s);
    for (Index a = 0; a < A; ++a) {
      double g = base_goal(parts[0], a);
      t.goal.table.at(static_cast<Index>(s), a) = g;
      double fc = c.product_constraint(parts, a);
      if (r && !r->members[static_cast<size_t>(parts[0]) * A + a] && g == 0.0) fc = 0.0;
      t.constraint.table.at(static_cast<Index>(s), a) = fc;
    }
  }
  return t;
}

Tmdp product_task_tmdp(const Ctmdp& c) {
  c.validate();
  const int A = c.base->num_actions();
  auto layout = c.layout();
  const size_t S = layout.total();
  Tmdp t;
  t.kernel = product_kernel(c);
  t.goal.table = StateActionTable(static_cast<int>(S), A, 0.0);
  t.constraint.table = StateActionTable(static_cast<int>(S), A, 0.0);
  for (size_t s = 0; s < S; ++s) {
    auto parts = layout.decode(s);
    bool goal = !c.task_goal.empty() && c.task_goal.holds(parts);
    bool forbidden = !c.task_forbidden.empty() && c.task_forbidden.holds(parts);
    for (Index a = 0; a < A; ++a) {
      t.goal.table.at(static_cast<Index>(s), a) = goal ? 1.0 : 0.0;
      t.constraint.table.at(static_cast<Index>(s), a) = forbidden ? 0.0 : c.product_constraint(parts, a);
    }
  }
  return t;
}

}  // namespace okbe
