#include "okbe/okbe_c.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "okbe/empowerment.hpp"
#include "okbe/scenarios.hpp"

struct okbe_scenario {
  okbe::Scenario s;
};

struct okbe_solution {
  okbe::Ensemble e;
  std::vector<std::string> names;
};

struct okbe_plan {
  std::shared_ptr<okbe::GoalKernel> g;
  std::vector<okbe::Index> start;
  okbe::PlanResult r;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
int guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return OKBE_OK;
  } catch (const okbe::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OKBE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return OKBE_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  okbe::require(p != nullptr, okbe::ErrorCode::Config, std::string(what) + " is null");
}

void need_len(size_t have, size_t want) {
  okbe::require(have >= want, okbe::ErrorCode::Config,
                "output buffer holds " + std::to_string(have) + " values, need " + std::to_string(want));
}

okbe::FiOptions fi_of(const okbe_config* cfg) {
  okbe::FiOptions fi;
  if (!cfg) return fi;
  okbe::require(cfg->horizon >= 1, okbe::ErrorCode::Config, "horizon must be at least 1");
  okbe::require(cfg->tol > 0.0 && cfg->tol < 1.0, okbe::ErrorCode::Config, "tolerance must lie in (0, 1)");
  fi.horizon_hint = cfg->horizon;
  fi.tol = cfg->tol;
  fi.residual_tol = std::max(cfg->tol, fi.residual_tol);
  return fi;
}

okbe::OptionSetKind kind_of(const okbe::Scenario& s, const okbe_config* cfg) {
  if (!cfg || cfg->option_set == OKBE_OPTIONS_DEFAULT) return s.option_set;
  switch (cfg->option_set) {
    case OKBE_OPTIONS_AFFORDANCE: return okbe::OptionSetKind::Affordance;
    case OKBE_OPTIONS_STATE_ACTION: return okbe::OptionSetKind::StateAction;
    case OKBE_OPTIONS_EXPLICIT: return okbe::OptionSetKind::Explicit;
  }
  okbe::fail(okbe::ErrorCode::Config, "unknown option set " + std::to_string(cfg->option_set));
}

std::shared_ptr<okbe::GoalKernel> kernel_of(const okbe::Scenario& s, const okbe_config* cfg) {
  bool macros = !cfg || cfg->use_macros;
  return okbe::make_goal_kernel(s, kind_of(s, cfg), macros, fi_of(cfg));
}

okbe::PlanOptions plan_options_of(const okbe::Scenario& s, const okbe_config* cfg) {
  okbe::PlanOptions po;
  po.max_depth = cfg && cfg->max_depth > 0 ? cfg->max_depth : s.plan_depth;
  po.prune = cfg && cfg->prune_sublimation;
  return po;
}

const okbe::Stok& eta_of(const okbe_solution* sol, int goal) {
  need(sol, "solution");
  okbe::require(goal >= 0 && goal < static_cast<int>(sol->e.solutions.size()), okbe::ErrorCode::Config,
                "goal index out of range");
  return sol->e.solutions[goal].eta;
}

std::vector<double> empowerment_map(const okbe::Scenario& s, const okbe_config* cfg, int channel, int n,
                                    const std::vector<okbe::Index>& parts0) {
  okbe::require(n >= 1, okbe::ErrorCode::Config, "empowerment horizon must be at least 1");
  const okbe::Ctmdp& c = s.c;
  const int X = c.base->num_states();
  std::vector<double> out(X, 0.0);
  std::shared_ptr<okbe::GoalKernel> g;
  if (channel == OKBE_CHANNEL_OPTIONS) g = kernel_of(s, cfg);
  else okbe::require(channel == OKBE_CHANNEL_PRIMITIVE, okbe::ErrorCode::Config, "unknown channel kind");
  for (okbe::Index x = 0; x < X; ++x) {
    auto parts = parts0;
    parts[0] = x;
    if (g) {
      out[x] = okbe::option_empowerment(*g, parts, n);
    } else {
      auto ch = okbe::build_channel_primitive(*c.base, x, n, c.mode_of(parts));
      out[x] = okbe::channel_capacity(ch).capacity;
    }
  }
  return out;
}

}  // namespace

extern "C" {

const char* okbe_last_error_message(void) { return g_last_error.c_str(); }

const char* okbe_version(void) { return "1.0.0"; }

int okbe_builtin_count(void) { return static_cast<int>(okbe::builtin_names().size()); }

const char* okbe_builtin_name(int i) {
  static const std::vector<std::string> names = okbe::builtin_names();
  if (i < 0 || i >= static_cast<int>(names.size())) return nullptr;
  return names[i].c_str();
}

int okbe_scenario_builtin(const char* name, okbe_scenario** out) {
  return guard([&] {
    need(name, "name");
    need(out, "out");
    auto h = std::make_unique<okbe_scenario>();
    h->s = okbe::build_builtin(name);
    *out = h.release();
  });
}

int okbe_scenario_load(const char* path, okbe_scenario** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto h = std::make_unique<okbe_scenario>();
    h->s = okbe::load_scenario(path);
    *out = h.release();
  });
}

int okbe_scenario_open(const char* name_or_path, okbe_scenario** out) {
  return guard([&] {
    need(name_or_path, "scenario");
    need(out, "out");
    std::string n = name_or_path;
    auto h = std::make_unique<okbe_scenario>();
    bool builtin = false;
    for (const auto& b : okbe::builtin_names()) builtin = builtin || b == n;
    if (builtin && !std::filesystem::exists(n)) h->s = okbe::build_builtin(n);
    else h->s = okbe::load_scenario(n);
    *out = h.release();
  });
}

int okbe_scenario_save(const okbe_scenario* s, const char* path) {
  return guard([&] {
    need(s, "scenario");
    need(path, "path");
    okbe::save_scenario(s->s, path);
  });
}

void okbe_scenario_free(okbe_scenario* s) { delete s; }

int okbe_scenario_get_info(const okbe_scenario* s, okbe_scenario_info* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    const auto& c = s->s.c;
    out->grid_rows = c.grid_rows;
    out->grid_cols = c.grid_cols;
    out->num_base_states = c.base->num_states();
    out->num_base_actions = c.base->num_actions();
    out->num_modes = c.base->num_modes();
    out->num_hl_spaces = c.num_hl();
    out->plan_depth = s->s.plan_depth;
    out->option_set = static_cast<int>(s->s.option_set);
  });
}

const char* okbe_scenario_name(const okbe_scenario* s) { return s ? s->s.name.c_str() : nullptr; }

const char* okbe_scenario_doc(const okbe_scenario* s) { return s ? s->s.doc.c_str() : nullptr; }

const char* okbe_scenario_hl_name(const okbe_scenario* s, int space) {
  if (!s || space < 0 || space >= s->s.c.num_hl()) return nullptr;
  return s->s.c.hl[space].name.c_str();
}

int okbe_scenario_hl_size(const okbe_scenario* s, int space) {
  if (!s || space < 0 || space >= s->s.c.num_hl()) return -1;
  return s->s.c.hl[space].kernel->num_states();
}

int okbe_scenario_start(const okbe_scenario* s, int32_t* out, size_t n) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    need_len(n, s->s.c.start.size());
    for (size_t i = 0; i < s->s.c.start.size(); ++i) out[i] = s->s.c.start[i];
  });
}

int okbe_scenario_check(const okbe_scenario* s, int* passed, int* total) {
  return guard([&] {
    need(s, "scenario");
    auto res = okbe::check_expectations(s->s);
    int ok = 0;
    for (const auto& r : res) ok += r.pass ? 1 : 0;
    if (passed) *passed = ok;
    if (total) *total = static_cast<int>(res.size());
  });
}

void okbe_config_default(okbe_config* cfg) {
  if (!cfg) return;
  okbe::FiOptions fi;
  cfg->horizon = fi.horizon_hint;
  cfg->tol = fi.tol;
  cfg->max_depth = 0;
  cfg->option_set = OKBE_OPTIONS_DEFAULT;
  cfg->prune_sublimation = 0;
  cfg->use_macros = 1;
}

int okbe_solve(const okbe_scenario* s, const okbe_config* cfg, okbe_solution** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    const auto& c = s->s.c;
    auto h = std::make_unique<okbe_solution>();
    bool from_affordance = c.base_goals.empty();
    h->e = okbe::ensemble_solve(c, c.mode_of(c.start), fi_of(cfg), from_affordance);
    auto sites = c.sites();
    for (size_t i = 0; i < h->e.goals.size(); ++i) {
      std::string n = h->e.goals[i].name;
      if (from_affordance && i < sites.size()) {
        auto it = c.site_names.find(sites[i]);
        if (it != c.site_names.end()) n = it->second;
      }
      h->names.push_back(n.empty() ? "goal" + std::to_string(i) : n);
    }
    *out = h.release();
  });
}

void okbe_solution_free(okbe_solution* sol) { delete sol; }

int okbe_solution_num_goals(const okbe_solution* sol) {
  return sol ? static_cast<int>(sol->e.solutions.size()) : -1;
}

const char* okbe_solution_goal_name(const okbe_solution* sol, int goal) {
  if (!sol || goal < 0 || goal >= static_cast<int>(sol->names.size())) return nullptr;
  return sol->names[goal].c_str();
}

int okbe_solution_num_states(const okbe_solution* sol) {
  if (!sol || sol->e.solutions.empty()) return -1;
  return static_cast<int>(sol->e.solutions[0].kappa.size());
}

int okbe_solution_kappa(const okbe_solution* sol, int goal, double* out, size_t n) {
  return guard([&] {
    eta_of(sol, goal);
    need(out, "out");
    const auto& k = sol->e.solutions[goal].kappa;
    need_len(n, k.size());
    std::copy(k.begin(), k.end(), out);
  });
}

int okbe_solution_policy(const okbe_solution* sol, int goal, int32_t* out, size_t n) {
  return guard([&] {
    eta_of(sol, goal);
    need(out, "out");
    const auto& p = sol->e.solutions[goal].policy;
    need_len(n, p.size());
    std::copy(p.begin(), p.end(), out);
  });
}

int okbe_solution_summary(const okbe_solution* sol, int goal, double* success, double* failure, double* mean_time,
                          size_t n) {
  return guard([&] {
    const auto& eta = eta_of(sol, goal);
    need_len(n, eta.num_states());
    const int T = eta.horizon();
    for (okbe::Index x = 0; x < eta.num_states(); ++x) {
      const auto& r = eta.row(x);
      double sp = 0.0, sf = 0.0, st = 0.0;
      for (size_t j = 0; j < r.finals.size(); ++j)
        for (int t = 0; t < T; ++t) {
          sp += r.plus[j * T + t];
          sf += r.minus[j * T + t];
          st += r.plus[j * T + t] * t;
        }
      if (success) success[x] = sp;
      if (failure) failure[x] = sf;
      if (mean_time) mean_time[x] = sp > 0.0 ? st / sp : 0.0;
    }
  });
}

int okbe_solution_sweeps(const okbe_solution* sol, int goal, long* sweeps, double* residual) {
  return guard([&] {
    eta_of(sol, goal);
    const auto& r = sol->e.solutions[goal];
    if (sweeps) *sweeps = r.sweeps;
    if (residual) *residual = std::max(r.kappa_residual, r.eta_residual);
  });
}

int okbe_plan_run(const okbe_scenario* s, const okbe_config* cfg, okbe_plan** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    auto h = std::make_unique<okbe_plan>();
    h->g = kernel_of(s->s, cfg);
    h->start = s->s.c.start;
    h->r = okbe::tree_search(*h->g, h->start, plan_options_of(s->s, cfg));
    *out = h.release();
  });
}

void okbe_plan_free(okbe_plan* p) { delete p; }

int okbe_plan_get_summary(const okbe_plan* p, okbe_plan_summary* out) {
  return guard([&] {
    need(p, "plan");
    need(out, "out");
    const auto& r = p->r;
    out->kappa = r.kappa;
    out->failure = r.failure;
    out->alive = r.alive;
    out->expected_time = r.expected_time;
    out->length = static_cast<int>(r.plan.size());
    out->generated = r.stats.generated;
    out->expanded = r.stats.expanded;
    out->pruned_options = r.stats.pruned_options;
    out->pruned_nodes = r.stats.pruned_nodes;
    out->infeasible_options = r.stats.infeasible_options;
    out->merged = r.stats.merged;
    out->seconds = r.stats.seconds;
  });
}

const char* okbe_plan_step_name(const okbe_plan* p, int step) {
  if (!p || step < 0 || step >= static_cast<int>(p->r.plan_names.size())) return nullptr;
  return p->r.plan_names[step].c_str();
}

int okbe_plan_event_maps(const okbe_plan* p, int step, double* success, double* failure, size_t n) {
  return guard([&] {
    need(p, "plan");
    okbe::require(step >= 0 && step < static_cast<int>(p->r.plan.size()), okbe::ErrorCode::Config,
                  "plan step out of range");
    const auto& c = p->g->ctmdp();
    const int X = c.base->num_states();
    need_len(n, X);
    auto lay = c.layout();
    std::vector<okbe::Atom> cur{{lay.encode(p->start), 0, 1.0}}, next, fail;
    for (int i = 0; i <= step; ++i) {
      p->g->apply_to(cur, p->r.plan[i], next, fail);
      if (i < step) cur.swap(next);
    }
    if (success) std::fill(success, success + X, 0.0);
    if (failure) std::fill(failure, failure + X, 0.0);
    for (const auto& a : next)
      if (success) success[lay.component(a.state, 0)] += a.prob;
    for (const auto& a : fail)
      if (failure) failure[lay.component(a.state, 0)] += a.prob;
  });
}

int okbe_verify(const okbe_scenario* s, const okbe_config* cfg, const char* const* plan, size_t plan_len,
                uint64_t samples, uint64_t seed, okbe_verify_result* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    auto g = kernel_of(s->s, cfg);
    std::vector<int> ids;
    if (plan) {
      for (size_t i = 0; i < plan_len; ++i) {
        need(plan[i], "plan step");
        int o = g->find_option(plan[i]);
        okbe::require(o >= 0, okbe::ErrorCode::Config, std::string("unknown option '") + plan[i] + "'");
        ids.push_back(o);
      }
    } else {
      ids = okbe::tree_search(*g, s->s.c.start, plan_options_of(s->s, cfg)).plan;
    }
    auto ev = okbe::evaluate_plan(*g, s->s.c.start, ids);
    out->p_goal = ev.p_goal;
    out->p_violation = ev.p_violation;
    out->p_alive = ev.p_alive;
    out->expected_time = ev.expected_time;
    out->mc_runs = samples;
    out->mc_goal = out->mc_violation = out->mc_alive = 0.0;
    out->mc_max_sigma = 0.0;
    if (samples == 0) return;
    auto mc = okbe::monte_carlo_plan(*g, s->s.c.start, ids, samples, seed);
    const double n = static_cast<double>(mc.runs);
    out->mc_goal = static_cast<double>(mc.goal) / n;
    out->mc_violation = static_cast<double>(mc.violation) / n;
    out->mc_alive = static_cast<double>(mc.alive) / n;
    auto sig = [&](double emp, double p) {
      double sd = std::sqrt(p * (1.0 - p) / n);
      if (sd == 0.0) return emp == p ? 0.0 : std::numeric_limits<double>::infinity();
      return std::abs(emp - p) / sd;
    };
    out->mc_max_sigma = std::max({sig(out->mc_goal, ev.p_goal), sig(out->mc_violation, ev.p_violation),
                                  sig(out->mc_alive, ev.p_alive)});
  });
}

int okbe_empowerment_map(const okbe_scenario* s, const okbe_config* cfg, int channel, int n, double* out,
                         size_t len) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    need_len(len, s->s.c.base->num_states());
    auto m = empowerment_map(s->s, cfg, channel, n, s->s.c.start);
    std::copy(m.begin(), m.end(), out);
  });
}

int okbe_empowerment_gain_map(const okbe_scenario* s, const okbe_config* cfg, int channel, int n, int space,
                              int32_t before, int32_t after, double* out, size_t len) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    const auto& c = s->s.c;
    need_len(len, c.base->num_states());
    okbe::require(space >= 0 && space < c.num_hl(), okbe::ErrorCode::Config, "high-level space out of range");
    const int size = c.hl[space].kernel->num_states();
    okbe::require(before >= 0 && before < size && after >= 0 && after < size, okbe::ErrorCode::Config,
                  "high-level value out of range");
    auto pb = c.start, pa = c.start;
    pb[space + 1] = before;
    pa[space + 1] = after;
    auto mb = empowerment_map(s->s, cfg, channel, n, pb);
    auto ma = before == after ? mb : empowerment_map(s->s, cfg, channel, n, pa);
    for (size_t i = 0; i < mb.size(); ++i) out[i] = ma[i] - mb[i];
  });
}

}  // extern "C"
