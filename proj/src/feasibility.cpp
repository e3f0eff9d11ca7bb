#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "okbe/okbe.hpp"

namespace okbe {

namespace {

constexpr double kTie = 1e-12;

// Dense scratch for assembling one kernel row; tracks which final states were touched.
struct RowScratch {
  int horizon = 0;
  std::vector<double> plus, minus;
  std::vector<char> mark;
  std::vector<Index> touched;

  void reset(int n, int T) {
    horizon = T;
    plus.assign(static_cast<size_t>(n) * T, 0.0);
    minus.assign(static_cast<size_t>(n) * T, 0.0);
    mark.assign(n, 0);
    touched.clear();
  }
  void touch(Index f) {
    if (!mark[f]) {
      mark[f] = 1;
      touched.push_back(f);
    }
  }
  double* p(Index f) { return plus.data() + static_cast<size_t>(f) * horizon; }
  double* m(Index f) { return minus.data() + static_cast<size_t>(f) * horizon; }
};

}  // namespace

double Stok::success(Index start, Index final_state, int t) const {
  if (t < 0 || t >= horizon_) return 0.0;
  const auto& r = rows_[start];
  auto it = std::lower_bound(r.finals.begin(), r.finals.end(), final_state);
  if (it == r.finals.end() || *it != final_state) return 0.0;
  return r.plus[static_cast<size_t>(it - r.finals.begin()) * horizon_ + t];
}

double Stok::failure(Index start, Index final_state, int t) const {
  if (t < 0 || t >= horizon_) return 0.0;
  const auto& r = rows_[start];
  auto it = std::lower_bound(r.finals.begin(), r.finals.end(), final_state);
  if (it == r.finals.end() || *it != final_state) return 0.0;
  return r.minus[static_cast<size_t>(it - r.finals.begin()) * horizon_ + t];
}

double Stok::total_success(Index start) const {
  double s = 0.0;
  for (double v : rows_[start].plus) s += v;
  return s;
}

double Stok::total_failure(Index start) const {
  double s = 0.0;
  for (double v : rows_[start].minus) s += v;
  return s;
}

void Stok::add(Index start, Index final_state, int t, double plus, double minus) {
  require(t >= 0 && t < horizon_, ErrorCode::Internal, "stok time out of range");
  auto& r = rows_[start];
  auto it = std::lower_bound(r.finals.begin(), r.finals.end(), final_state);
  size_t k = static_cast<size_t>(it - r.finals.begin());
  if (it == r.finals.end() || *it != final_state) {
    r.finals.insert(it, final_state);
    r.plus.insert(r.plus.begin() + static_cast<long>(k * horizon_), horizon_, 0.0);
    r.minus.insert(r.minus.begin() + static_cast<long>(k * horizon_), horizon_, 0.0);
  }
  r.plus[k * horizon_ + t] += plus;
  r.minus[k * horizon_ + t] += minus;
}

void Stok::extend_horizon(int new_horizon) {
  if (new_horizon <= horizon_) return;
  for (auto& r : rows_) {
    std::vector<double> p(r.finals.size() * new_horizon, 0.0), m(r.finals.size() * new_horizon, 0.0);
    for (size_t k = 0; k < r.finals.size(); ++k)
      for (int t = 0; t < horizon_; ++t) {
        p[k * new_horizon + t] = r.plus[k * horizon_ + t];
        m[k * new_horizon + t] = r.minus[k * horizon_ + t];
      }
    r.plus.swap(p);
    r.minus.swap(m);
  }
  horizon_ = new_horizon;
}

void Stok::trim() {
  int last = 0;
  for (const auto& r : rows_)
    for (size_t k = 0; k < r.finals.size(); ++k)
      for (int t = horizon_ - 1; t > last; --t)
        if (r.plus[k * horizon_ + t] != 0.0 || r.minus[k * horizon_ + t] != 0.0) {
          last = t;
          break;
        }
  int nh = last + 1;
  if (nh == horizon_) return;
  for (auto& r : rows_) {
    std::vector<double> p(r.finals.size() * nh), m(r.finals.size() * nh);
    for (size_t k = 0; k < r.finals.size(); ++k)
      for (int t = 0; t < nh; ++t) {
        p[k * nh + t] = r.plus[k * horizon_ + t];
        m[k * nh + t] = r.minus[k * horizon_ + t];
      }
    r.plus.swap(p);
    r.minus.swap(m);
  }
  horizon_ = nh;
}

std::vector<char> feasibility_indicator(const std::vector<double>& kappa) {
  std::vector<char> out(kappa.size());
  for (size_t i = 0; i < kappa.size(); ++i) out[i] = kappa[i] > 0.0 ? 1 : 0;
  return out;
}

// Event kernels of a fixed policy, filled in time order so that every slice
// is exact in one pass. The horizon starts at T and doubles until the mass
// left beyond it is at most residual_tol.
static Stok policy_event_kernels(const TransitionKernel& P, Index mode, const StateActionTable& fg,
                                 const StateActionTable& fc, const std::vector<double>& kappa,
                                 const std::vector<Index>& policy, int T, const FiOptions& opts, double& residual) {
  const int nx = P.num_states();
  std::vector<double> f1(nx), f2(nx), m0(nx);
  for (Index i = 0; i < nx; ++i) {
    const Index a = policy[i];
    const bool feas = kappa[i] > 0.0;
    f1[i] = fg(i, a) * fc(i, a);
    f2[i] = feas ? (1.0 - fg(i, a)) * fc(i, a) : 0.0;
    m0[i] = feas ? 1.0 - fc(i, a) : 1.0;
  }
  // Reachable final states per start, closed under successors.
  std::vector<std::vector<Index>> fin(nx);
  for (Index i = 0; i < nx; ++i) fin[i] = {i};
  for (bool grew = true; grew;) {
    grew = false;
    for (Index i = 0; i < nx; ++i) {
      if (f2[i] <= 0.0) continue;
      std::vector<Index> u = fin[i];
      for (const auto& tr : P.row(i, policy[i], mode)) {
        std::vector<Index> merged;
        std::set_union(u.begin(), u.end(), fin[tr.next].begin(), fin[tr.next].end(), std::back_inserter(merged));
        u.swap(merged);
      }
      if (u.size() != fin[i].size()) {
        fin[i].swap(u);
        grew = true;
      }
    }
  }
  // Positions of each successor's finals inside the start's finals.
  struct Link {
    Index next;
    double w;
    std::vector<size_t> pos;
  };
  std::vector<std::vector<Link>> links(nx);
  for (Index i = 0; i < nx; ++i) {
    if (f2[i] <= 0.0) continue;
    for (const auto& tr : P.row(i, policy[i], mode)) {
      Link l{tr.next, f2[i] * tr.prob, {}};
      for (Index f : fin[tr.next])
        l.pos.push_back(static_cast<size_t>(std::lower_bound(fin[i].begin(), fin[i].end(), f) - fin[i].begin()));
      links[i].push_back(std::move(l));
    }
  }
  // Time-major storage: slice t of start i is [t * |fin_i|, (t + 1) * |fin_i|).
  std::vector<std::vector<double>> pl(nx), mi(nx);
  std::vector<double> total(nx, 0.0);
  for (Index i = 0; i < nx; ++i) {
    const size_t F = fin[i].size();
    pl[i].assign(F * T, 0.0);
    mi[i].assign(F * T, 0.0);
    size_t k = static_cast<size_t>(std::lower_bound(fin[i].begin(), fin[i].end(), i) - fin[i].begin());
    pl[i][k] = f1[i];
    mi[i][k] = m0[i];
    total[i] = f1[i] + m0[i];
  }
  for (int t = 1;; ++t) {
    if (t == T) {
      residual = 0.0;
      for (Index i = 0; i < nx; ++i) residual = std::max(residual, std::abs(1.0 - total[i]));
      if (residual <= opts.residual_tol) break;
      require(T * 2 <= opts.max_horizon, ErrorCode::NonConvergence,
              "event kernels still carry mass " + std::to_string(residual) + " beyond the maximum horizon");
      T *= 2;
      for (Index i = 0; i < nx; ++i) {
        pl[i].resize(fin[i].size() * T, 0.0);
        mi[i].resize(fin[i].size() * T, 0.0);
      }
    }
    for (Index i = 0; i < nx; ++i) {
      const size_t F = fin[i].size();
      double* dp = pl[i].data() + t * F;
      double* dm = mi[i].data() + t * F;
      for (const auto& l : links[i]) {
        const size_t Fn = l.pos.size();
        const double* sp = pl[l.next].data() + (t - 1) * Fn;
        const double* sm = mi[l.next].data() + (t - 1) * Fn;
        for (size_t k = 0; k < Fn; ++k) {
          dp[l.pos[k]] += l.w * sp[k];
          dm[l.pos[k]] += l.w * sm[k];
        }
      }
      for (size_t k = 0; k < F; ++k) total[i] += dp[k] + dm[k];
    }
  }
  Stok out(nx, T);
  for (Index i = 0; i < nx; ++i) {
    auto& r = out.row(i);
    const size_t F = fin[i].size();
    for (size_t k = 0; k < F; ++k) {
      bool any = false;
      for (int t = 0; t < T && !any; ++t) any = pl[i][t * F + k] != 0.0 || mi[i][t * F + k] != 0.0;
      if (!any) continue;
      r.finals.push_back(fin[i][k]);
      for (int t = 0; t < T; ++t) {
        r.plus.push_back(pl[i][t * F + k]);
        r.minus.push_back(mi[i][t * F + k]);
      }
    }
  }
  return out;
}

FiResult feasibility_iteration(const Tmdp& tm, const FiOptions& opts) {
  tm.validate();
  require(opts.horizon_hint >= 1, ErrorCode::Config, "horizon must be at least 1");
  require(opts.tol > 0.0, ErrorCode::Config, "tolerance must be positive");
  const TransitionKernel& P = *tm.kernel;
  const int nx = P.num_states(), na = P.num_actions();
  const Index mode = tm.mode;
  const auto& fg = tm.goal.table;
  const auto& fc = tm.constraint.table;

  int T = opts.horizon_hint;
  FiResult res;
  res.kappa.assign(nx, 0.0);
  res.policy.assign(nx, 0);
  res.nu.assign(nx, 0.0);
  res.eta = Stok(nx, T);

  RowScratch sc;
  sc.reset(nx, T);
  std::vector<double> q(na);
  long sweep_cap = opts.max_sweeps > 0 ? opts.max_sweeps : 10L * nx * T;

  while (true) {
    ++res.sweeps;
    double dk = 0.0, dec = -std::numeric_limits<double>::infinity(), de = 0.0, dn = 0.0;
    for (Index i = 0; i < nx; ++i) {
      // Feasibility maximization.
      double best = -1.0;
      for (Index a = 0; a < na; ++a) {
        double f1 = fg(i, a) * fc(i, a), f2 = (1.0 - fg(i, a)) * fc(i, a);
        double ek = 0.0;
        if (f2 > 0.0)
          for (const auto& tr : P.row(i, a, mode)) ek += tr.prob * res.kappa[tr.next];
        q[a] = f1 + f2 * ek;
        best = std::max(best, q[a]);
      }
      double old_k = res.kappa[i];
      res.kappa[i] = best;
      dk = std::max(dk, std::abs(best - old_k));
      dec = std::max(dec, old_k - best);

      // Time minimization over the maximizing set; lowest index wins ties.
      Index pick = 0;
      if (best > 0.0) {
        double best_nu = 0.0;
        bool have = false;
        for (Index a = 0; a < na; ++a) {
          if (q[a] < best - kTie * best) continue;
          double f2 = (1.0 - fg(i, a)) * fc(i, a);
          double en = 0.0;
          if (f2 > 0.0)
            for (const auto& tr : P.row(i, a, mode)) en += tr.prob * res.nu[tr.next];
          double v = f2 * en;
          if (!have || v < best_nu - kTie * std::max(1.0, std::abs(best_nu))) {
            best_nu = v;
            pick = a;
            have = true;
          }
        }
      }
      res.policy[i] = pick;
      const double f1 = fg(i, pick) * fc(i, pick);
      const double f2 = (1.0 - fg(i, pick)) * fc(i, pick);
      // Expected steps to termination; infeasible states stop at once.
      {
        double en = 0.0;
        if (best > 0.0 && f2 > 0.0)
          for (const auto& tr : P.row(i, pick, mode)) en += tr.prob * res.nu[tr.next];
        double nn = 1.0 + f2 * en;
        dn = std::max(dn, std::abs(nn - res.nu[i]) / std::max(1.0, nn));
        res.nu[i] = nn;
      }

      // Event kernels for start state i.
      const bool feas = res.kappa[i] > 0.0;
      sc.touch(i);
      sc.p(i)[0] = f1;
      sc.m(i)[0] = feas ? (1.0 - fc(i, pick)) : 1.0;
      if (feas && f2 > 0.0) {
        for (const auto& tr : P.row(i, pick, mode)) {
          const auto& r = res.eta.row(tr.next);
          const double w = f2 * tr.prob;
          for (size_t k = 0; k < r.finals.size(); ++k) {
            Index f = r.finals[k];
            sc.touch(f);
            double* dp = sc.p(f);
            double* dm = sc.m(f);
            const double* sp = r.plus.data() + k * T;
            const double* sm = r.minus.data() + k * T;
            for (int t = 1; t < T; ++t) {
              dp[t] += w * sp[t - 1];
              dm[t] += w * sm[t - 1];
            }
          }
        }
      }
      // Compare with the previous row and store.
      auto& row = res.eta.row(i);
      std::sort(sc.touched.begin(), sc.touched.end());
      for (size_t k = 0; k < row.finals.size(); ++k) {
        Index f = row.finals[k];
        if (!sc.mark[f]) {
          for (int t = 0; t < T; ++t)
            de = std::max(de, std::max(std::abs(row.plus[k * T + t]), std::abs(row.minus[k * T + t])));
        }
      }
      Stok::Row nr;
      for (Index f : sc.touched) {
        const double* dp = sc.p(f);
        const double* dm = sc.m(f);
        bool any = false;
        for (int t = 0; t < T && !any; ++t) any = dp[t] != 0.0 || dm[t] != 0.0;
        auto it = std::lower_bound(row.finals.begin(), row.finals.end(), f);
        const bool had = it != row.finals.end() && *it == f;
        const size_t ko = static_cast<size_t>(it - row.finals.begin());
        for (int t = 0; t < T; ++t) {
          double op = had ? row.plus[ko * T + t] : 0.0, om = had ? row.minus[ko * T + t] : 0.0;
          de = std::max(de, std::max(std::abs(dp[t] - op), std::abs(dm[t] - om)));
        }
        if (any) {
          nr.finals.push_back(f);
          nr.plus.insert(nr.plus.end(), dp, dp + T);
          nr.minus.insert(nr.minus.end(), dm, dm + T);
        }
        std::fill(sc.p(f), sc.p(f) + T, 0.0);
        std::fill(sc.m(f), sc.m(f) + T, 0.0);
        sc.mark[f] = 0;
      }
      sc.touched.clear();
      row = std::move(nr);
    }
    if (opts.record_trace) {
      res.trace.kappa_change.push_back(dk);
      res.trace.kappa_decrease.push_back(dec);
      res.trace.eta_change.push_back(de);
    }
    res.kappa_residual = dk;
    res.eta_residual = de;

    if (dk < opts.tol && de < opts.tol && dn < opts.tol) {
      // The policy is settled; refill the kernels exactly, growing the
      // horizon until the mass beyond it is negligible.
      res.eta = policy_event_kernels(P, mode, fg, fc, res.kappa, res.policy, T, opts, res.horizon_residual);
      break;
    }
    if (res.sweeps >= sweep_cap)
      fail(ErrorCode::NonConvergence, "feasibility iteration did not converge after " + std::to_string(res.sweeps) +
                                          " sweeps (kappa residual " + std::to_string(dk) + ", eta residual " +
                                          std::to_string(de) + ")");
  }
  res.eta.terminal_action = res.policy;
  return res;
}

double termination_probability(double kappa, double fg, double fc) {
  if (kappa > 0.0) return fg * fc + (1.0 - fc);
  return 1.0;
}

OptionObj make_option(const FiResult& sol, const Tmdp& t, int goal_index) {
  OptionObj o;
  o.policy = sol.policy;
  o.kappa = sol.kappa;
  o.goal_index = goal_index;
  o.stok = sol.eta;
  o.termination = StateActionTable(t.num_states(), t.num_actions(), 0.0);
  for (Index x = 0; x < t.num_states(); ++x)
    for (Index a = 0; a < t.num_actions(); ++a)
      o.termination.at(x, a) = termination_probability(sol.kappa[x], t.goal.table(x, a), t.constraint.table(x, a));
  return o;
}

TrajectoryEvent trajectory_stef(const std::vector<std::pair<Index, Index>>& traj, const Tmdp& t) {
  TrajectoryEvent ev;
  double survive = 1.0;
  for (const auto& [x, a] : traj) {
    require(x >= 0 && x < t.num_states() && a >= 0 && a < t.num_actions(), ErrorCode::Validation,
            "trajectory step out of range");
    double fg = t.goal.table(x, a), fc = t.constraint.table(x, a);
    ev.plus_by_time.push_back(survive * fg * fc);
    ev.minus_by_time.push_back(survive * (1.0 - fc));
    survive *= (1.0 - fg) * fc;
  }
  if (!traj.empty()) {
    ev.plus = ev.plus_by_time.back();
    ev.minus = ev.minus_by_time.back();
  }
  return ev;
}

double max_stok_difference(const Stok& a, const Stok& b) {
  require(a.num_states() == b.num_states(), ErrorCode::Validation, "kernels have different state counts");
  int T = std::max(a.horizon(), b.horizon());
  double d = 0.0;
  for (Index i = 0; i < a.num_states(); ++i) {
    std::vector<Index> fs = a.row(i).finals;
    fs.insert(fs.end(), b.row(i).finals.begin(), b.row(i).finals.end());
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
    for (Index f : fs)
      for (int t = 0; t < T; ++t) {
        d = std::max(d, std::abs(a.success(i, f, t) - b.success(i, f, t)));
        d = std::max(d, std::abs(a.failure(i, f, t) - b.failure(i, f, t)));
      }
  }
  return d;
}

}  // namespace okbe
