#include "okbe/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace okbe {

FeSolution solve_first_exit(const TransitionKernel& k, Index goal, double cost, Index mode) {
  require(cost > 0.0 && std::isfinite(cost), ErrorCode::Config, "first-exit cost must be positive");
  require(goal >= 0 && goal < k.num_states(), ErrorCode::Config, "goal state out of range");
  require(k.is_deterministic(), ErrorCode::Validation, "first-exit solver needs a deterministic kernel");
  const int n = k.num_states(), A = k.num_actions();
  // Hop counts by breadth-first search over reversed edges.
  std::vector<std::vector<Index>> preds(n);
  for (Index x = 0; x < n; ++x)
    for (Index a = 0; a < A; ++a) preds[k.successor(x, a, mode)].push_back(x);
  std::vector<long> hops(n, -1);
  hops[goal] = 0;
  std::deque<Index> q{goal};
  while (!q.empty()) {
    Index y = q.front();
    q.pop_front();
    for (Index x : preds[y])
      if (hops[x] < 0 && x != goal) {
        hops[x] = hops[y] + 1;
        q.push_back(x);
      }
  }
  FeSolution s;
  s.cost = cost;
  s.goal = goal;
  s.value.assign(n, 0.0);
  s.reachable.assign(n, 0);
  s.policy.assign(n, 0);
  for (Index x = 0; x < n; ++x) {
    if (hops[x] < 0) continue;
    s.reachable[x] = 1;
    s.value[x] = cost * static_cast<double>(hops[x]);
    if (x == goal) continue;
    long best = -1;
    for (Index a = 0; a < A; ++a) {
      long h = hops[k.successor(x, a, mode)];
      if (h >= 0 && (best < 0 || h < best)) {
        best = h;
        s.policy[x] = a;
      }
    }
  }
  return s;
}

FeStok fe_to_stok(const FeSolution& sol, int horizon) {
  const int n = static_cast<int>(sol.value.size());
  long tmax = 0;
  for (Index x = 0; x < n; ++x)
    if (sol.reachable[x]) tmax = std::max(tmax, std::lround(sol.value[x] / sol.cost));
  int H = std::max<int>(horizon, static_cast<int>(tmax) + 1);
  FeStok out;
  out.stok = Stok(n, H);
  out.kappa.assign(n, 0.0);
  out.policy = sol.policy;
  for (Index x = 0; x < n; ++x) {
    if (sol.reachable[x]) {
      out.kappa[x] = 1.0;
      out.stok.add(x, sol.goal, static_cast<int>(std::lround(sol.value[x] / sol.cost)), 1.0, 0.0);
    } else {
      out.stok.add(x, x, 0, 0.0, 1.0);
    }
  }
  out.stok.terminal_action = sol.policy;
  return out;
}

MakeshiftStok makeshift_stok(const std::vector<Index>& policy, const TransitionKernel& k,
                             const std::vector<Index>& rewarded, const std::vector<Index>& penalized, int horizon,
                             Index mode) {
  const int n = k.num_states();
  require(policy.size() == static_cast<size_t>(n), ErrorCode::Validation, "policy has the wrong length");
  require(horizon >= 1, ErrorCode::Config, "horizon must be at least 1");
  std::vector<int> kind(n, 0);  // 1 rewarded, 2 penalized
  for (Index x : rewarded) kind.at(x) = 1;
  for (Index x : penalized) {
    require(kind.at(x) == 0, ErrorCode::Validation, "state is both rewarded and penalized");
    kind[x] = 2;
  }
  MakeshiftStok out;
  out.stok = Stok(n, horizon);
  out.residual.assign(n, 0.0);
  for (Index x0 = 0; x0 < n; ++x0) {
    if (kind[x0]) {
      out.stok.add(x0, x0, 0, kind[x0] == 1 ? 1.0 : 0.0, kind[x0] == 2 ? 1.0 : 0.0);
      continue;
    }
    std::vector<double> dist(n, 0.0), nxt(n);
    dist[x0] = 1.0;
    for (int t = 1; t < horizon; ++t) {
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (Index x = 0; x < n; ++x) {
        if (dist[x] == 0.0) continue;
        for (const auto& tr : k.row(x, policy[x], mode)) nxt[tr.next] += dist[x] * tr.prob;
      }
      for (Index f = 0; f < n; ++f) {
        if (!kind[f] || nxt[f] == 0.0) continue;
        out.stok.add(x0, f, t, kind[f] == 1 ? nxt[f] : 0.0, kind[f] == 2 ? nxt[f] : 0.0);
        nxt[f] = 0.0;
      }
      dist.swap(nxt);
    }
    for (double v : dist) out.residual[x0] += v;
  }
  out.stok.terminal_action = policy;
  return out;
}

std::vector<double> value_from_stok(const Stok& s, const std::vector<double>& reward, double gamma) {
  require(gamma >= 0.0 && gamma <= 1.0, ErrorCode::Config, "discount must lie in [0, 1]");
  const int n = s.num_states(), T = s.horizon();
  require(reward.size() == static_cast<size_t>(n), ErrorCode::Validation, "reward has the wrong length");
  std::vector<double> v(n, 0.0), pw(T);
  for (int t = 0; t < T; ++t) pw[t] = t == 0 ? 1.0 : std::pow(gamma, t);
  for (Index x = 0; x < n; ++x) {
    const auto& r = s.row(x);
    for (size_t j = 0; j < r.finals.size(); ++j)
      for (int t = 0; t < T; ++t) {
        double m = r.plus[j * T + t] + r.minus[j * T + t];
        if (m != 0.0) v[x] += m * pw[t] * reward[r.finals[j]];
      }
  }
  return v;
}

}  // namespace okbe
