#include "okbe/empowerment.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace okbe {

void Channel::validate() const {
  require(!rows.empty(), ErrorCode::Validation, "channel has no inputs");
  for (size_t i = 0; i < rows.size(); ++i) {
    double s = 0.0;
    for (const auto& [y, p] : rows[i]) {
      require(y >= 0 && y < num_outputs, ErrorCode::Validation, "channel output index out of range");
      require(p >= 0.0, ErrorCode::Validation, "negative channel probability");
      s += p;
    }
    require(std::abs(s - 1.0) <= 1e-9, ErrorCode::Validation,
            "channel row " + std::to_string(i) + " sums to " + std::to_string(s));
  }
}

Channel channel_from_dense(const std::vector<std::vector<double>>& rows) {
  Channel c;
  c.num_outputs = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  for (const auto& r : rows) {
    require(static_cast<int>(r.size()) == c.num_outputs, ErrorCode::Validation, "ragged channel matrix");
    std::vector<std::pair<int, double>> sparse;
    for (int y = 0; y < c.num_outputs; ++y)
      if (r[y] != 0.0) sparse.emplace_back(y, r[y]);
    c.rows.push_back(std::move(sparse));
  }
  return c;
}

Channel build_channel_primitive(const TransitionKernel& k, Index start, int n, Index mode, size_t max_rows) {
  require(n >= 0, ErrorCode::Config, "negative sequence length");
  const int A = k.num_actions();
  double count = std::pow(static_cast<double>(A), n);
  require(count <= static_cast<double>(max_rows), ErrorCode::Config, "too many action sequences for the channel");
  Channel c;
  c.num_outputs = k.num_states();
  const size_t rows = static_cast<size_t>(count);
  for (size_t r = 0; r < rows; ++r) {
    std::map<Index, double> dist{{start, 1.0}};
    size_t code = r;
    std::string label;
    for (int step = 0; step < n; ++step) {
      Index a = static_cast<Index>(code % A);
      code /= A;
      label += (step ? "," : "") + std::to_string(a);
      std::map<Index, double> nxt;
      for (const auto& [x, p] : dist)
        for (const auto& tr : k.row(x, a, mode)) nxt[tr.next] += p * tr.prob;
      dist.swap(nxt);
    }
    c.rows.emplace_back(dist.begin(), dist.end());
    c.input_labels.push_back(label);
  }
  return c;
}

Channel build_channel_options(const GoalKernel& g, const std::vector<Index>& start, int n, size_t max_rows,
                              bool prune_infeasible) {
  require(n >= 0, ErrorCode::Config, "negative sequence length");
  const int O = static_cast<int>(g.options().size());
  require(O > 0 || n == 0, ErrorCode::Config, "empty option set");
  double count = std::pow(static_cast<double>(O), n);
  require(count <= static_cast<double>(max_rows), ErrorCode::Config, "too many option sequences for the channel");
  auto layout = g.ctmdp().layout();
  const size_t s0 = layout.encode(start);
  std::map<std::tuple<size_t, int, int>, int> out_ids;
  auto out_id = [&](size_t s, int t, int failed) {
    auto [it, inserted] = out_ids.emplace(std::make_tuple(s, t, failed), static_cast<int>(out_ids.size()));
    return it->second;
  };
  Channel c;
  const size_t rows = static_cast<size_t>(count);
  for (size_t r = 0; r < rows; ++r) {
    std::vector<Atom> alive{{s0, 0, 1.0}};
    std::map<int, double> row;
    size_t code = r;
    std::string label;
    bool skip = false;
    for (int step = 0; step < n; ++step) {
      int o = static_cast<int>(code % O);
      code /= O;
      label += (step ? "," : "") + g.options()[o].name;
      if (prune_infeasible) {
        bool any = false;
        for (const auto& a : alive) any |= g.apply(a.state, o).initiation_kappa > 0.0;
        if (!any) {
          skip = true;
          break;
        }
      }
      std::vector<Atom> next, fail;
      g.apply_to(alive, o, next, fail);
      for (const auto& f : fail) row[out_id(f.state, f.time, 1)] += f.prob;
      alive.swap(next);
    }
    if (skip) continue;
    for (const auto& a : alive) row[out_id(a.state, a.time, 0)] += a.prob;
    c.rows.emplace_back(row.begin(), row.end());
    c.input_labels.push_back(label);
  }
  c.num_outputs = static_cast<int>(out_ids.size());
  return c;
}

EmpowermentResult channel_capacity(const Channel& c, double tol, int max_iters) {
  c.validate();
  const int nx = c.num_inputs(), ny = c.num_outputs;
  EmpowermentResult res;
  std::vector<double> p(nx, 1.0 / nx), q(ny), d(nx);
  for (int it = 0; it < max_iters; ++it) {
    std::fill(q.begin(), q.end(), 0.0);
    for (int x = 0; x < nx; ++x)
      for (const auto& [y, w] : c.rows[x]) q[y] += p[x] * w;
    double info = 0.0, upper = 0.0;
    for (int x = 0; x < nx; ++x) {
      double dx = 0.0;
      for (const auto& [y, w] : c.rows[x])
        if (w > 0.0) dx += w * std::log2(w / q[y]);
      d[x] = dx;
      info += p[x] * dx;
      upper = x == 0 ? dx : std::max(upper, dx);
    }
    res.trace.push_back(info);
    res.capacity = std::max(0.0, info);
    res.gap = upper - info;
    res.iterations = it + 1;
    res.input_dist = p;
    if (res.gap <= tol) return res;
    double z = 0.0;
    for (int x = 0; x < nx; ++x) {
      p[x] *= std::exp2(d[x] - upper);
      z += p[x];
    }
    for (double& v : p) v /= z;
  }
  throw Error(ErrorCode::NonConvergence,
              "channel capacity did not converge; duality gap " + std::to_string(res.gap));
}

double option_empowerment(const GoalKernel& g, const std::vector<Index>& s, int n) {
  if (g.options().empty()) return 0.0;
  return channel_capacity(build_channel_options(g, s, n)).capacity;
}

double empowerment_gain(const GoalKernel& g, const std::vector<Index>& before, const std::vector<Index>& after,
                        int n) {
  if (before == after) return 0.0;
  return option_empowerment(g, after, n) - option_empowerment(g, before, n);
}

int valence_plan_selection(const GoalKernel& g, const std::vector<Index>& start,
                           const std::vector<std::vector<int>>& plans, int n, std::vector<double>* valences) {
  require(!plans.empty(), ErrorCode::Config, "no candidate plans");
  auto layout = g.ctmdp().layout();
  std::map<size_t, double> cache;
  auto emp = [&](size_t s) {
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;
    double e = option_empowerment(g, layout.decode(s), n);
    cache.emplace(s, e);
    return e;
  };
  const double base = emp(layout.encode(start));
  std::vector<double> vals;
  for (const auto& plan : plans) {
    std::vector<Atom> alive{{layout.encode(start), 0, 1.0}}, failed;
    for (int o : plan) {
      std::vector<Atom> next, fail;
      g.apply_to(alive, o, next, fail);
      failed.insert(failed.end(), fail.begin(), fail.end());
      alive.swap(next);
    }
    double v = 0.0;
    for (const auto& a : alive) v += a.prob * emp(a.state);
    for (const auto& a : failed) v += a.prob * emp(a.state);
    vals.push_back(v - base);
  }
  int best = 0;
  for (size_t i = 1; i < vals.size(); ++i)
    if (vals[i] > vals[best] + 1e-12) best = static_cast<int>(i);
  if (valences) *valences = vals;
  return best;
}

}  // namespace okbe
