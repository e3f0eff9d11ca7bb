#include <algorithm>
#include <map>

#include "okbe/factorization.hpp"

namespace okbe {

namespace {

using AtomMap = std::map<std::pair<size_t, int>, double>;

std::vector<Atom> flatten(const AtomMap& m) {
  std::vector<Atom> out;
  out.reserve(m.size());
  for (const auto& [k, p] : m)
    if (p != 0.0) out.push_back({k.first, k.second, p});
  return out;
}

// States reachable from z under repeated application of alpha.
std::vector<char> reachable(const TransitionKernel& k, Index z, Index alpha) {
  std::vector<char> seen(k.num_states(), 0);
  std::vector<Index> stack{z};
  seen[z] = 1;
  while (!stack.empty()) {
    Index y = stack.back();
    stack.pop_back();
    for (const auto& tr : k.row(y, alpha))
      if (tr.prob > 0.0 && !seen[tr.next]) {
        seen[tr.next] = 1;
        stack.push_back(tr.next);
      }
  }
  return seen;
}

// Calls fn(z vector, weight) for every combination in the support of the
// per-space distributions.
template <typename Fn>
void for_each_combo(const std::vector<std::vector<double>>& dists, Fn&& fn) {
  const size_t K = dists.size();
  std::vector<std::vector<Index>> supp(K);
  for (size_t k = 0; k < K; ++k) {
    for (Index z = 0; z < static_cast<Index>(dists[k].size()); ++z)
      if (dists[k][z] > 0.0) supp[k].push_back(z);
    if (supp[k].empty()) return;
  }
  std::vector<size_t> pos(K, 0);
  std::vector<Index> z(K);
  while (true) {
    double w = 1.0;
    for (size_t k = 0; k < K; ++k) {
      z[k] = supp[k][pos[k]];
      w *= dists[k][z[k]];
    }
    fn(z, w);
    size_t k = 0;
    while (k < K && ++pos[k] == supp[k].size()) pos[k++] = 0;
    if (k == K) break;
  }
}

}  // namespace

GoalKernel::GoalKernel(std::shared_ptr<const Ctmdp> c, OptionSetKind kind, const FiOptions& fi)
    : c_(std::move(c)), fi_(fi) {
  require(c_ != nullptr, ErrorCode::Validation, "goal kernel without a scenario");
  c_->validate();
  layout_ = c_->layout();
  options_ = option_sets(*c_, kind);
  regions_ = identify_regions(*c_);
  const int X = c_->base->num_states(), A = c_->base->num_actions(), M = c_->base->num_modes();
  cell_region_.assign(static_cast<size_t>(M) * X, -1);
  for (const auto& r : regions_) {
    if (!r.is_default) continue;
    for (Index x = 0; x < X; ++x)
      for (Index a = 0; a < A; ++a) {
        if (!r.members[static_cast<size_t>(x) * A + a]) continue;
        int& slot = cell_region_[static_cast<size_t>(r.mode) * X + x];
        require(slot < 0 || slot == r.id, ErrorCode::Validation,
                "base state " + std::to_string(x) + " belongs to more than one default region");
        slot = r.id;
      }
  }
}

int GoalKernel::find_option(const std::string& name) const {
  for (size_t i = 0; i < options_.size(); ++i)
    if (options_[i].name == name) return static_cast<int>(i);
  return -1;
}

int GoalKernel::add_macro(const std::string& name, const std::vector<int>& sequence) {
  require(!sequence.empty(), ErrorCode::Config, "macro option needs at least one component");
  for (int o : sequence)
    require(o >= 0 && o < static_cast<int>(options_.size()), ErrorCode::Config, "macro component out of range");
  std::lock_guard<std::mutex> lock(mu_);
  OptionSpec m;
  m.name = name;
  m.sequence = sequence;
  options_.push_back(std::move(m));
  return static_cast<int>(options_.size()) - 1;
}

int GoalKernel::region_of_cell(Index x, Index mode) const {
  return cell_region_[static_cast<size_t>(mode) * c_->base->num_states() + x];
}

const BaseOption& GoalKernel::base_option(Index mode, int region, int option) const {
  std::unique_lock<std::mutex> lock(mu_);
  auto key = std::make_tuple(mode, region, option);
  auto it = base_cache_.find(key);
  if (it != base_cache_.end()) return *it->second;
  const OptionSpec& spec = options_.at(option);
  require(!spec.is_macro(), ErrorCode::Internal, "macro options have no base-space solution");
  lock.unlock();
  const auto& r = regions_.at(region);
  auto bo = std::make_unique<BaseOption>();
  bo->mode = mode;
  bo->region = region;
  bo->option = option;
  bo->tmdp.kernel = c_->base;
  bo->tmdp.mode = mode;
  bo->tmdp.goal.table = spec.goal;
  bo->tmdp.goal.name = spec.name;
  bo->tmdp.constraint.table = c_->base_constraint;
  auto& fc = bo->tmdp.constraint.table.values;
  for (size_t i = 0; i < fc.size(); ++i)
    if (!r.members[i] && spec.goal.values[i] == 0.0) fc[i] = 0.0;
  bo->sol = feasibility_iteration(bo->tmdp, fi_);
  lock.lock();
  auto [pos, inserted] = base_cache_.emplace(key, std::move(bo));
  return *pos->second;
}

ProductStok GoalKernel::product_stok(const BaseOption& bo, const std::vector<Index>& parts, bool allow_fast_path,
                                     bool terminal_check) const {
  const Ctmdp& c = *c_;
  const int X = c.base->num_states();
  const size_t K = c.hl.size();
  const auto& r = regions_.at(bo.region);
  const auto& sol = bo.sol;
  const auto& tm = bo.tmdp;
  const int T = sol.eta.horizon();
  const Index x0 = parts[0];

  std::vector<std::vector<double>> h(K);
  bool fast = allow_fast_path;
  for (size_t k = 0; k < K; ++k) {
    const auto& sp = c.hl[k];
    h[k].resize(sp.kernel->num_states());
    for (Index z = 0; z < sp.kernel->num_states(); ++z) h[k][z] = sp.constraint(z, r.alpha[k]);
    if (fast) {
      auto seen = reachable(*sp.kernel, parts[k + 1], r.alpha[k]);
      for (Index z = 0; z < sp.kernel->num_states(); ++z)
        if (seen[z] && h[k][z] != 1.0) fast = false;
    }
  }

  AtomMap succ, fail;
  std::vector<Index> full(K + 1);
  auto check_mode = [&](const std::vector<Index>& z) {
    for (size_t k = 0; k < K; ++k) full[k + 1] = z[k];
    require(c.mode_of(full) == bo.mode, ErrorCode::Validation,
            "the dynamics mode changes under the default high-level dynamics of region " + std::to_string(r.id));
  };
  auto emit_success = [&](Index xf, const std::vector<Index>& z, int t, double m) {
    full[0] = xf;
    for (size_t k = 0; k < K; ++k) full[k + 1] = z[k];
    size_t s = layout_.encode(full);
    if (!terminal_check) {
      succ[{s, t}] += m;
      return;
    }
    double ok = 0.0;
    for (const auto& [alpha, p] : c.afford(full, sol.policy[xf])) {
      double chk = p;
      for (size_t k = 0; k < K; ++k) chk *= c.hl[k].constraint(z[k], alpha[k]);
      ok += chk;
    }
    if (ok > 0.0) succ[{s, t}] += m * ok;
    if (ok < 1.0) fail[{s, t}] += m * (1.0 - ok);
  };
  auto emit_failure = [&](Index xf, const std::vector<Index>& z, int t, double m) {
    full[0] = xf;
    for (size_t k = 0; k < K; ++k) full[k + 1] = z[k];
    fail[{layout_.encode(full), t}] += m;
  };

  std::vector<std::vector<double>> az(K);
  for (size_t k = 0; k < K; ++k) {
    az[k].assign(c.hl[k].kernel->num_states(), 0.0);
    az[k][parts[k + 1]] = 1.0;
  }

  if (fast) {
    // No high-level event can occur: the base kernel times the default
    // state-prediction kernels.
    const auto& row = sol.eta.row(x0);
    for (int t = 0; t < T; ++t) {
      for_each_combo(az, [&](const std::vector<Index>& z, double w) {
        check_mode(z);
        for (size_t j = 0; j < row.finals.size(); ++j) {
          double p = row.plus[j * T + t], m = row.minus[j * T + t];
          if (p != 0.0) emit_success(row.finals[j], z, t, p * w);
          if (m != 0.0) emit_failure(row.finals[j], z, t, m * w);
        }
      });
      for (size_t k = 0; k < K; ++k) {
        std::vector<double> nxt(az[k].size(), 0.0);
        for (Index z = 0; z < static_cast<Index>(az[k].size()); ++z) {
          if (az[k][z] == 0.0) continue;
          for (const auto& tr : c.hl[k].kernel->row(z, r.alpha[k])) nxt[tr.next] += az[k][z] * tr.prob;
        }
        az[k].swap(nxt);
      }
    }
    ProductStok out{flatten(succ), flatten(fail), true};
    return out;
  }

  // Base-space first-event pieces under the option policy.
  std::vector<double> s_x(X), b_x(X), c_x(X);
  for (Index x = 0; x < X; ++x) {
    Index a = sol.policy[x];
    bool feas = sol.kappa[x] > 0.0;
    double fg = tm.goal.table(x, a), fc = tm.constraint.table(x, a);
    s_x[x] = feas ? fg * fc : 0.0;
    b_x[x] = feas ? 1.0 - fc : 1.0;
    c_x[x] = feas ? (1.0 - fg) * fc : 0.0;
  }
  std::vector<double> ax(X, 0.0), cont(X, 0.0);
  ax[x0] = 1.0;
  for (int t = 0; t < T; ++t) {
    double alive_x = 0.0;
    for (Index x = 0; x < X; ++x) {
      cont[x] = ax[x] * c_x[x];
      alive_x += ax[x];
    }
    if (alive_x == 0.0) break;
    for_each_combo(az, [&](const std::vector<Index>& z, double w) {
      check_mode(z);
      double wc = w;
      for (size_t k = 0; k < K; ++k) wc *= h[k][z[k]];
      for (Index x = 0; x < X; ++x) {
        if (ax[x] == 0.0) continue;
        if (s_x[x] != 0.0) emit_success(x, z, t, ax[x] * s_x[x] * w);
        double m = ax[x] * b_x[x] * w + cont[x] * (w - wc);
        if (m != 0.0) emit_failure(x, z, t, m);
      }
    });
    std::fill(ax.begin(), ax.end(), 0.0);
    for (Index x = 0; x < X; ++x) {
      if (cont[x] == 0.0) continue;
      for (const auto& tr : c.base->row(x, sol.policy[x], bo.mode)) ax[tr.next] += cont[x] * tr.prob;
    }
    for (size_t k = 0; k < K; ++k) {
      std::vector<double> nxt(az[k].size(), 0.0);
      for (Index z = 0; z < static_cast<Index>(az[k].size()); ++z) {
        double w = az[k][z] * h[k][z];
        if (w == 0.0) continue;
        for (const auto& tr : c.hl[k].kernel->row(z, r.alpha[k])) nxt[tr.next] += w * tr.prob;
      }
      az[k].swap(nxt);
    }
  }
  return ProductStok{flatten(succ), flatten(fail), false};
}

Outcome GoalKernel::compute(size_t s, int option) const {
  const Ctmdp& c = *c_;
  const OptionSpec& spec = options_.at(option);
  Outcome out;
  if (spec.is_macro()) {
    std::vector<Atom> cur{{s, 0, 1.0}};
    for (size_t i = 0; i < spec.sequence.size(); ++i) {
      if (i == 0) out.initiation_kappa = apply(s, spec.sequence[0]).initiation_kappa;
      std::vector<Atom> nxt, fl;
      apply_to(cur, spec.sequence[i], nxt, fl);
      out.failure.insert(out.failure.end(), fl.begin(), fl.end());
      cur.swap(nxt);
    }
    out.next = std::move(cur);
    AtomMap fm;
    for (const auto& a : out.failure) fm[{a.state, a.time}] += a.prob;
    out.failure = flatten(fm);
    return out;
  }
  auto parts = layout_.decode(s);
  const size_t K = c.hl.size();
  Index e = c.mode_of(parts);
  int region = region_of_cell(parts[0], e);
  if (region < 0) {
    out.failure.push_back({s, 0, 1.0});
    return out;
  }
  const BaseOption& bo = base_option(e, region, option);
  out.initiation_kappa = bo.sol.kappa[parts[0]];
  auto ps = product_stok(bo, parts);
  AtomMap next, fail;
  for (const auto& a : ps.failure) fail[{a.state, a.time}] += a.prob;
  std::vector<Index> nparts(K + 1);
  for (const auto& atom : ps.success) {
    auto fparts = layout_.decode(atom.state);
    Index xf = fparts[0], af = bo.sol.policy[xf];
    for (const auto& [alpha, pa] : c.afford(fparts, af)) {
      double chk = 1.0;
      for (size_t k = 0; k < K; ++k) chk *= c.hl[k].constraint(fparts[k + 1], alpha[k]);
      double m = atom.prob * pa;
      if (chk < 1.0) fail[{atom.state, atom.time}] += m * (1.0 - chk);
      double ok = m * chk;
      if (ok == 0.0) continue;
      // One-step update: every component moves under the terminal action.
      std::vector<std::pair<std::vector<Index>, double>> dist{{nparts, ok}};
      std::vector<std::pair<std::vector<Index>, double>> tmp;
      for (const auto& tr : c.base->row(xf, af, e)) {
        auto v = nparts;
        v[0] = tr.next;
        tmp.emplace_back(std::move(v), ok * tr.prob);
      }
      dist.swap(tmp);
      for (size_t k = 0; k < K; ++k) {
        tmp.clear();
        for (const auto& [v, p] : dist)
          for (const auto& tr : c.hl[k].kernel->row(fparts[k + 1], alpha[k])) {
            auto w = v;
            w[k + 1] = tr.next;
            tmp.emplace_back(std::move(w), p * tr.prob);
          }
        dist.swap(tmp);
      }
      for (const auto& [v, p] : dist)
        if (p != 0.0) next[{layout_.encode(v), atom.time + 1}] += p;
    }
  }
  out.next = flatten(next);
  out.failure = flatten(fail);
  return out;
}

const Outcome& GoalKernel::apply(size_t s, int option) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = outcome_cache_.find({s, option});
    if (it != outcome_cache_.end()) return *it->second;
  }
  auto o = std::make_unique<Outcome>(compute(s, option));
  std::lock_guard<std::mutex> lock(mu_);
  auto [pos, inserted] = outcome_cache_.emplace(std::make_pair(s, option), std::move(o));
  return *pos->second;
}

void GoalKernel::apply_to(const std::vector<Atom>& atoms, int option, std::vector<Atom>& next,
                          std::vector<Atom>& failure) const {
  AtomMap nm, fm;
  for (const auto& a : atoms) {
    const Outcome& o = apply(a.state, option);
    for (const auto& n : o.next) nm[{n.state, a.time + n.time}] += a.prob * n.prob;
    for (const auto& f : o.failure) fm[{f.state, a.time + f.time}] += a.prob * f.prob;
  }
  next = flatten(nm);
  failure = flatten(fm);
}

size_t GoalKernel::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return outcome_cache_.size();
}

}  // namespace okbe
