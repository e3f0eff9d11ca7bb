#include "okbe/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace okbe {

namespace {

std::string row_label(Index s, Index a, Index m) {
  return "(state " + std::to_string(s) + ", action " + std::to_string(a) + ", mode " + std::to_string(m) + ")";
}

void check_distribution(const SparseDist& d, int size, const std::string& where) {
  double sum = 0.0;
  for (const auto& [i, p] : d) {
    require(i >= 0 && i < size, ErrorCode::Validation, where + ": index " + std::to_string(i) + " out of range");
    require(p >= 0.0 && std::isfinite(p), ErrorCode::Validation, where + ": negative or non-finite probability");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= kStochasticTol, ErrorCode::Validation,
          where + ": distribution sums to " + std::to_string(sum));
}

}  // namespace

double TransitionKernel::prob(Index s, Index a, Index next, Index m) const {
  for (const auto& t : row(s, a, m))
    if (t.next == next) return t.prob;
  return 0.0;
}

bool TransitionKernel::is_deterministic() const {
  for (size_t r = 0; r + 1 < offsets_.size(); ++r)
    if (offsets_[r + 1] - offsets_[r] != 1) return false;
  return true;
}

Index TransitionKernel::successor(Index s, Index a, Index m) const {
  auto r = row(s, a, m);
  require(r.size() == 1, ErrorCode::Validation, "row " + row_label(s, a, m) + " is not deterministic");
  return r[0].next;
}

KernelBuilder::KernelBuilder(int num_states, int num_actions, int num_modes)
    : num_states_(num_states), num_actions_(num_actions), num_modes_(num_modes) {
  require(num_states > 0 && num_actions > 0 && num_modes > 0, ErrorCode::Validation,
          "kernel dimensions must be positive");
  rows_.resize(static_cast<size_t>(num_states) * num_actions * num_modes);
}

void KernelBuilder::add(Index s, Index a, Index next, double p, Index m) {
  require(s >= 0 && s < num_states_ && a >= 0 && a < num_actions_ && m >= 0 && m < num_modes_,
          ErrorCode::Validation, "kernel row index out of range " + row_label(s, a, m));
  require(next >= 0 && next < num_states_, ErrorCode::Validation,
          "kernel successor out of range in row " + row_label(s, a, m));
  if (p == 0.0) return;
  auto& row = rows_[(static_cast<size_t>(s) * num_actions_ + a) * num_modes_ + m];
  for (auto& e : row)
    if (e.first == next) {
      e.second += p;
      return;
    }
  row.emplace_back(next, p);
}

void KernelBuilder::add_all_modes(Index s, Index a, Index next, double p) {
  for (Index m = 0; m < num_modes_; ++m) add(s, a, next, p, m);
}

void KernelBuilder::set_row(Index s, Index a, const SparseDist& dist, Index m) {
  auto& row = rows_.at((static_cast<size_t>(s) * num_actions_ + a) * num_modes_ + m);
  row.clear();
  for (const auto& [n, p] : dist) add(s, a, n, p, m);
}

TransitionKernel KernelBuilder::build() const {
  TransitionKernel k;
  k.num_states_ = num_states_;
  k.num_actions_ = num_actions_;
  k.num_modes_ = num_modes_;
  k.offsets_.reserve(rows_.size() + 1);
  k.offsets_.push_back(0);
  for (Index s = 0; s < num_states_; ++s)
    for (Index a = 0; a < num_actions_; ++a)
      for (Index m = 0; m < num_modes_; ++m) {
        auto row = rows_[(static_cast<size_t>(s) * num_actions_ + a) * num_modes_ + m];
        std::sort(row.begin(), row.end());
        check_distribution(row, num_states_, "kernel row " + row_label(s, a, m));
        for (const auto& [n, p] : row) k.entries_.push_back({n, p});
        k.offsets_.push_back(k.entries_.size());
      }
  return k;
}

AffordanceFactor make_constant_factor(int target, int num_driver_states, int num_driver_actions, Index action,
                                      int given, int given_size) {
  AffordanceFactor f;
  f.target = target;
  f.given = given;
  f.given_size = given < 0 ? 1 : given_size;
  f.num_driver_states = num_driver_states;
  f.num_driver_actions = num_driver_actions;
  f.table.assign(static_cast<size_t>(f.given_size) * num_driver_states * num_driver_actions, SparseDist{{action, 1.0}});
  return f;
}

void AffordanceFunction::validate(const std::vector<int>& hl_sizes, const std::vector<int>& hl_actions) const {
  std::vector<int> seen(hl_sizes.size(), 0);
  for (const auto& f : factors) {
    require(f.target >= 0 && f.target < static_cast<int>(hl_sizes.size()), ErrorCode::Validation,
            "affordance factor targets unknown space " + std::to_string(f.target));
    require(++seen[f.target] == 1, ErrorCode::Validation, "two affordance factors target the same space");
    require(f.num_driver_states == num_driver_states && f.num_driver_actions == num_driver_actions,
            ErrorCode::Validation, "affordance factor shape does not match the driver space");
    if (f.given >= 0) {
      require(f.given < static_cast<int>(hl_sizes.size()) && f.given != f.target, ErrorCode::Validation,
              "affordance factor conditions on an invalid space");
      require(f.given_size == hl_sizes[f.given], ErrorCode::Validation,
              "affordance factor conditioning size mismatch");
    }
    require(f.table.size() == static_cast<size_t>(f.given_size) * num_driver_states * num_driver_actions,
            ErrorCode::Validation, "affordance factor table has the wrong size");
    for (size_t i = 0; i < f.table.size(); ++i) {
      const auto& d = f.table[i];
      check_distribution(d, hl_actions[f.target], "affordance factor for space " + std::to_string(f.target));
      if (!allow_stochastic)
        require(d.size() == 1, ErrorCode::Validation,
                "stochastic affordance output found while stochastic affordances are disabled");
    }
  }
}

AffordanceFunction affordance_from_features(const FeaturePair& fp, bool allow_stochastic) {
  require(fp.state_to_features.size() == static_cast<size_t>(fp.num_states) * fp.num_actions,
          ErrorCode::Validation, "feature table has the wrong size");
  require(fp.targets.size() == fp.features_to_actions.size(), ErrorCode::Validation,
          "feature-to-action tables do not match the target list");
  for (const auto& d : fp.state_to_features) {
    double sum = 0.0;
    for (const auto& [psi, p] : d) {
      for (const auto& tbl : fp.features_to_actions)
        require(psi >= 0 && psi < static_cast<int>(tbl.size()) && !tbl[psi].empty(), ErrorCode::Validation,
                "dangling feature set " + std::to_string(psi));
      sum += p;
    }
    require(std::abs(sum - 1.0) <= kStochasticTol, ErrorCode::Validation, "feature distribution does not sum to one");
  }
  AffordanceFunction F;
  F.num_driver_states = fp.num_states;
  F.num_driver_actions = fp.num_actions;
  F.allow_stochastic = allow_stochastic;
  for (size_t k = 0; k < fp.targets.size(); ++k) {
    AffordanceFactor f;
    f.target = fp.targets[k];
    f.num_driver_states = fp.num_states;
    f.num_driver_actions = fp.num_actions;
    f.table.resize(static_cast<size_t>(fp.num_states) * fp.num_actions);
    for (size_t i = 0; i < f.table.size(); ++i) {
      std::map<Index, double> acc;
      for (const auto& [psi, p] : fp.state_to_features[i])
        for (const auto& [alpha, q] : fp.features_to_actions[k][psi]) acc[alpha] += p * q;
      for (const auto& [alpha, p] : acc)
        if (p > 0.0) f.table[i].emplace_back(alpha, p);
      if (!allow_stochastic)
        require(f.table[i].size() == 1, ErrorCode::Validation, "features induce a stochastic affordance");
    }
    F.factors.push_back(std::move(f));
  }
  return F;
}

size_t ProductLayout::total() const {
  size_t n = 1;
  for (int s : sizes) n *= static_cast<size_t>(s);
  return n;
}

size_t ProductLayout::encode(const std::vector<Index>& parts) const {
  size_t idx = 0;
  for (size_t k = sizes.size(); k-- > 0;) idx = idx * sizes[k] + static_cast<size_t>(parts[k]);
  return idx;
}

std::vector<Index> ProductLayout::decode(size_t s) const {
  std::vector<Index> parts(sizes.size());
  for (size_t k = 0; k < sizes.size(); ++k) {
    parts[k] = static_cast<Index>(s % sizes[k]);
    s /= sizes[k];
  }
  return parts;
}

Index ProductLayout::component(size_t s, size_t k) const {
  for (size_t j = 0; j < k; ++j) s /= sizes[j];
  return static_cast<Index>(s % sizes[k]);
}

namespace {

// Distribution over joint driven-space action vectors, encoded with the first
// driven space fastest.
void afforded_actions(const AffordanceFunction& F, const std::vector<const TransitionKernel*>& driven,
                      const std::vector<Index>& parts, Index a, std::vector<std::pair<std::vector<Index>, double>>& out) {
  out.assign(1, {std::vector<Index>(driven.size(), 0), 1.0});
  std::vector<const AffordanceFactor*> by_target(driven.size(), nullptr);
  for (const auto& f : F.factors) by_target[f.target] = &f;
  for (size_t k = 0; k < driven.size(); ++k) {
    require(by_target[k] != nullptr, ErrorCode::Validation,
            "affordance function has no factor for driven space " + std::to_string(k));
    const auto& f = *by_target[k];
    Index zg = f.given >= 0 ? parts[1 + f.given] : 0;
    const auto& d = f.at(zg, parts[0], a);
    std::vector<std::pair<std::vector<Index>, double>> next;
    for (const auto& [vec, p] : out)
      for (const auto& [alpha, q] : d) {
        auto v = vec;
        v[k] = alpha;
        next.emplace_back(std::move(v), p * q);
      }
    out.swap(next);
  }
}

Index hl_flat_index(const std::vector<Index>& parts, const std::vector<int>& sizes, size_t first) {
  size_t idx = 0;
  for (size_t k = sizes.size(); k-- > first;) idx = idx * sizes[k] + parts[k];
  return static_cast<Index>(idx);
}

}  // namespace

TransitionKernel compose_kernels(const std::vector<const TransitionKernel*>& driven, const AffordanceFunction* F,
                                 const ModeFunction* zeta, const TransitionKernel* driver,
                                 const ComposeOptions& opts) {
  require(!driven.empty() || driver != nullptr, ErrorCode::Validation, "nothing to compose");
  for (auto* k : driven) {
    require(k != nullptr, ErrorCode::Validation, "null component kernel");
    require(k->num_modes() == 1, ErrorCode::Validation, "driven kernels must have a single mode");
  }
  ProductLayout layout;
  if (driver) layout.sizes.push_back(driver->num_states());
  for (auto* k : driven) layout.sizes.push_back(k->num_states());
  const size_t S = layout.total();
  const size_t first_hl = driver ? 1 : 0;

  std::vector<int> hl_sizes;
  for (auto* k : driven) hl_sizes.push_back(k->num_states());
  size_t hl_total = 1;
  for (int s : hl_sizes) hl_total *= s;

  if (driver && driver->num_modes() > 1) {
    require(zeta != nullptr, ErrorCode::Validation, "driver kernel has modes but no mode function was given");
  }
  if (zeta) {
    require(driver != nullptr, ErrorCode::Validation, "mode function given without a driver kernel");
    require(zeta->map.size() == hl_total, ErrorCode::Validation, "mode function does not cover the driven product");
    require(zeta->num_modes == driver->num_modes(), ErrorCode::Validation, "mode count mismatch");
  }

  std::vector<int> action_sizes;
  if (F) {
    require(driver != nullptr, ErrorCode::Validation, "affordance function requires a driver kernel");
    require(F->num_driver_states == driver->num_states() && F->num_driver_actions == driver->num_actions(),
            ErrorCode::Validation, "affordance function does not match the driver kernel");
    std::vector<int> hl_actions;
    for (auto* k : driven) hl_actions.push_back(k->num_actions());
    F->validate(hl_sizes, hl_actions);
    action_sizes.push_back(driver->num_actions());
  } else {
    if (driver) action_sizes.push_back(driver->num_actions());
    for (auto* k : driven) action_sizes.push_back(k->num_actions());
  }
  ProductLayout action_layout{action_sizes};
  const size_t A = action_layout.total();

  // Rough size guard before enumerating.
  double est = static_cast<double>(S) * static_cast<double>(A);
  {
    double per_row = 1.0;
    if (driver) per_row *= static_cast<double>(driver->num_entries()) / (driver->num_states() * driver->num_actions() * driver->num_modes());
    for (auto* k : driven) per_row *= static_cast<double>(k->num_entries()) / (k->num_states() * k->num_actions());
    est *= per_row;
  }
  require(est <= static_cast<double>(opts.max_entries), ErrorCode::Validation,
          "product-space kernel exceeds the entry cap");
  require(S < static_cast<size_t>(std::numeric_limits<Index>::max()), ErrorCode::Validation, "product space too large");

  KernelBuilder b(static_cast<int>(S), static_cast<int>(A), 1);
  std::vector<std::pair<std::vector<Index>, double>> alphas;
  for (size_t s = 0; s < S; ++s) {
    auto parts = layout.decode(s);
    Index mode = 0;
    if (zeta) mode = zeta->map[hl_flat_index(parts, layout.sizes, first_hl)];
    for (size_t ai = 0; ai < A; ++ai) {
      auto avec = action_layout.decode(ai);
      if (F) {
        afforded_actions(*F, driven, parts, avec[0], alphas);
      } else {
        std::vector<Index> v(avec.begin() + static_cast<long>(first_hl), avec.end());
        alphas.assign(1, {v, 1.0});
      }
      std::map<size_t, double> acc;
      for (const auto& [alpha, pa] : alphas) {
        std::vector<std::pair<std::vector<Index>, double>> cur;
        std::vector<Index> base(layout.sizes.size(), 0);
        if (driver) {
          for (const auto& t : driver->row(parts[0], avec[0], mode)) {
            auto v = base;
            v[0] = t.next;
            cur.emplace_back(std::move(v), pa * t.prob);
          }
        } else {
          cur.emplace_back(base, pa);
        }
        for (size_t k = 0; k < driven.size(); ++k) {
          std::vector<std::pair<std::vector<Index>, double>> next;
          for (const auto& [v, p] : cur)
            for (const auto& t : driven[k]->row(parts[first_hl + k], alpha[k])) {
              auto w = v;
              w[first_hl + k] = t.next;
              next.emplace_back(std::move(w), p * t.prob);
            }
          cur.swap(next);
        }
        for (const auto& [v, p] : cur) acc[layout.encode(v)] += p;
      }
      for (const auto& [n, p] : acc) b.add(static_cast<Index>(s), static_cast<Index>(ai), static_cast<Index>(n), p);
    }
  }
  return b.build();
}

TransitionKernel default_markov_chain(const TransitionKernel& k, Index default_action,
                                      const std::vector<Index>& absorbing, Index mode) {
  require(default_action >= 0 && default_action < k.num_actions(), ErrorCode::Validation,
          "default action out of range");
  require(mode >= 0 && mode < k.num_modes(), ErrorCode::Validation, "mode out of range");
  std::vector<char> absorb(k.num_states(), 0);
  for (Index s : absorbing) {
    require(s >= 0 && s < k.num_states(), ErrorCode::Validation, "absorbing state out of range");
    absorb[s] = 1;
  }
  KernelBuilder b(k.num_states(), 1, 1);
  for (Index s = 0; s < k.num_states(); ++s) {
    if (absorb[s]) {
      b.add(s, 0, s, 1.0);
      continue;
    }
    for (const auto& t : k.row(s, default_action, mode)) b.add(s, 0, t.next, t.prob);
  }
  return b.build();
}

}  // namespace okbe
