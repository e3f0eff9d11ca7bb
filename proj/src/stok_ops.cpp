#include <algorithm>
#include <cmath>

#include "okbe/okbe.hpp"

namespace okbe {

double Sok::row_total(Index s) const {
  double t = 0.0;
  for (Index f = 0; f < num_states; ++f) t += success(s, f) + failure(s, f);
  return t;
}

Stok compose_stoks(const Stok& first, const Stok& second, const TransitionKernel* one_step, Index mode,
                   int max_horizon) {
  require(first.num_states() == second.num_states(), ErrorCode::Validation,
          "composed kernels live on different state spaces");
  const int n = first.num_states();
  const int shift = one_step ? 1 : 0;
  const long H = static_cast<long>(first.horizon()) + second.horizon() - 1 + shift;
  require(H <= max_horizon, ErrorCode::Validation, "composed horizon exceeds the cap");
  if (one_step) {
    require(one_step->num_states() == n, ErrorCode::Validation, "one-step kernel has the wrong state count");
    require(first.terminal_action.size() == static_cast<size_t>(n), ErrorCode::Validation,
            "one-step update needs terminal actions on the first kernel");
  }
  const int T1 = first.horizon(), T2 = second.horizon();
  Stok out(n, static_cast<int>(H));
  std::vector<double> acc_p(static_cast<size_t>(n) * H), acc_m(static_cast<size_t>(n) * H);
  std::vector<char> mark(n, 0);
  std::vector<Index> touched;
  auto touch = [&](Index f) {
    if (!mark[f]) {
      mark[f] = 1;
      touched.push_back(f);
    }
  };
  for (Index x = 0; x < n; ++x) {
    const auto& r1 = first.row(x);
    for (size_t k = 0; k < r1.finals.size(); ++k) {
      Index x1 = r1.finals[k];
      for (int t1 = 0; t1 < T1; ++t1) {
        double fail1 = r1.minus[k * T1 + t1];
        if (fail1 != 0.0) {
          touch(x1);
          acc_m[static_cast<size_t>(x1) * H + t1] += fail1;
        }
        double p = r1.plus[k * T1 + t1];
        if (p == 0.0) continue;
        auto launch = [&](Index y, double w, int offset) {
          const auto& r2 = second.row(y);
          for (size_t j = 0; j < r2.finals.size(); ++j) {
            Index f = r2.finals[j];
            touch(f);
            double* dp = acc_p.data() + static_cast<size_t>(f) * H + offset;
            double* dm = acc_m.data() + static_cast<size_t>(f) * H + offset;
            const double* sp = r2.plus.data() + j * T2;
            const double* sm = r2.minus.data() + j * T2;
            for (int t2 = 0; t2 < T2; ++t2) {
              dp[t2] += w * sp[t2];
              dm[t2] += w * sm[t2];
            }
          }
        };
        if (one_step) {
          for (const auto& tr : one_step->row(x1, first.terminal_action[x1], mode)) launch(tr.next, p * tr.prob, t1 + 1);
        } else {
          launch(x1, p, t1);
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    auto& row = out.row(x);
    for (Index f : touched) {
      row.finals.push_back(f);
      double* dp = acc_p.data() + static_cast<size_t>(f) * H;
      double* dm = acc_m.data() + static_cast<size_t>(f) * H;
      row.plus.insert(row.plus.end(), dp, dp + H);
      row.minus.insert(row.minus.end(), dm, dm + H);
      std::fill(dp, dp + H, 0.0);
      std::fill(dm, dm + H, 0.0);
      mark[f] = 0;
    }
    touched.clear();
  }
  out.terminal_action = second.terminal_action;
  out.trim();
  return out;
}

Sok compose_soks(const Sok& first, const Sok& second) {
  require(first.num_states == second.num_states, ErrorCode::Validation, "state option kernels differ in size");
  const int n = first.num_states;
  Sok out;
  out.num_states = n;
  out.plus.assign(static_cast<size_t>(n) * n, 0.0);
  out.minus.assign(static_cast<size_t>(n) * n, 0.0);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      out.minus[static_cast<size_t>(x) * n + y] += first.failure(x, y);
      double p = first.success(x, y);
      if (p == 0.0) continue;
      for (Index f = 0; f < n; ++f) {
        out.plus[static_cast<size_t>(x) * n + f] += p * second.success(y, f);
        out.minus[static_cast<size_t>(x) * n + f] += p * second.failure(y, f);
      }
    }
  return out;
}

Sok stok_to_sok(const Stok& s) {
  const int n = s.num_states(), T = s.horizon();
  Sok out;
  out.num_states = n;
  out.plus.assign(static_cast<size_t>(n) * n, 0.0);
  out.minus.assign(static_cast<size_t>(n) * n, 0.0);
  for (Index x = 0; x < n; ++x) {
    const auto& r = s.row(x);
    for (size_t k = 0; k < r.finals.size(); ++k) {
      double p = 0.0, m = 0.0;
      for (int t = 0; t < T; ++t) {
        p += r.plus[k * T + t];
        m += r.minus[k * T + t];
      }
      out.plus[static_cast<size_t>(x) * n + r.finals[k]] = p;
      out.minus[static_cast<size_t>(x) * n + r.finals[k]] = m;
    }
  }
  return out;
}

}  // namespace okbe
