#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "okbe/okbe.hpp"

namespace okbe {

namespace {

struct ChainBlocks {
  Eigen::SparseMatrix<double, Eigen::RowMajor> nn;
  Eigen::VectorXd to_success;
  Eigen::VectorXd to_failure;
};

ChainBlocks build_blocks(const std::vector<Index>& policy, const std::vector<char>& feasible, const Tmdp& t) {
  t.validate();
  const int n = t.num_states();
  require(policy.size() == static_cast<size_t>(n) && feasible.size() == static_cast<size_t>(n), ErrorCode::Validation,
          "policy or indicator has the wrong length");
  ChainBlocks b;
  b.to_success.resize(n);
  b.to_failure.resize(n);
  std::vector<Eigen::Triplet<double>> trips;
  for (Index i = 0; i < n; ++i) {
    Index a = policy[i];
    require(a >= 0 && a < t.num_actions(), ErrorCode::Validation, "policy action out of range");
    double fg = t.goal.table(i, a), fc = t.constraint.table(i, a);
    if (feasible[i]) {
      b.to_success[i] = fg * fc;
      b.to_failure[i] = 1.0 - fc;
      double f2 = (1.0 - fg) * fc;
      if (f2 > 0.0)
        for (const auto& tr : t.kernel->row(i, a, t.mode)) trips.emplace_back(i, tr.next, f2 * tr.prob);
    } else {
      b.to_success[i] = 0.0;
      b.to_failure[i] = 1.0;
    }
  }
  b.nn.resize(n, n);
  b.nn.setFromTriplets(trips.begin(), trips.end());
  return b;
}

}  // namespace

Stok absorbing_chain_stok(const std::vector<Index>& policy, const std::vector<char>& feasible, const Tmdp& t,
                          int horizon) {
  require(horizon >= 1, ErrorCode::Config, "horizon must be at least 1");
  auto b = build_blocks(policy, feasible, t);
  const int n = t.num_states();
  // Rows of `reach` are start states; reach = P_NN^t.
  Eigen::MatrixXd reach = Eigen::MatrixXd::Identity(n, n);
  Stok out(n, horizon);
  std::vector<std::vector<std::pair<Index, std::pair<double, double>>>> slices;
  for (int tt = 0; tt < horizon; ++tt) {
    for (Index i = 0; i < n; ++i)
      for (Index f = 0; f < n; ++f) {
        double r = reach(i, f);
        if (r == 0.0) continue;
        double p = r * b.to_success[f], m = r * b.to_failure[f];
        if (p != 0.0 || m != 0.0) out.add(i, f, tt, p, m);
      }
    Eigen::MatrixXd next = reach * b.nn;
    reach.swap(next);
  }
  out.terminal_action = policy;
  return out;
}

std::vector<double> absorbing_chain_kappa(const std::vector<Index>& policy, const std::vector<char>& feasible,
                                          const Tmdp& t) {
  auto b = build_blocks(policy, feasible, t);
  const int n = t.num_states();
  Eigen::SparseMatrix<double> A(n, n);
  A.setIdentity();
  A = A - Eigen::SparseMatrix<double>(b.nn);
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  require(lu.info() == Eigen::Success, ErrorCode::Validation, "I - P_NN is singular: the chain is not absorbing");
  Eigen::VectorXd k = lu.solve(b.to_success);
  return std::vector<double>(k.data(), k.data() + n);
}

}  // namespace okbe
