#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "ctstl/qp/qp.hpp"

namespace ctstl::testing {

struct OracleSolution {
  Eigen::VectorXd z;
  double objective = std::numeric_limits<double>::infinity();
};

// Tries every subset of inequality rows as the active set, solves the
// equality-constrained KKT system, and keeps the best point that is primal
// feasible with nonnegative inequality multipliers. Only for strictly convex
// problems with a handful of rows.
inline std::optional<OracleSolution> enumerate_active_sets(const qp::QuadraticProgram& qp) {
  const auto n = qp.dim();
  const auto me = qp.A_eq.rows();
  const auto mi = qp.A_in.rows();
  std::optional<OracleSolution> best;
  for (unsigned mask = 0; mask < (1u << mi); ++mask) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < mi; ++i)
      if (mask & (1u << i)) active.push_back(i);
    const auto na = static_cast<Eigen::Index>(active.size());
    const auto dim = n + me + na;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs(dim);
    kkt.topLeftCorner(n, n) = qp.P;
    rhs.head(n) = -qp.q;
    if (me > 0) {
      kkt.block(0, n, n, me) = qp.A_eq.transpose();
      kkt.block(n, 0, me, n) = qp.A_eq;
      rhs.segment(n, me) = qp.b_eq;
    }
    for (Eigen::Index j = 0; j < na; ++j) {
      kkt.block(0, n + me + j, n, 1) = qp.A_in.row(active[j]).transpose();
      kkt.block(n + me + j, 0, 1, n) = qp.A_in.row(active[j]);
      rhs(n + me + j) = qp.b_in(active[j]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    bool ok = true;
    for (Eigen::Index j = 0; j < na && ok; ++j) ok = sol(n + me + j) >= -1e-10;
    if (mi > 0) ok = ok && (qp.A_in * z - qp.b_in).maxCoeff() <= 1e-10;
    if (!ok) continue;
    const double obj = qp.objective(z);
    if (!best || obj < best->objective) best = OracleSolution{z, obj};
  }
  return best;
}

// Strictly convex QP with a known feasible point so the oracle always finds
// a solution.
inline qp::QuadraticProgram random_strictly_convex_qp(std::mt19937_64& rng, int max_dim,
                                                      int max_inequalities) {
  std::uniform_int_distribution<int> dim_dist(1, max_dim);
  std::uniform_int_distribution<int> in_dist(0, max_inequalities);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = dim_dist(rng);
  const int mi = in_dist(rng);
  const int me = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(rng);
  auto random_matrix = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
  };
  qp::QuadraticProgram qp;
  const Eigen::MatrixXd L = random_matrix(n, n);
  qp.P = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  qp.P = 0.5 * (qp.P + qp.P.transpose()).eval();
  qp.q = 3.0 * random_matrix(n, 1);
  const Eigen::VectorXd feasible = random_matrix(n, 1);
  qp.A_eq = random_matrix(me, n);
  qp.b_eq = qp.A_eq * feasible;
  qp.A_in = random_matrix(mi, n);
  qp.b_in = qp.A_in * feasible;
  for (int i = 0; i < mi; ++i) qp.b_in(i) += std::abs(normal(rng));
  return qp;
}

}  // namespace ctstl::testing
