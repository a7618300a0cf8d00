#include <cmath>
#include <random>

#include "ctstl/error.hpp"
#include "ctstl/qp/qp.hpp"
#include "doctest.h"
#include "support/qp_oracle.hpp"

using namespace ctstl;
using namespace ctstl::qp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

QuadraticProgram scalar_projection() {
  // minimize 1/2 (z - 3)^2 subject to z <= 2
  QuadraticProgram qp;
  qp.P = MatrixXd::Identity(1, 1);
  qp.q = VectorXd::Constant(1, -3.0);
  qp.A_eq.resize(0, 1);
  qp.b_eq.resize(0);
  qp.A_in = MatrixXd::Ones(1, 1);
  qp.b_in = VectorXd::Constant(1, 2.0);
  return qp;
}

}  // namespace

TEST_CASE("projection onto a half line") {
  const auto sol = solve_qp(scalar_projection());
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.z(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sol.y_in(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.residuals.max() <= 1e-8);
}

TEST_CASE("minimum norm point on a simplex face") {
  QuadraticProgram qp;
  qp.P = MatrixXd::Identity(3, 3);
  qp.q = VectorXd::Zero(3);
  qp.A_eq = MatrixXd::Ones(1, 3);
  qp.b_eq = VectorXd::Ones(1);
  qp.A_in.resize(0, 3);
  qp.b_in.resize(0);
  const auto sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::Optimal);
  for (int i = 0; i < 3; ++i) CHECK(sol.z(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("random strictly convex programs agree with active-set enumeration") {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 10; ++i) {
    const auto qp = testing::random_strictly_convex_qp(rng, 6, 4);
    const auto oracle = testing::enumerate_active_sets(qp);
    REQUIRE(oracle.has_value());
    const auto sol = solve_qp(qp);
    INFO("instance " << i);
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK((sol.z - oracle->z).lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + oracle->z.lpNorm<Eigen::Infinity>()));
    CHECK(std::abs(sol.objective - oracle->objective) <= 1e-6 * (1.0 + std::abs(oracle->objective)));
    CHECK(sol.residuals.max() <= 1e-8);
    CHECK(std::abs(duality_gap(qp, sol)) <= 1e-6 * (1.0 + std::abs(sol.objective)));
  }
}

TEST_CASE("row and column scaling does not change the solution") {
  std::mt19937_64 rng(62);
  for (int i = 0; i < 5; ++i) {
    const auto qp = testing::random_strictly_convex_qp(rng, 5, 4);
    const auto base = solve_qp(qp);
    REQUIRE(base.status == QpStatus::Optimal);
    // Substitute z = D w and scale the inequality rows by positive factors.
    VectorXd d(qp.dim());
    for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = std::pow(10.0, (static_cast<double>(j % 3) - 1.0));
    const MatrixXd D = d.asDiagonal();
    QuadraticProgram scaled;
    scaled.P = D * qp.P * D;
    scaled.q = D * qp.q;
    scaled.A_eq = qp.A_eq * D;
    scaled.b_eq = qp.b_eq;
    VectorXd r(qp.A_in.rows());
    for (Eigen::Index j = 0; j < r.size(); ++j) r(j) = j % 2 == 0 ? 100.0 : 0.01;
    scaled.A_in = r.asDiagonal() * qp.A_in * D;
    scaled.b_in = r.asDiagonal() * qp.b_in;
    const auto other = solve_qp(scaled);
    REQUIRE(other.status == QpStatus::Optimal);
    const VectorXd z = D * other.z;
    CHECK((z - base.z).lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + base.z.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("warm start from the solution needs fewer iterations") {
  std::mt19937_64 rng(63);
  const auto qp = testing::random_strictly_convex_qp(rng, 8, 5);
  QpSettings settings;
  settings.polish = false;
  const auto cold = solve_qp(qp, settings);
  REQUIRE(cold.status == QpStatus::Optimal);
  const WarmStart warm{cold.z, cold.y_eq, cold.y_in};
  const auto hot = solve_qp(qp, settings, &warm);
  REQUIRE(hot.status == QpStatus::Optimal);
  CHECK(hot.iterations < cold.iterations);
  CHECK((hot.z - cold.z).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("infeasibility certificates") {
  SUBCASE("primal infeasible") {
    // z <= -1 and -z <= -1
    QuadraticProgram qp;
    qp.P = MatrixXd::Identity(1, 1);
    qp.q = VectorXd::Zero(1);
    qp.A_eq.resize(0, 1);
    qp.b_eq.resize(0);
    qp.A_in.resize(2, 1);
    qp.A_in << 1.0, -1.0;
    qp.b_in = VectorXd::Constant(2, -1.0);
    CHECK(solve_qp(qp).status == QpStatus::PrimalInfeasible);
  }
  SUBCASE("dual infeasible") {
    // linear objective unbounded below along z1
    QuadraticProgram qp;
    qp.P = MatrixXd::Zero(2, 2);
    qp.P(1, 1) = 1.0;
    qp.q = VectorXd::Zero(2);
    qp.q(0) = 1.0;
    qp.A_eq.resize(0, 2);
    qp.b_eq.resize(0);
    qp.A_in.resize(1, 2);
    qp.A_in << 0.0, 1.0;
    qp.b_in = VectorXd::Ones(1);
    CHECK(solve_qp(qp).status == QpStatus::DualInfeasible);
  }
}

TEST_CASE("KKT residuals at a known optimum") {
  const auto qp = scalar_projection();
  const auto r = kkt_residuals(qp, VectorXd::Constant(1, 2.0), VectorXd(0), VectorXd::Constant(1, 1.0));
  CHECK(r.max() == 0.0);
  const auto bad = kkt_residuals(qp, VectorXd::Constant(1, 2.5), VectorXd(0), VectorXd::Constant(1, -1.0));
  CHECK(bad.primal == doctest::Approx(0.5));
  CHECK(bad.dual_sign == doctest::Approx(1.0));
}

TEST_CASE("validation") {
  auto qp = scalar_projection();
  qp.q = VectorXd::Zero(2);
  CHECK_THROWS_AS(qp.validate(), DimensionError);
  qp = scalar_projection();
  qp.A_in = MatrixXd::Ones(1, 2);
  CHECK_THROWS_AS(solve_qp(qp), DimensionError);
  QuadraticProgram asym;
  asym.P.resize(2, 2);
  asym.P << 1.0, 0.5, 0.0, 1.0;
  asym.q = VectorXd::Zero(2);
  asym.A_eq.resize(0, 2);
  asym.b_eq.resize(0);
  asym.A_in.resize(0, 2);
  asym.b_in.resize(0);
  CHECK_THROWS_AS(asym.validate(), DimensionError);
}
