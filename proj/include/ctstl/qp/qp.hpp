#pragma once

#include <Eigen/Dense>
#include <string_view>

namespace ctstl::qp {

/// minimize 1/2 z'Pz + q'z  s.t.  A_eq z = b_eq,  A_in z <= b_in.
/// P symmetric positive semidefinite. Empty blocks are allowed.
struct QuadraticProgram {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  Eigen::Index dim() const noexcept { return q.size(); }
  /// Throws DimensionError on inconsistent sizes or asymmetric P.
  void validate() const;
  double objective(const Eigen::VectorXd& z) const;
};

enum class QpStatus { Optimal, MaxIterations, PrimalInfeasible, DualInfeasible };
std::string_view to_string(QpStatus status) noexcept;

struct QpSettings {
  int max_iterations = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double eps_abs = 1e-10;
  double eps_rel = 1e-10;
  /// Required KKT accuracy (inf-norm) for the Optimal status.
  double kkt_tolerance = 1e-8;
  double infeasibility_tolerance = 1e-7;
  int scaling_iterations = 15;
  int check_interval = 5;
  int adapt_interval = 50;
  bool polish = true;
};

/// Lagrangian 1/2 z'Pz + q'z + y_eq'(A_eq z - b_eq) + y_in'(A_in z - b_in).
struct KktResiduals {
  double stationarity = 0.0;     // |Pz + q + A_eq'y_eq + A_in'y_in|
  double primal = 0.0;           // equality error and inequality violation
  double complementarity = 0.0;  // max |y_in_i (A_in z - b_in)_i|
  double dual_sign = 0.0;        // max negative part of y_in
  double max() const noexcept;
};

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_in);

struct QpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_in;
  QpStatus status = QpStatus::MaxIterations;
  KktResiduals residuals;
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
};

/// Primal objective minus Lagrange dual objective at (z, y).
double duality_gap(const QuadraticProgram& qp, const QpSolution& solution);

struct WarmStart {
  Eigen::VectorXd z;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_in;
};

/// Operator-splitting (ADMM) solver with Ruiz equilibration, adaptive
/// penalty and active-set polishing. Deterministic for fixed inputs.
QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {},
                    const WarmStart* warm_start = nullptr);

}  // namespace ctstl::qp
