#include "ctstl/scp/scp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "ctstl/error.hpp"

namespace ctstl::scp {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

void PenaltyConfig::validate() const {
  if (!(w_dyn > 0.0) || !(w_stl > 0.0) || !std::isfinite(w_dyn) || !std::isfinite(w_stl)) {
    throw DimensionError("penalty weights must be positive");
  }
  if (!(robustness_margin >= 0.0) || !std::isfinite(robustness_margin)) {
    throw DimensionError("robustness margin must be finite and non-negative");
  }
}

void ProxConfig::validate() const {
  if (!(grow > 1.0) || !(shrink > 0.0 && shrink < 1.0)) {
    throw DimensionError("prox weight factors must satisfy grow > 1 > shrink > 0");
  }
  if (!(w_min > 0.0) || !(w_min <= w_initial) || !(w_initial <= w_max)) {
    throw DimensionError("prox weight bounds must satisfy 0 < w_min <= w_initial <= w_max");
  }
  if (!(reject_ratio < accept_ratio)) throw DimensionError("reject ratio must be below accept ratio");
  if (max_iterations < 1) throw DimensionError("max_iterations must be positive");
  if (!(eps_pen > 0.0) || !(eps_stat > 0.0)) throw DimensionError("tolerances must be positive");
}

void Problem::validate() const {
  if (!model) throw DimensionError("problem has no dynamics model");
  grid.validate();
  const auto n = static_cast<Index>(model->state_dim());
  if (x_initial.size() != n || x_final.size() != n) {
    throw DimensionError("boundary states must have " + std::to_string(n) + " entries");
  }
  gmsr.validate();
  if (formula) grid.require_commensurate(*formula);
}

transcription::DecisionLayout Problem::layout() const {
  return {model->state_dim(), model->control_dim(), grid.K};
}

PenaltyEvaluation penalty_value(const Problem& problem, const VectorXd& z,
                                const PenaltyConfig& weights) {
  const auto layout = problem.layout();
  PenaltyEvaluation ev;
  ev.trajectory = transcription::build_dense_trajectory(*problem.model, z, problem.grid);
  ev.defects = transcription::linearize_defects(ev.trajectory, z, layout);
  ev.defect_l1 = ev.defects.values.lpNorm<1>();
  ev.defect_max = ev.defects.values.size() ? ev.defects.values.lpNorm<Eigen::Infinity>() : 0.0;
  ev.value = weights.w_dyn * ev.defect_l1;
  if (problem.formula) {
    const auto signal = ev.trajectory.signal(problem.model->channels());
    const auto rob = gmsr::eval_robustness(*problem.formula, signal, 0, problem.gmsr);
    ev.robustness = rob.value;
    ev.robustness_gradient = ev.trajectory.pull_back(rob.gradient, layout);
    ev.value += weights.w_stl * std::max(0.0, weights.robustness_margin - rob.value);
  }
  return ev;
}

BoundarySet boundary_set(const Problem& problem) {
  const auto layout = problem.layout();
  const auto n = static_cast<Index>(layout.state_dim());
  BoundarySet b;
  b.A = MatrixXd::Zero(2 * n, static_cast<Index>(layout.size()));
  b.A.block(0, static_cast<Index>(layout.state_offset(0)), n, n).setIdentity();
  b.A.block(n, static_cast<Index>(layout.state_offset(layout.nodes() - 1)), n, n).setIdentity();
  b.b.resize(2 * n);
  b.b << problem.x_initial, problem.x_final;
  return b;
}

VectorXd Subproblem::step(const qp::QpSolution& solution) const {
  return solution.z.head(n_decision);
}

double Subproblem::model_value(const VectorXd& step) const {
  double value = 0.0;
  if (lin.defect_values.size() > 0) {
    value += weights.w_dyn * (lin.defect_values + lin.defect_jacobian * step).lpNorm<1>();
  }
  if (lin.robustness) {
    value += weights.w_stl * std::max(0.0, weights.robustness_margin -
                                                (*lin.robustness + lin.robustness_gradient.dot(step)));
  }
  return value;
}

double Subproblem::objective(const VectorXd& step) const {
  return model_value(step) + 0.5 * w_ptr * step.squaredNorm();
}

Subproblem build_subproblem(const VectorXd& z, const Linearization& lin,
                            const PenaltyConfig& weights, double w_ptr,
                            const BoundarySet& boundary) {
  weights.validate();
  if (!(w_ptr > 0.0)) throw DimensionError("prox weight must be positive");
  const Index nz = z.size();
  const Index nd = lin.defect_values.size();
  if (lin.defect_jacobian.rows() != nd || (nd > 0 && lin.defect_jacobian.cols() != nz)) {
    throw DimensionError("defect Jacobian does not match the decision vector");
  }
  if (lin.robustness && lin.robustness_gradient.size() != nz) {
    throw DimensionError("robustness gradient does not match the decision vector");
  }
  if (boundary.A.rows() != boundary.b.size() || (boundary.A.rows() > 0 && boundary.A.cols() != nz)) {
    throw DimensionError("boundary rows do not match the decision vector");
  }
  const Index ns = lin.robustness ? 1 : 0;
  const Index nv = nz + nd + ns;

  Subproblem sub;
  sub.lin = lin;
  sub.weights = weights;
  sub.w_ptr = w_ptr;
  sub.n_decision = nz;

  auto& qp = sub.qp;
  qp.P = MatrixXd::Zero(nv, nv);
  qp.P.topLeftCorner(nz, nz).diagonal().setConstant(w_ptr);
  qp.q = VectorXd::Zero(nv);
  qp.q.segment(nz, nd).setConstant(weights.w_dyn);
  if (ns) qp.q(nz + nd) = weights.w_stl;

  // s >= d + D step, s >= -(d + D step), sigma >= 0, sigma >= gamma - (Gamma + g'step).
  const Index rows = 2 * nd + 2 * ns;
  qp.A_in = MatrixXd::Zero(rows, nv);
  qp.b_in = VectorXd::Zero(rows);
  if (nd > 0) {
    qp.A_in.block(0, 0, nd, nz) = lin.defect_jacobian;
    qp.A_in.block(0, nz, nd, nd) = -MatrixXd::Identity(nd, nd);
    qp.b_in.head(nd) = -lin.defect_values;
    qp.A_in.block(nd, 0, nd, nz) = -lin.defect_jacobian;
    qp.A_in.block(nd, nz, nd, nd) = -MatrixXd::Identity(nd, nd);
    qp.b_in.segment(nd, nd) = lin.defect_values;
  }
  if (ns) {
    qp.A_in(2 * nd, nz + nd) = -1.0;
    qp.A_in.block(2 * nd + 1, 0, 1, nz) = -lin.robustness_gradient.transpose();
    qp.A_in(2 * nd + 1, nz + nd) = -1.0;
    qp.b_in(2 * nd + 1) = *lin.robustness - weights.robustness_margin;
  }

  qp.A_eq = MatrixXd::Zero(boundary.A.rows(), nv);
  if (boundary.A.rows() > 0) {
    qp.A_eq.leftCols(nz) = boundary.A;
    qp.b_eq = boundary.b - boundary.A * z;
  } else {
    qp.b_eq = VectorXd();
  }
  return sub;
}

std::string_view to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iters";
    case SolveStatus::SubproblemFailure: return "subproblem-failure";
  }
  return "unknown";
}

VectorXd initial_guess(const Problem& problem) {
  problem.validate();
  const auto layout = problem.layout();
  const auto n = static_cast<Index>(layout.state_dim());
  const auto m = static_cast<Index>(layout.control_dim());
  const std::size_t K = problem.grid.K;
  VectorXd z = VectorXd::Zero(static_cast<Index>(layout.size()));

  // States laid out as (position block, velocity block) when n is even.
  const bool split = n % 2 == 0;
  const Index p = split ? n / 2 : n;
  VectorXd velocity = VectorXd::Zero(p);
  if (split) velocity = (problem.x_final.head(p) - problem.x_initial.head(p)) / problem.grid.tf;
  for (std::size_t k = 0; k < K; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(K - 1);
    VectorXd x = (1.0 - s) * problem.x_initial + s * problem.x_final;
    if (split) x.tail(p) = velocity;
    if (k == 0) x = problem.x_initial;
    if (k + 1 == K) x = problem.x_final;
    z.segment(static_cast<Index>(layout.state_offset(k)), n) = x;
  }
  VectorXd u = VectorXd::Zero(m);
  if (const auto* pm = dynamic_cast<const transcription::PointMass3d*>(problem.model.get())) {
    u(2) = pm->mass() * pm->g0();
  }
  for (std::size_t k = 0; k < K; ++k) z.segment(static_cast<Index>(layout.control_offset(k)), m) = u;
  return z;
}

SolveResult prox_convex_solve(const Problem& problem, const PenaltyConfig& weights,
                              const ProxConfig& prox, std::optional<VectorXd> z0) {
  problem.validate();
  weights.validate();
  prox.validate();
  const auto layout = problem.layout();
  const BoundarySet boundary = boundary_set(problem);

  SolveResult result;
  result.z = z0 ? std::move(*z0) : initial_guess(problem);
  if (static_cast<std::size_t>(result.z.size()) != layout.size()) {
    throw DimensionError("initial decision vector has the wrong size");
  }
  const auto n_state = static_cast<Index>(layout.state_dim());
  const auto first_state = static_cast<Index>(layout.state_offset(0));
  const auto last_state = static_cast<Index>(layout.state_offset(layout.nodes() - 1));
  result.z.segment(first_state, n_state) = problem.x_initial;
  result.z.segment(last_state, n_state) = problem.x_final;

  auto t0 = std::chrono::steady_clock::now();
  PenaltyEvaluation current = penalty_value(problem, result.z, weights);
  double discretization_ms = elapsed_ms(t0);
  double w_ptr = prox.w_initial;
  auto& report = result.report;
  report.status = SolveStatus::MaxIterations;

  auto satisfied = [&](const PenaltyEvaluation& ev) {
    return ev.value <= prox.eps_pen && ev.defect_max <= prox.eps_pen &&
           (!problem.formula || ev.robustness >= 0.0);
  };

  std::optional<qp::WarmStart> warm;
  for (int j = 1; j <= prox.max_iterations; ++j) {
    Linearization lin;
    lin.defect_values = current.defects.values;
    lin.defect_jacobian = current.defects.jacobian;
    if (problem.formula) {
      lin.robustness = current.robustness;
      lin.robustness_gradient = current.robustness_gradient;
    }
    const Subproblem sub = build_subproblem(result.z, lin, weights, w_ptr, boundary);

    IterationRecord rec;
    rec.iteration = j;
    rec.w_ptr = w_ptr;
    rec.discretization_ms = discretization_ms;

    t0 = std::chrono::steady_clock::now();
    const qp::QpSolution sol = qp::solve_qp(sub.qp, {}, warm ? &*warm : nullptr);
    rec.subproblem_ms = elapsed_ms(t0);
    rec.qp_status = sol.status;
    rec.qp_iterations = sol.iterations;
    if (sol.status != qp::QpStatus::Optimal) {
      rec.penalty = current.value;
      rec.defect_l1 = current.defect_l1;
      rec.robustness = current.robustness;
      report.iterations.push_back(rec);
      report.status = SolveStatus::SubproblemFailure;
      break;
    }

    // Boundary rows select coordinates, so zeroing them keeps every iterate exact.
    VectorXd step = sub.step(sol);
    step.segment(first_state, n_state).setZero();
    step.segment(last_state, n_state).setZero();
    const double predicted = current.value - sub.objective(step);
    rec.step_norm = step.norm();
    const double stat_tol = prox.eps_stat * (1.0 + result.z.norm());

    // Nothing left to gain from the model: stationary for the penalty.
    if (predicted <= 1e-12 * (1.0 + current.value) || rec.step_norm <= 1e-14 * (1.0 + result.z.norm())) {
      rec.accepted = true;
      rec.ratio = 1.0;
      rec.penalty = current.value;
      rec.defect_l1 = current.defect_l1;
      rec.robustness = current.robustness;
      report.iterations.push_back(rec);
      if (satisfied(current) || rec.step_norm <= stat_tol) {
        report.status = SolveStatus::Converged;
        break;
      }
      // The model claims no progress yet the step is large; tighten the prox.
      w_ptr = std::min(prox.grow * w_ptr, prox.w_max);
      continue;
    }

    const VectorXd z_trial = result.z + step;
    t0 = std::chrono::steady_clock::now();
    PenaltyEvaluation trial = penalty_value(problem, z_trial, weights);
    discretization_ms = elapsed_ms(t0);
    const double actual = current.value - trial.value;
    rec.ratio = actual / predicted;

    if (rec.ratio < prox.reject_ratio) {
      rec.accepted = false;
      rec.penalty = current.value;
      rec.defect_l1 = current.defect_l1;
      rec.robustness = current.robustness;
      report.iterations.push_back(rec);
      w_ptr = std::min(prox.grow * w_ptr, prox.w_max);
      continue;
    }

    rec.accepted = true;
    rec.penalty = trial.value;
    rec.defect_l1 = trial.defect_l1;
    rec.robustness = trial.robustness;
    report.iterations.push_back(rec);
    if (rec.ratio > prox.accept_ratio) w_ptr = std::max(prox.shrink * w_ptr, prox.w_min);
    result.z = z_trial;
    current = std::move(trial);
    warm = qp::WarmStart{sol.z, sol.y_eq, sol.y_in};
    warm->z.head(sub.n_decision).setZero();

    if (satisfied(current) || (std::abs(actual) <= prox.eps_pen && rec.step_norm <= stat_tol)) {
      report.status = SolveStatus::Converged;
      break;
    }
  }

  report.penalty = current.value;
  report.defect_max = current.defect_max;
  report.robustness = current.robustness;
  result.trajectory = std::move(current.trajectory);
  return result;
}

}  // namespace ctstl::scp
