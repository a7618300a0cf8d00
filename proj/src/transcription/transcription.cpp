#include "ctstl/transcription/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctstl/error.hpp"

namespace ctstl::transcription {

void GridSpec::validate() const {
  if (K < 2) throw GridError("grid needs at least two nodes");
  if (N < 1) throw GridError("grid needs at least one substep per interval");
  if (!(tf > 0.0) || !std::isfinite(tf)) throw GridError("final time must be positive");
}

double GridSpec::node_time(std::size_t k) const noexcept {
  return tf * static_cast<double>(k) / static_cast<double>(K - 1);
}

double GridSpec::dense_time(std::size_t m) const noexcept {
  return tf * static_cast<double>(m) / static_cast<double>(dense_size() - 1);
}

std::vector<double> GridSpec::dense_times() const {
  std::vector<double> t(dense_size());
  for (std::size_t m = 0; m < t.size(); ++m) t[m] = dense_time(m);
  return t;
}

void GridSpec::require_commensurate(const stl::Formula& f) const {
  const double h = substep();
  const double tol = 1e-9 * tf;
  auto check = [&](double endpoint) {
    const double steps = std::round(endpoint / h);
    if (std::abs(steps * h - endpoint) > tol) {
      throw GridError("window endpoint " + std::to_string(endpoint) +
                      " is not a multiple of the substep " + std::to_string(h));
    }
  };
  if (f.is_temporal()) {
    check(f.window().lo);
    check(f.window().hi);
  }
  for (const auto& child : f.operands()) require_commensurate(child);
}

DecisionLayout::DecisionLayout(std::size_t state_dim, std::size_t control_dim, std::size_t nodes)
    : n_(state_dim), m_(control_dim), K_(nodes) {}

Eigen::VectorXd foh_control(const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next, double t,
                            double t_k, double dt) {
  const double tol = 1e-12 * std::max(1.0, std::abs(t_k) + dt);
  if (t < t_k - tol || t > t_k + dt + tol) throw GridError("time outside the hold interval");
  const double s = std::clamp((t - t_k) / dt, 0.0, 1.0);
  return (1.0 - s) * u_k + s * u_next;
}

IntervalSolution integrate_interval(const DynamicsModel& model, const Eigen::VectorXd& x_k,
                                    const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next,
                                    std::size_t k, const GridSpec& grid) {
  const std::size_t n = model.state_dim();
  const std::size_t m = model.control_dim();
  const std::size_t p = n + 2 * m;
  if (static_cast<std::size_t>(x_k.size()) != n || static_cast<std::size_t>(u_k.size()) != m ||
      static_cast<std::size_t>(u_next.size()) != m) {
    throw DimensionError("state or control has the wrong dimension");
  }
  if (k + 1 >= grid.K) throw DimensionError("interval index out of range");

  const double dt = grid.dt();
  const double h = grid.substep();
  const double t_k = grid.node_time(k);

  Eigen::MatrixXd fx(n, n), fu(n, m), hold(m, p);

  // One RK4 stage: derivative and its sensitivity given the stage state.
  auto stage = [&](double tau, const Eigen::VectorXd& xs, const Eigen::MatrixXd& ss,
                   Eigen::VectorXd& f, Eigen::MatrixXd& df) {
    const double s = (tau - t_k) / dt;
    const Eigen::VectorXd u = (1.0 - s) * u_k + s * u_next;
    f = model.rhs(tau, xs, u);
    model.jacobians(tau, xs, u, fx, fu);
    hold.setZero();
    hold.middleCols(n, m).diagonal().setConstant(1.0 - s);
    hold.rightCols(m).diagonal().setConstant(s);
    df = fx * ss + fu * hold;
  };

  IntervalSolution out;
  out.states.reserve(grid.N + 1);
  out.sensitivities.reserve(grid.N + 1);

  Eigen::VectorXd x = x_k;
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(n, p);
  sens.leftCols(n).setIdentity();
  out.states.push_back(x);
  out.sensitivities.push_back(sens);

  Eigen::VectorXd k1, k2, k3, k4;
  Eigen::MatrixXd d1, d2, d3, d4;
  for (std::size_t i = 0; i < grid.N; ++i) {
    const double t0 = t_k + static_cast<double>(i) * h;
    stage(t0, x, sens, k1, d1);
    stage(t0 + 0.5 * h, x + 0.5 * h * k1, sens + 0.5 * h * d1, k2, d2);
    stage(t0 + 0.5 * h, x + 0.5 * h * k2, sens + 0.5 * h * d2, k3, d3);
    stage(t0 + h, x + h * k3, sens + h * d3, k4, d4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sens += (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
    if (!x.allFinite() || !sens.allFinite()) {
      throw Error("integration diverged in interval " + std::to_string(k));
    }
    out.states.push_back(x);
    out.sensitivities.push_back(sens);
  }
  return out;
}

FlowMap flow_map(const DynamicsModel& model, const Eigen::VectorXd& x_k, const Eigen::VectorXd& u_k,
                 const Eigen::VectorXd& u_next, std::size_t k, const GridSpec& grid) {
  auto sol = integrate_interval(model, x_k, u_k, u_next, k, grid);
  return {std::move(sol.states.back()), std::move(sol.sensitivities.back())};
}

DenseTrajectory build_dense_trajectory(const DynamicsModel& model, const Eigen::VectorXd& z,
                                       const GridSpec& grid) {
  grid.validate();
  const std::size_t n = model.state_dim();
  const std::size_t m = model.control_dim();
  const DecisionLayout layout(n, m, grid.K);
  if (static_cast<std::size_t>(z.size()) != layout.size()) {
    throw DimensionError("decision vector has " + std::to_string(z.size()) + " entries, expected " +
                         std::to_string(layout.size()));
  }

  const std::size_t M = grid.dense_size();
  DenseTrajectory traj;
  traj.times = grid.dense_times();
  traj.states.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(n));
  traj.controls.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(m));
  traj.owner.resize(M);
  traj.hold_weight.resize(M);
  traj.sensitivity.resize(M);
  traj.flows.reserve(grid.K - 1);

  for (std::size_t k = 0; k + 1 < grid.K; ++k) {
    const Eigen::VectorXd u_k = layout.control(z, k);
    const Eigen::VectorXd u_next = layout.control(z, k + 1);
    auto sol = integrate_interval(model, layout.state(z, k), u_k, u_next, k, grid);
    const std::size_t first = k == 0 ? 0 : 1;
    for (std::size_t i = first; i <= grid.N; ++i) {
      const std::size_t idx = k * grid.N + i;
      const double w = static_cast<double>(i) / static_cast<double>(grid.N);
      traj.states.row(static_cast<Eigen::Index>(idx)) = sol.states[i].transpose();
      traj.controls.row(static_cast<Eigen::Index>(idx)) = ((1.0 - w) * u_k + w * u_next).transpose();
      traj.owner[idx] = k;
      traj.hold_weight[idx] = w;
      traj.sensitivity[idx] = sol.sensitivities[i];
    }
    traj.flows.push_back({sol.states.back(), sol.sensitivities.back()});
  }
  return traj;
}

stl::SampledSignal DenseTrajectory::signal(const stl::ChannelSet& channels) const {
  const auto n = states.cols();
  const auto m = controls.cols();
  if (static_cast<std::size_t>(n + m) != channels.size()) {
    throw DimensionError("channel set does not match state and control dimensions");
  }
  std::vector<double> values;
  values.reserve(size() * channels.size());
  for (std::size_t s = 0; s < size(); ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    for (Eigen::Index j = 0; j < n; ++j) values.push_back(states(row, j));
    for (Eigen::Index j = 0; j < m; ++j) values.push_back(controls(row, j));
  }
  return stl::SampledSignal(channels, times, std::move(values));
}

Eigen::VectorXd DenseTrajectory::pull_back(std::span<const double> sample_gradient,
                                           const DecisionLayout& layout) const {
  const std::size_t n = layout.state_dim();
  const std::size_t m = layout.control_dim();
  const std::size_t width = n + m;
  if (sample_gradient.size() != size() * width) {
    throw DimensionError("sample gradient has the wrong size");
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
  const auto ni = static_cast<Eigen::Index>(n);
  const auto mi = static_cast<Eigen::Index>(m);
  for (std::size_t s = 0; s < size(); ++s) {
    Eigen::Map<const Eigen::VectorXd> gx(sample_gradient.data() + s * width, ni);
    Eigen::Map<const Eigen::VectorXd> gu(sample_gradient.data() + s * width + n, mi);
    const std::size_t k = owner[s];
    const double w = hold_weight[s];
    const Eigen::MatrixXd& S = sensitivity[s];
    const auto xo = static_cast<Eigen::Index>(layout.state_offset(k));
    const auto uo = static_cast<Eigen::Index>(layout.control_offset(k));
    const auto un = static_cast<Eigen::Index>(layout.control_offset(k + 1));
    g.segment(xo, ni) += S.leftCols(ni).transpose() * gx;
    g.segment(uo, mi) += S.middleCols(ni, mi).transpose() * gx + (1.0 - w) * gu;
    g.segment(un, mi) += S.rightCols(mi).transpose() * gx + w * gu;
  }
  return g;
}

std::vector<Eigen::VectorXd> defects(const DynamicsModel& model, const Eigen::VectorXd& z,
                                     const GridSpec& grid) {
  const DecisionLayout layout(model.state_dim(), model.control_dim(), grid.K);
  if (static_cast<std::size_t>(z.size()) != layout.size()) {
    throw DimensionError("decision vector has the wrong size");
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(grid.K - 1);
  for (std::size_t k = 0; k + 1 < grid.K; ++k) {
    const auto flow = flow_map(model, layout.state(z, k), layout.control(z, k),
                               layout.control(z, k + 1), k, grid);
    out.push_back(layout.state(z, k + 1) - flow.state);
  }
  return out;
}

DefectLinearization linearize_defects(const DenseTrajectory& trajectory, const Eigen::VectorXd& z,
                                      const DecisionLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.state_dim());
  const auto m = static_cast<Eigen::Index>(layout.control_dim());
  const std::size_t intervals = trajectory.flows.size();
  DefectLinearization lin;
  lin.values.resize(static_cast<Eigen::Index>(intervals) * n);
  lin.jacobian.setZero(static_cast<Eigen::Index>(intervals) * n,
                       static_cast<Eigen::Index>(layout.size()));
  for (std::size_t k = 0; k < intervals; ++k) {
    const auto row = static_cast<Eigen::Index>(k) * n;
    const FlowMap& flow = trajectory.flows[k];
    lin.values.segment(row, n) = layout.state(z, k + 1) - flow.state;
    lin.jacobian.block(row, static_cast<Eigen::Index>(layout.state_offset(k + 1)), n, n)
        .setIdentity();
    lin.jacobian.block(row, static_cast<Eigen::Index>(layout.state_offset(k)), n, n) =
        -flow.jacobian.leftCols(n);
    lin.jacobian.block(row, static_cast<Eigen::Index>(layout.control_offset(k)), n, m) =
        -flow.jacobian.middleCols(n, m);
    lin.jacobian.block(row, static_cast<Eigen::Index>(layout.control_offset(k + 1)), n, m) =
        -flow.jacobian.rightCols(m);
  }
  return lin;
}

}  // namespace ctstl::transcription
