#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "ctstl/stl/formula.hpp"
#include "ctstl/stl/signal.hpp"
#include "ctstl/transcription/dynamics.hpp"

namespace ctstl::transcription {

/// Uniform node grid with N RK4 substeps per shooting interval. Node k
/// (0-based) sits at k * dt; dense sample m at m * dt / N.
struct GridSpec {
  std::size_t K = 2;
  std::size_t N = 1;
  double tf = 1.0;

  void validate() const;
  double dt() const noexcept { return tf / static_cast<double>(K - 1); }
  double substep() const noexcept { return dt() / static_cast<double>(N); }
  std::size_t dense_size() const noexcept { return (K - 1) * N + 1; }
  double node_time(std::size_t k) const noexcept;
  double dense_time(std::size_t m) const noexcept;
  std::vector<double> dense_times() const;

  /// Throws GridError unless every window endpoint in f is a multiple of the
  /// substep length (to 1e-9 tf).
  void require_commensurate(const stl::Formula& f) const;
};

/// Stacked nodal variables Z = (x_1 .. x_K, u_1 .. u_K).
class DecisionLayout {
 public:
  DecisionLayout(std::size_t state_dim, std::size_t control_dim, std::size_t nodes);

  std::size_t state_dim() const noexcept { return n_; }
  std::size_t control_dim() const noexcept { return m_; }
  std::size_t nodes() const noexcept { return K_; }
  std::size_t size() const noexcept { return K_ * (n_ + m_); }
  std::size_t state_offset(std::size_t k) const noexcept { return k * n_; }
  std::size_t control_offset(std::size_t k) const noexcept { return K_ * n_ + k * m_; }

  Eigen::VectorXd state(const Eigen::VectorXd& z, std::size_t k) const {
    return z.segment(state_offset(k), n_);
  }
  Eigen::VectorXd control(const Eigen::VectorXd& z, std::size_t k) const {
    return z.segment(control_offset(k), m_);
  }

 private:
  std::size_t n_;
  std::size_t m_;
  std::size_t K_;
};

/// First-order hold between u_k at t_k and u_{k+1} at t_k + dt.
Eigen::VectorXd foh_control(const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next, double t,
                            double t_k, double dt);

/// Subnode states of one shooting interval and their exact sensitivities with
/// respect to (x_k, u_k, u_{k+1}), each n x (n + 2m), columns in that order.
struct IntervalSolution {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::MatrixXd> sensitivities;
};

/// Classical RK4 over N uniform substeps with FOH controls at the stage
/// times; the sensitivities differentiate the discrete recursion itself.
IntervalSolution integrate_interval(const DynamicsModel& model, const Eigen::VectorXd& x_k,
                                    const Eigen::VectorXd& u_k, const Eigen::VectorXd& u_next,
                                    std::size_t k, const GridSpec& grid);

struct FlowMap {
  Eigen::VectorXd state;
  Eigen::MatrixXd jacobian;  // n x (n + 2m) w.r.t. (x_k, u_k, u_{k+1})
};

FlowMap flow_map(const DynamicsModel& model, const Eigen::VectorXd& x_k, const Eigen::VectorXd& u_k,
                 const Eigen::VectorXd& u_next, std::size_t k, const GridSpec& grid);

/// Flattened subnode trajectory. Sample 0 is x_1; every later sample belongs
/// to the interval that integrated it, so the sample on a node boundary is
/// the integrated arc end, not the next decision state.
struct DenseTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;    // M x n
  Eigen::MatrixXd controls;  // M x m
  std::vector<std::size_t> owner;          // interval each sample depends on
  std::vector<double> hold_weight;         // u = (1 - w) u_k + w u_{k+1}
  std::vector<Eigen::MatrixXd> sensitivity;  // d state / d (x_k, u_k, u_{k+1})
  std::vector<FlowMap> flows;              // terminal flow of every interval

  std::size_t size() const noexcept { return times.size(); }

  /// Samples as a signal over states then controls.
  stl::SampledSignal signal(const stl::ChannelSet& channels) const;

  /// Chain rule from d/d(samples) (row-major M x (n + m)) to d/dZ.
  Eigen::VectorXd pull_back(std::span<const double> sample_gradient,
                            const DecisionLayout& layout) const;
};

DenseTrajectory build_dense_trajectory(const DynamicsModel& model, const Eigen::VectorXd& z,
                                       const GridSpec& grid);

/// d_k = x_{k+1} - flow_k(x_k, u_k, u_{k+1}), k = 1..K-1.
std::vector<Eigen::VectorXd> defects(const DynamicsModel& model, const Eigen::VectorXd& z,
                                     const GridSpec& grid);

struct DefectLinearization {
  Eigen::VectorXd values;    // stacked defects, (K-1) n
  Eigen::MatrixXd jacobian;  // (K-1) n x K (n + m)
};

DefectLinearization linearize_defects(const DenseTrajectory& trajectory, const Eigen::VectorXd& z,
                                      const DecisionLayout& layout);

}  // namespace ctstl::transcription
