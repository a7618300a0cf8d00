#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ctstl/stl/predicate.hpp"

namespace ctstl::transcription {

/// Continuous-time dynamics xdot = F(t, x, u) with analytic Jacobians.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual std::string_view id() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t control_dim() const = 0;
  virtual std::vector<std::string> state_names() const = 0;
  virtual std::vector<std::string> control_names() const = 0;

  virtual Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) const = 0;
  virtual void jacobians(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         Eigen::MatrixXd& fx, Eigen::MatrixXd& fu) const = 0;

  /// State channels followed by control channels.
  stl::ChannelSet channels() const;
};

/// Point-mass quadrotor: r' = v, v' = u / m + (0, 0, -g0).
/// Channels rx ry rz vx vy vz | ux uy uz.
class PointMass3d final : public DynamicsModel {
 public:
  PointMass3d(double mass, double g0);

  std::string_view id() const override { return "point_mass_3d"; }
  std::size_t state_dim() const override { return 6; }
  std::size_t control_dim() const override { return 3; }
  std::vector<std::string> state_names() const override;
  std::vector<std::string> control_names() const override;
  Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  void jacobians(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& fx,
                 Eigen::MatrixXd& fu) const override;

  double mass() const noexcept { return mass_; }
  double g0() const noexcept { return g0_; }

 private:
  double mass_;
  double g0_;
};

/// r' = v, v' = u. Channels r v | u.
class DoubleIntegrator1d final : public DynamicsModel {
 public:
  std::string_view id() const override { return "double_integrator_1d"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t control_dim() const override { return 1; }
  std::vector<std::string> state_names() const override { return {"r", "v"}; }
  std::vector<std::string> control_names() const override { return {"u"}; }
  Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  void jacobians(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& fx,
                 Eigen::MatrixXd& fu) const override;
};

using ModelParameters = std::map<std::string, double, std::less<>>;

/// Built-in registry: "point_mass_3d" (parameters m, g0) and
/// "double_integrator_1d" (no parameters).
std::unique_ptr<DynamicsModel> make_model(std::string_view id, const ModelParameters& params);
std::vector<std::string> registered_models();

}  // namespace ctstl::transcription
