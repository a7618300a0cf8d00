#include "ctstl/transcription/dynamics.hpp"

#include <cmath>

#include "ctstl/error.hpp"

namespace ctstl::transcription {

stl::ChannelSet DynamicsModel::channels() const {
  auto names = state_names();
  for (auto& n : control_names()) names.push_back(std::move(n));
  return stl::ChannelSet(std::move(names));
}

PointMass3d::PointMass3d(double mass, double g0) : mass_(mass), g0_(g0) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw DimensionError("mass must be positive");
  if (!std::isfinite(g0)) throw DimensionError("gravity must be finite");
}

std::vector<std::string> PointMass3d::state_names() const {
  return {"rx", "ry", "rz", "vx", "vy", "vz"};
}

std::vector<std::string> PointMass3d::control_names() const { return {"ux", "uy", "uz"}; }

Eigen::VectorXd PointMass3d::rhs(double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::VectorXd f(6);
  f.head<3>() = x.segment<3>(3);
  f.tail<3>() = u / mass_;
  f(5) -= g0_;
  return f;
}

void PointMass3d::jacobians(double, const Eigen::VectorXd&, const Eigen::VectorXd&,
                            Eigen::MatrixXd& fx, Eigen::MatrixXd& fu) const {
  fx.setZero(6, 6);
  fx.block<3, 3>(0, 3).setIdentity();
  fu.setZero(6, 3);
  fu.block<3, 3>(3, 0) = Eigen::Matrix3d::Identity() / mass_;
}

Eigen::VectorXd DoubleIntegrator1d::rhs(double, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u) const {
  Eigen::VectorXd f(2);
  f << x(1), u(0);
  return f;
}

void DoubleIntegrator1d::jacobians(double, const Eigen::VectorXd&, const Eigen::VectorXd&,
                                   Eigen::MatrixXd& fx, Eigen::MatrixXd& fu) const {
  fx.setZero(2, 2);
  fx(0, 1) = 1.0;
  fu.setZero(2, 1);
  fu(1, 0) = 1.0;
}

std::unique_ptr<DynamicsModel> make_model(std::string_view id, const ModelParameters& params) {
  auto get = [&](std::string_view key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (id == "point_mass_3d") {
    for (const auto& [key, value] : params) {
      if (key != "m" && key != "g0") throw DimensionError("point_mass_3d has no parameter '" + key + "'");
    }
    return std::make_unique<PointMass3d>(get("m", 1.0), get("g0", 9.806));
  }
  if (id == "double_integrator_1d") {
    if (!params.empty()) throw DimensionError("double_integrator_1d takes no parameters");
    return std::make_unique<DoubleIntegrator1d>();
  }
  throw DimensionError("unknown dynamics model '" + std::string(id) + "'");
}

std::vector<std::string> registered_models() { return {"point_mass_3d", "double_integrator_1d"}; }

}  // namespace ctstl::transcription
