#include "ctstl/gmsr/operators.hpp"

#include <atomic>
#include <cfloat>
#include <cmath>

#include "ctstl/error.hpp"
#include "ctstl/simd/kernels.hpp"

namespace ctstl::gmsr {
namespace {

std::atomic<int> forced_route{0};

constexpr std::size_t kDirectMaxLength = 30;
constexpr double kDirectMaxMagnitude = 1e3;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool direct_route_ok(const simd::ReluSquareStats& stats, std::size_t n, double c) {
  if (n > kDirectMaxLength || stats.max_abs > kDirectMaxMagnitude) return false;
  const double cn = std::pow(c, static_cast<double>(n));
  if (!(cn >= DBL_MIN) || !std::isfinite(cn)) return false;
  const double p = stats.positive_square_product;
  return p >= DBL_MIN && std::isfinite(p);
}

void check_inputs(std::span<const double> y, double c, std::span<double> grad) {
  if (y.empty()) throw DimensionError("GMSR aggregation of an empty vector");
  if (!(c > 0.0) || !std::isfinite(c)) throw DimensionError("GMSR shift c must be positive");
  if (grad.size() != y.size()) throw DimensionError("gradient buffer has the wrong length");
}

}  // namespace

void gmsr_force_product_route(int route) { forced_route.store(route); }

bool gmsr_uses_log_space(std::span<const double> y, double c) {
  const int route = forced_route.load();
  if (route != 0) return route == 2;
  const auto stats = simd::kernels().relu_square_stats(y);
  return stats.nonpositive == 0 && !direct_route_ok(stats, y.size(), c);
}

double gmsr_and(std::span<const double> y, double c, std::span<double> grad) {
  check_inputs(y, c, grad);
  const auto& k = simd::kernels();
  const double n = static_cast<double>(y.size());
  const auto stats = k.relu_square_stats(y);

  const double mean_neg = stats.negative_square_sum / n;
  const double m1 = c + mean_neg;

  // Geometric branch: M0 - c = c * expm1(log1p(R) / n) with R = prod / c^n,
  // and dM0/dy_i = (2 / n) * M0 * R / (1 + R) / y_i.
  double m0_minus_c = 0.0;
  double ratio = 0.0;
  if (stats.nonpositive == 0) {
    const int route = forced_route.load();
    const bool direct =
        route == 1 || (route == 0 && direct_route_ok(stats, y.size(), c));
    if (direct) {
      const double r = stats.positive_square_product / std::pow(c, n);
      m0_minus_c = c * std::expm1(std::log1p(r) / n);
      ratio = r / (1.0 + r);
    } else {
      const double log_r = 2.0 * k.log_positive_sum(y) - n * std::log(c);
      m0_minus_c = c * std::expm1(softplus(log_r) / n);
      ratio = sigmoid(log_r);
    }
  }
  const double m0 = c + m0_minus_c;
  const double root0 = std::sqrt(m0);
  const double root1 = std::sqrt(m1);
  const double value = (m0_minus_c - mean_neg) / (root0 + root1);

  k.gmsr_gradient(y, root0 * ratio / n, -1.0 / (n * root1), grad);
  return value;
}

double gmsr_or(std::span<const double> y, double c, std::span<double> grad) {
  check_inputs(y, c, grad);
  std::vector<double> flipped(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) flipped[i] = -y[i];
  // d/dy [-and(-y)] = and'(-y)
  return -gmsr_and(flipped, c, grad);
}

Aggregate gmsr_and(std::span<const double> y, double c) {
  Aggregate out;
  out.gradient.resize(y.size());
  out.value = gmsr_and(y, c, out.gradient);
  return out;
}

Aggregate gmsr_or(std::span<const double> y, double c) {
  Aggregate out;
  out.gradient.resize(y.size());
  out.value = gmsr_or(y, c, out.gradient);
  return out;
}

}  // namespace ctstl::gmsr
