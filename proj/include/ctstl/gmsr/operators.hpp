#pragma once

#include <span>
#include <vector>

namespace ctstl::gmsr {

/// Value and exact gradient of a smooth aggregator.
struct Aggregate {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Smooth, sign-exact conjunction of y with shift c > 0:
///
///   and_c(y) = sqrt(M0(relu(y)^2)) - sqrt(M1(negrelu(y)^2))
///   M0(z)    = (c^n + prod z)^(1/n)
///   M1(z)    = c + mean(z)
///
/// and_c(y) >= 0 exactly when min(y) >= 0. The value is evaluated as
/// (M0 - M1) / (sqrt(M0) + sqrt(M1)) so its sign stays correct when both
/// roots are close to sqrt(c). The product is formed in log-space when
/// n > 30, max|y| > 1e3, or the direct product would leave the normal range.
Aggregate gmsr_and(std::span<const double> y, double c);

/// Smooth disjunction, or_c(y) = -and_c(-y).
Aggregate gmsr_or(std::span<const double> y, double c);

/// Allocation-free forms; grad must have y.size() entries.
double gmsr_and(std::span<const double> y, double c, std::span<double> grad);
double gmsr_or(std::span<const double> y, double c, std::span<double> grad);

/// Which product route a given input takes (exposed for tests).
bool gmsr_uses_log_space(std::span<const double> y, double c);

/// Forces one product route regardless of the input (tests only). 0 = automatic,
/// 1 = always direct, 2 = always log-space.
void gmsr_force_product_route(int route);

}  // namespace ctstl::gmsr
