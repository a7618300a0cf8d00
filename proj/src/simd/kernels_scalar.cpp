#include <algorithm>
#include <cmath>

#include "ctstl/simd/kernels.hpp"

namespace ctstl::simd {
namespace {

ReluSquareStats relu_square_stats_scalar(std::span<const double> y) {
  ReluSquareStats s;
  for (double v : y) {
    s.max_abs = std::max(s.max_abs, std::abs(v));
    if (v > 0.0) {
      s.positive_square_product *= v * v;
    } else {
      s.negative_square_sum += v * v;
      ++s.nonpositive;
    }
  }
  if (s.nonpositive > 0) s.positive_square_product = 0.0;
  return s;
}

double log_positive_sum_scalar(std::span<const double> y) {
  double total = 0.0;
  for (double v : y) {
    if (v > 0.0) total += std::log(v);
  }
  return total;
}

void gmsr_gradient_scalar(std::span<const double> y, double pos_coef, double neg_coef,
                          std::span<double> out) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = y[i];
    out[i] = v > 0.0 ? pos_coef / v : (v < 0.0 ? neg_coef * v : 0.0);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &relu_square_stats_scalar, &log_positive_sum_scalar,
                                 &gmsr_gradient_scalar};
  return table;
}

}  // namespace ctstl::simd
