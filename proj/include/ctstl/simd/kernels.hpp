#pragma once

// Data-parallel reductions behind the GMSR aggregators. Every kernel has a
// scalar reference implementation; SIMD variants are compiled separately and
// picked at runtime from the CPU feature set. The variants are tested for
// equivalence against the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace ctstl::simd {

struct ReluSquareStats {
  double negative_square_sum = 0.0;   // sum of min(0, y)^2
  double positive_square_product = 1.0;  // product of max(0, y)^2 (0 if any y <= 0)
  double max_abs = 0.0;
  std::size_t nonpositive = 0;        // entries with y <= 0
};

struct KernelTable {
  std::string_view name;

  ReluSquareStats (*relu_square_stats)(std::span<const double> y);

  /// Sum of log(y) over the strictly positive entries; other entries are skipped.
  double (*log_positive_sum)(std::span<const double> y);

  /// out[i] = pos_coef / y[i] if y[i] > 0, neg_coef * y[i] if y[i] < 0, else 0.
  void (*gmsr_gradient)(std::span<const double> y, double pos_coef, double neg_coef,
                        std::span<double> out);
};

enum class Backend { Scalar, Avx2 };

const KernelTable& scalar_kernels();

/// True when the backend was compiled in and the running CPU supports it.
bool backend_available(Backend backend);
const KernelTable& kernels_for(Backend backend);  // throws if unavailable

/// Active table. Defaults to the widest available backend; the environment
/// variable CTSTL_SIMD=scalar forces the reference kernels.
const KernelTable& kernels();
Backend active_backend();
void select_backend(Backend backend);

}  // namespace ctstl::simd
