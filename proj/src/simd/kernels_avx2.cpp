// Compiled with -mavx2; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cfloat>
#include <cmath>
#include <cstdint>
#include <limits>

#include "ctstl/simd/kernels.hpp"

namespace ctstl::simd {
namespace {

inline double horizontal_sum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

inline double horizontal_product(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] * lanes[1]) * (lanes[2] * lanes[3]);
}

inline double horizontal_max(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

ReluSquareStats relu_square_stats_avx2(std::span<const double> y) {
  const std::size_t n = y.size();
  const double* p = y.data();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
  __m256d sumsq = zero;
  __m256d prod = _mm256_set1_pd(1.0);
  __m256d maxabs = zero;
  std::size_t nonpos = 0;

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(p + i);
    const __m256d neg = _mm256_min_pd(v, zero);
    sumsq = _mm256_add_pd(sumsq, _mm256_mul_pd(neg, neg));
    const __m256d pos = _mm256_max_pd(v, zero);
    prod = _mm256_mul_pd(prod, _mm256_mul_pd(pos, pos));
    maxabs = _mm256_max_pd(maxabs, _mm256_and_pd(v, abs_mask));
    const int le = _mm256_movemask_pd(_mm256_cmp_pd(v, zero, _CMP_LE_OQ));
    nonpos += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(le)));
  }

  ReluSquareStats s;
  s.negative_square_sum = horizontal_sum(sumsq);
  s.positive_square_product = horizontal_product(prod);
  s.max_abs = horizontal_max(maxabs);
  s.nonpositive = nonpos;
  for (; i < n; ++i) {
    const double v = p[i];
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

double log_positive_sum_fallback(std::span<const double> y) {
  return scalar_kernels().log_positive_sum(y);
}

// Accumulates the product of positive entries as (mantissa, binary exponent)
// per lane, renormalizing after every multiply, so only four logarithms are
// taken at the end and nothing overflows.
double log_positive_sum_avx2(std::span<const double> y) {
  const std::size_t n = y.size();
  const double* p = y.data();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d smallest = _mm256_set1_pd(DBL_MIN);
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  const __m256i bias = _mm256_set1_epi64x(1023);

  __m256d acc = one;
  __m256i expo = _mm256_setzero_si256();

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(p + i);
    const __m256d pos = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    const __m256d out_of_range =
        _mm256_or_pd(_mm256_cmp_pd(v, smallest, _CMP_LT_OQ), _mm256_cmp_pd(v, inf, _CMP_GE_OQ));
    if (_mm256_movemask_pd(_mm256_and_pd(pos, out_of_range)) != 0) {
      // Subnormal or infinite entries: the bit tricks below do not apply.
      return log_positive_sum_fallback(y);
    }
    const __m256i bits = _mm256_castpd_si256(v);
    const __m256i pos_bits = _mm256_castpd_si256(pos);
    const __m256i e = _mm256_and_si256(
        _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), bias), pos_bits);
    const __m256d m = _mm256_blendv_pd(
        one, _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits)),
        pos);
    expo = _mm256_add_epi64(expo, e);
    acc = _mm256_mul_pd(acc, m);

    const __m256i abits = _mm256_castpd_si256(acc);
    expo = _mm256_add_epi64(expo, _mm256_sub_epi64(_mm256_srli_epi64(abits, 52), bias));
    acc = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(abits, mant_mask), one_bits));
  }

  alignas(32) double lanes[4];
  alignas(32) std::int64_t exps[4];
  _mm256_store_pd(lanes, acc);
  _mm256_store_si256(reinterpret_cast<__m256i*>(exps), expo);
  double total = 0.0;
  std::int64_t exponent_total = 0;
  for (int k = 0; k < 4; ++k) {
    total += std::log(lanes[k]);
    exponent_total += exps[k];
  }
  total += static_cast<double>(exponent_total) * 0.69314718055994530942;
  for (; i < n; ++i) {
    if (p[i] > 0.0) total += std::log(p[i]);
  }
  return total;
}

void gmsr_gradient_avx2(std::span<const double> y, double pos_coef, double neg_coef,
                        std::span<double> out) {
  const std::size_t n = y.size();
  const double* p = y.data();
  double* o = out.data();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d pc = _mm256_set1_pd(pos_coef);
  const __m256d nc = _mm256_set1_pd(neg_coef);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(p + i);
    const __m256d gt = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    const __m256d lt = _mm256_cmp_pd(v, zero, _CMP_LT_OQ);
    __m256d r = _mm256_blendv_pd(zero, _mm256_mul_pd(nc, v), lt);
    r = _mm256_blendv_pd(r, _mm256_div_pd(pc, v), gt);
    _mm256_storeu_pd(o + i, r);
  }
  for (; i < n; ++i) {
    const double v = p[i];
    o[i] = v > 0.0 ? pos_coef / v : (v < 0.0 ? neg_coef * v : 0.0);
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{"avx2", &relu_square_stats_avx2, &log_positive_sum_avx2,
                                 &gmsr_gradient_avx2};
  return table;
}

}  // namespace ctstl::simd
