#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ctstl/stl/formula.hpp"
#include "ctstl/stl/signal.hpp"

namespace ctstl::gmsr {

/// Shift parameters of the smooth aggregators. `c` is used by every logical
/// and temporal aggregation; the until recursion uses `until_pair_c` for the
/// (rhs, prefix) pair and `until_prefix_c` for the lhs prefix.
struct GmsrConfig {
  double c = 0.005;
  double until_pair_c = 0.005;
  double until_prefix_c = 0.005;

  static GmsrConfig uniform(double c) { return {c, c, c}; }
  void validate() const;
};

/// Inclusive, 0-based range of sample indices.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const noexcept { return last - first + 1; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Absolute time tolerance used for window membership: 1e-9 of the horizon.
double grid_tolerance(std::span<const double> times);

/// Samples whose time lies in [t_ell + lo, t_ell + hi] (tolerance above).
/// Throws GridError if the window leaves the horizon or selects nothing.
IndexRange index_set(std::size_t ell, const stl::Interval& window, std::span<const double> times);

/// index_set plus the requirement that both window endpoints fall on a sample.
IndexRange window_indices(std::size_t ell, const stl::Interval& window,
                          std::span<const double> times);

struct RobustnessResult {
  double value = 0.0;
  /// d value / d sample, row-major over (sample, channel), size M * C.
  std::vector<double> gradient;
  /// Smallest |input| seen by any aggregator; small values mean the point is
  /// close to a kink of relu^2.
  double kink_margin = 0.0;
};

/// Records the smooth robustness computation as a tape so that values can be
/// shared between evaluation times and the exact gradient with respect to the
/// signal samples is obtained by one reverse sweep.
class RobustnessEvaluator {
 public:
  RobustnessEvaluator(const stl::SampledSignal& signal, GmsrConfig config);

  double value(const stl::Formula& f, std::size_t ell);
  RobustnessResult evaluate(const stl::Formula& f, std::size_t ell);
  double kink_margin() const noexcept { return kink_margin_; }

 private:
  struct Entry {
    double value = 0.0;
    std::uint32_t arg_begin = 0;
    std::uint32_t arg_end = 0;
    std::int64_t sample = -1;  // >= 0 for predicate leaves
    const stl::PredicateExpr* predicate = nullptr;
  };
  struct Arg {
    std::uint32_t entry;
    double partial;
  };
  struct KeyHash {
    std::size_t operator()(const std::pair<const void*, std::size_t>& k) const noexcept {
      return std::hash<const void*>()(k.first) ^ (k.second * 0x9E3779B97F4A7C15ULL);
    }
  };

  std::uint32_t node(const stl::Formula& f, std::size_t ell);
  std::uint32_t aggregate(std::span<const std::uint32_t> inputs, std::span<const double> signs,
                          bool disjunction, double c);
  std::uint32_t push(double value);

  const stl::SampledSignal& signal_;
  GmsrConfig config_;
  std::vector<Entry> entries_;
  std::vector<Arg> args_;
  std::unordered_map<std::pair<const void*, std::size_t>, std::uint32_t, KeyHash> memo_;
  double kink_margin_;
};

/// Smooth robustness at sample ell together with its gradient.
RobustnessResult eval_robustness(const stl::Formula& f, const stl::SampledSignal& signal,
                                 std::size_t ell, const GmsrConfig& config);

/// Robustness at every sample; empty where a window leaves the horizon.
std::vector<std::optional<double>> robustness_trace(const stl::Formula& f,
                                                    const stl::SampledSignal& signal,
                                                    const GmsrConfig& config);

}  // namespace ctstl::gmsr
