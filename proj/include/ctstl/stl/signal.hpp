#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ctstl/stl/predicate.hpp"

namespace ctstl::stl {

/// Time-stamped samples of a fixed channel set, stored row-major (one row per
/// sample). Times are strictly increasing.
class SampledSignal {
 public:
  SampledSignal() = default;
  SampledSignal(ChannelSet channels, std::vector<double> times, std::vector<double> values);

  const ChannelSet& channels() const noexcept { return channels_; }
  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  std::size_t width() const noexcept { return channels_.size(); }
  std::span<const double> sample(std::size_t m) const {
    return {values_.data() + m * width(), width()};
  }
  std::span<const double> values() const noexcept { return values_; }

 private:
  ChannelSet channels_;
  std::vector<double> times_;
  std::vector<double> values_;
};

}  // namespace ctstl::stl
