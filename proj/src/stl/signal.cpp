#include "ctstl/stl/signal.hpp"

#include <cmath>

#include "ctstl/error.hpp"

namespace ctstl::stl {

SampledSignal::SampledSignal(ChannelSet channels, std::vector<double> times,
                             std::vector<double> values)
    : channels_(std::move(channels)), times_(std::move(times)), values_(std::move(values)) {
  if (times_.empty()) throw DimensionError("signal has no samples");
  if (values_.size() != times_.size() * channels_.size()) {
    throw DimensionError("signal value count does not match times x channels");
  }
  for (std::size_t m = 0; m < times_.size(); ++m) {
    if (!std::isfinite(times_[m])) throw GridError("non-finite time stamp");
    if (m > 0 && !(times_[m] > times_[m - 1])) {
      throw GridError("time stamps must be strictly increasing");
    }
  }
}

}  // namespace ctstl::stl
