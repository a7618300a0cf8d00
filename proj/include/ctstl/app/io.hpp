#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ctstl/error.hpp"
#include "ctstl/stl/signal.hpp"
#include "ctstl/transcription/transcription.hpp"

namespace ctstl::app {

class CsvError : public Error {
 public:
  using Error::Error;
};

/// printf("%.17g"): enough digits to read back the same double.
std::string format_double(double value);

/// Header "t,<channels...>" then one row per dense sample.
void write_trajectory_csv(std::ostream& out, const transcription::DenseTrajectory& trajectory,
                          const stl::ChannelSet& channels);

/// Reads a CSV with a header row. Column "t" holds the time stamps and every
/// other column becomes a channel, in file order.
stl::SampledSignal read_signal_csv(std::istream& in);

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color = "#1f77b4";
};

struct HorizontalLine {
  double y = 0.0;
  std::string label;
  std::string color = "#d62728";
};

struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  std::string label;
  std::string color = "#2ca02c";
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<HorizontalLine> lines;
  std::vector<Circle> circles;
  bool equal_aspect = false;
  bool markers = false;
};

/// Standalone SVG document with axes, ticks, polylines and a legend. The
/// output depends only on the plot contents.
std::string render_svg(const Plot& plot);

}  // namespace ctstl::app
