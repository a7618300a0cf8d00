#include "ctstl/app/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ctstl::app {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const transcription::DenseTrajectory& trajectory,
                          const stl::ChannelSet& channels) {
  const auto n = trajectory.states.cols();
  const auto m = trajectory.controls.cols();
  if (static_cast<std::size_t>(n + m) != channels.size()) {
    throw DimensionError("channel set does not match the trajectory");
  }
  out << 't';
  for (const auto& name : channels.names()) out << ',' << name;
  out << '\n';
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    out << format_double(trajectory.times[s]);
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_double(trajectory.states(row, j));
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << format_double(trajectory.controls(row, j));
    out << '\n';
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line, std::size_t column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw CsvError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                   ": not a number: '" + cell + "'");
  }
  return value;
}

}  // namespace

stl::SampledSignal read_signal_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split(line);
  }
  if (header.empty()) throw CsvError("missing header row");

  std::size_t time_col = header.size();
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) throw CsvError("empty column name in header");
    if (header[c] == "t") {
      if (time_col != header.size()) throw CsvError("duplicate time column 't'");
      time_col = c;
    } else {
      names.push_back(header[c]);
    }
  }
  if (time_col == header.size()) throw CsvError("missing time column 't'");
  for (std::size_t a = 0; a < names.size(); ++a) {
    for (std::size_t b = a + 1; b < names.size(); ++b) {
      if (names[a] == names[b]) throw CsvError("duplicate column '" + names[a] + "'");
    }
  }

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_cell(cells[c], line_no, c + 1);
      if (c == time_col) {
        times.push_back(v);
      } else {
        values.push_back(v);
      }
    }
  }
  if (times.empty()) throw CsvError("no data rows");
  return stl::SampledSignal(stl::ChannelSet(std::move(names)), std::move(times), std::move(values));
}

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 78.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

std::string fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v, double step) {
  if (std::abs(v) < 1e-9 * step) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

double nice_step(double range) {
  const double raw = range / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  if (frac < 1.5) return mag;
  if (frac < 3.5) return 2.0 * mag;
  if (frac < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(1.0, std::abs(hi)) * 0.5;
      lo -= pad;
      hi += pad;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

std::vector<double> ticks(const Range& r, double step) {
  std::vector<double> out;
  for (auto i = static_cast<long long>(std::ceil(r.lo / step)); i * step <= r.hi; ++i) {
    out.push_back(static_cast<double>(i) * step);
  }
  return out;
}

}  // namespace

std::string render_svg(const Plot& plot) {
  Range xr, yr;
  for (const auto& s : plot.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  for (const auto& l : plot.lines) yr.add(l.y);
  for (const auto& c : plot.circles) {
    xr.add(c.cx - c.r);
    xr.add(c.cx + c.r);
    yr.add(c.cy - c.r);
    yr.add(c.cy + c.r);
  }
  xr.finish();
  yr.finish();

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  if (plot.equal_aspect) {
    const double scale = std::max((xr.hi - xr.lo) / pw, (yr.hi - yr.lo) / ph);
    const double xc = 0.5 * (xr.lo + xr.hi);
    const double yc = 0.5 * (yr.lo + yr.hi);
    xr.lo = xc - 0.5 * scale * pw;
    xr.hi = xc + 0.5 * scale * pw;
    yr.lo = yc - 0.5 * scale * ph;
    yr.hi = yc + 0.5 * scale * ph;
  }
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fixed(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
    << escape(plot.title) << "</text>\n";

  const double xstep = nice_step(xr.hi - xr.lo);
  const double ystep = nice_step(yr.hi - yr.lo);
  o << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double v : ticks(xr, xstep)) {
    o << "<line x1=\"" << fixed(px(v)) << "\" y1=\"" << fixed(kTop) << "\" x2=\"" << fixed(px(v))
      << "\" y2=\"" << fixed(kTop + ph) << "\"/>\n";
  }
  for (double v : ticks(yr, ystep)) {
    o << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(py(v)) << "\" x2=\"" << fixed(kLeft + pw)
      << "\" y2=\"" << fixed(py(v)) << "\"/>\n";
  }
  o << "</g>\n<g font-size=\"11\" fill=\"#333333\">\n";
  for (double v : ticks(xr, xstep)) {
    o << "<text x=\"" << fixed(px(v)) << "\" y=\"" << fixed(kTop + ph + 16)
      << "\" text-anchor=\"middle\">" << tick_label(v, xstep) << "</text>\n";
  }
  for (double v : ticks(yr, ystep)) {
    o << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(py(v) + 4)
      << "\" text-anchor=\"end\">" << tick_label(v, ystep) << "</text>\n";
  }
  o << "</g>\n";
  o << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(kTop) << "\" width=\"" << fixed(pw)
    << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  o << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kHeight - 14)
    << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(plot.x_label) << "</text>\n";
  o << "<text transform=\"translate(18 " << fixed(kTop + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" << escape(plot.y_label)
    << "</text>\n";

  for (const auto& c : plot.circles) {
    const double rx = c.r / (xr.hi - xr.lo) * pw;
    const double ry = c.r / (yr.hi - yr.lo) * ph;
    o << "<ellipse cx=\"" << fixed(px(c.cx)) << "\" cy=\"" << fixed(py(c.cy)) << "\" rx=\""
      << fixed(rx) << "\" ry=\"" << fixed(ry) << "\" fill=\"" << c.color
      << "\" fill-opacity=\"0.25\" stroke=\"" << c.color << "\"/>\n";
  }
  for (const auto& l : plot.lines) {
    o << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(py(l.y)) << "\" x2=\""
      << fixed(kLeft + pw) << "\" y2=\"" << fixed(py(l.y)) << "\" stroke=\"" << l.color
      << "\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (const auto& s : plot.series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\" points=\"";
    const std::size_t count = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < count; ++i) {
      if (i) o << ' ';
      o << fixed(px(s.x[i])) << ',' << fixed(py(s.y[i]));
    }
    o << "\"/>\n";
    if (plot.markers) {
      for (std::size_t i = 0; i < count; ++i) {
        o << "<circle cx=\"" << fixed(px(s.x[i])) << "\" cy=\"" << fixed(py(s.y[i]))
          << "\" r=\"2.2\" fill=\"" << s.color << "\"/>\n";
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& s : plot.series)
    if (!s.label.empty()) legend.emplace_back(s.label, s.color);
  for (const auto& l : plot.lines)
    if (!l.label.empty()) legend.emplace_back(l.label, l.color);
  for (const auto& c : plot.circles)
    if (!c.label.empty()) legend.emplace_back(c.label, c.color);
  double ly = kTop + 16;
  for (const auto& [label, color] : legend) {
    const double lx = kLeft + pw - 150;
    o << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly - 4) << "\" x2=\"" << fixed(lx + 20)
      << "\" y2=\"" << fixed(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << fixed(lx + 26) << "\" y=\"" << fixed(ly) << "\" font-size=\"12\">"
      << escape(label) << "</text>\n";
    ly += 16;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace ctstl::app
