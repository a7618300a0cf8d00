#include "ctstl/gmsr/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ctstl/error.hpp"
#include "ctstl/gmsr/operators.hpp"

namespace ctstl::gmsr {

using stl::Formula;

void GmsrConfig::validate() const {
  for (double v : {c, until_pair_c, until_prefix_c}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DimensionError("GMSR shift parameters must be positive");
  }
}

double grid_tolerance(std::span<const double> times) {
  if (times.empty()) return 0.0;
  return 1e-9 * (times.back() - times.front());
}

IndexRange index_set(std::size_t ell, const stl::Interval& window, std::span<const double> times) {
  if (ell >= times.size()) throw GridError("evaluation index outside the signal");
  stl::validate_interval(window);
  const double tol = grid_tolerance(times);
  const double lo = times[ell] + window.lo;
  const double hi = times[ell] + window.hi;
  if (hi > times.back() + tol) {
    throw GridError("window [" + std::to_string(window.lo) + "," + std::to_string(window.hi) +
                    "] at t=" + std::to_string(times[ell]) + " exits the horizon");
  }
  const auto first = std::lower_bound(times.begin(), times.end(), lo - tol);
  const auto past = std::upper_bound(times.begin(), times.end(), hi + tol);
  if (first >= past) throw GridError("window selects no samples");
  return {static_cast<std::size_t>(first - times.begin()),
          static_cast<std::size_t>(past - times.begin()) - 1};
}

IndexRange window_indices(std::size_t ell, const stl::Interval& window,
                          std::span<const double> times) {
  const IndexRange r = index_set(ell, window, times);
  const double tol = grid_tolerance(times);
  if (std::abs(times[r.first] - (times[ell] + window.lo)) > tol ||
      std::abs(times[r.last] - (times[ell] + window.hi)) > tol) {
    throw GridError("window endpoints do not fall on the sample grid");
  }
  return r;
}

RobustnessEvaluator::RobustnessEvaluator(const stl::SampledSignal& signal, GmsrConfig config)
    : signal_(signal), config_(config), kink_margin_(std::numeric_limits<double>::infinity()) {
  config_.validate();
}

std::uint32_t RobustnessEvaluator::push(double value) {
  Entry e;
  e.value = value;
  e.arg_begin = e.arg_end = static_cast<std::uint32_t>(args_.size());
  entries_.push_back(e);
  return static_cast<std::uint32_t>(entries_.size() - 1);
}

std::uint32_t RobustnessEvaluator::aggregate(std::span<const std::uint32_t> inputs,
                                             std::span<const double> signs, bool disjunction,
                                             double c) {
  std::vector<double> y(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    y[i] = signs[i] * entries_[inputs[i]].value;
    kink_margin_ = std::min(kink_margin_, std::abs(y[i]));
  }
  std::vector<double> grad(inputs.size());
  const double v = disjunction ? gmsr_or(y, c, grad) : gmsr_and(y, c, grad);
  const std::uint32_t id = push(v);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    args_.push_back({inputs[i], signs[i] * grad[i]});
  }
  entries_[id].arg_end = static_cast<std::uint32_t>(args_.size());
  return id;
}

std::uint32_t RobustnessEvaluator::node(const Formula& f, std::size_t ell) {
  const auto key = std::make_pair(f.id(), ell);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  std::uint32_t id = 0;
  const auto ops = f.operands();
  switch (f.kind()) {
    case Formula::Kind::Predicate: {
      id = push(f.predicate().evaluate(signal_.sample(ell)));
      entries_[id].sample = static_cast<std::int64_t>(ell);
      entries_[id].predicate = &f.predicate();
      break;
    }
    case Formula::Kind::Not: {
      const std::uint32_t child = node(ops[0], ell);
      id = push(-entries_[child].value);
      args_.push_back({child, -1.0});
      entries_[id].arg_end = static_cast<std::uint32_t>(args_.size());
      break;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<std::uint32_t> in;
      for (const auto& child : ops) in.push_back(node(child, ell));
      const std::vector<double> signs(in.size(), 1.0);
      id = aggregate(in, signs, f.kind() == Formula::Kind::Or, config_.c);
      break;
    }
    case Formula::Kind::Implies: {
      const std::uint32_t in[2] = {node(ops[0], ell), node(ops[1], ell)};
      const double signs[2] = {-1.0, 1.0};
      id = aggregate(in, signs, true, config_.c);
      break;
    }
    case Formula::Kind::Always:
    case Formula::Kind::Eventually: {
      const IndexRange r = window_indices(ell, f.window(), signal_.times());
      std::vector<std::uint32_t> in;
      in.reserve(r.size());
      for (std::size_t m = r.first; m <= r.last; ++m) in.push_back(node(ops[0], m));
      const std::vector<double> signs(in.size(), 1.0);
      id = aggregate(in, signs, f.kind() == Formula::Kind::Eventually, config_.c);
      break;
    }
    case Formula::Kind::Until: {
      // z_m = and(rhs(m), and(lhs(ell..m))), result = or_m z_m over the window.
      const IndexRange r = window_indices(ell, f.window(), signal_.times());
      std::vector<std::uint32_t> lhs;
      for (std::size_t q = ell; q <= r.last; ++q) lhs.push_back(node(ops[0], q));
      std::vector<std::uint32_t> z;
      z.reserve(r.size());
      const std::vector<double> ones(lhs.size(), 1.0);
      for (std::size_t m = r.first; m <= r.last; ++m) {
        const std::size_t count = m - ell + 1;
        const std::uint32_t prefix =
            aggregate(std::span(lhs).first(count), std::span(ones).first(count), false,
                      config_.until_prefix_c);
        const std::uint32_t pair[2] = {node(ops[1], m), prefix};
        const double signs[2] = {1.0, 1.0};
        z.push_back(aggregate(pair, signs, false, config_.until_pair_c));
      }
      const std::vector<double> signs(z.size(), 1.0);
      id = aggregate(z, signs, true, config_.c);
      break;
    }
  }
  memo_.emplace(key, id);
  return id;
}

double RobustnessEvaluator::value(const Formula& f, std::size_t ell) {
  if (ell >= signal_.size()) throw GridError("evaluation index outside the signal");
  return entries_[node(f, ell)].value;
}

RobustnessResult RobustnessEvaluator::evaluate(const Formula& f, std::size_t ell) {
  if (ell >= signal_.size()) throw GridError("evaluation index outside the signal");
  const std::uint32_t root = node(f, ell);

  RobustnessResult result;
  result.value = entries_[root].value;
  result.kink_margin = kink_margin_;
  result.gradient.assign(signal_.size() * signal_.width(), 0.0);

  std::vector<double> adjoint(root + 1, 0.0);
  adjoint[root] = 1.0;
  const std::size_t width = signal_.width();
  for (std::int64_t i = root; i >= 0; --i) {
    const double a = adjoint[static_cast<std::size_t>(i)];
    if (a == 0.0) continue;
    const Entry& e = entries_[static_cast<std::size_t>(i)];
    if (e.predicate != nullptr) {
      const auto m = static_cast<std::size_t>(e.sample);
      e.predicate->accumulate_gradient(signal_.sample(m), a,
                                       std::span(result.gradient).subspan(m * width, width));
      continue;
    }
    for (std::uint32_t k = e.arg_begin; k < e.arg_end; ++k) {
      adjoint[args_[k].entry] += a * args_[k].partial;
    }
  }
  return result;
}

RobustnessResult eval_robustness(const Formula& f, const stl::SampledSignal& signal,
                                 std::size_t ell, const GmsrConfig& config) {
  RobustnessEvaluator evaluator(signal, config);
  return evaluator.evaluate(f, ell);
}

std::vector<std::optional<double>> robustness_trace(const Formula& f,
                                                    const stl::SampledSignal& signal,
                                                    const GmsrConfig& config) {
  std::vector<std::optional<double>> out(signal.size());
  RobustnessEvaluator evaluator(signal, config);
  for (std::size_t m = 0; m < signal.size(); ++m) {
    try {
      out[m] = evaluator.value(f, m);
    } catch (const GridError&) {
      out[m] = std::nullopt;
    }
  }
  return out;
}

}  // namespace ctstl::gmsr
