#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ctstl/stl/formula.hpp"
#include "ctstl/stl/predicate.hpp"
#include "ctstl/stl/signal.hpp"

namespace ctstl::testing {

// Random formulas over the channels "a" and "b" whose temporal windows fit
// inside `horizon` time units when evaluated at t = 0. Window endpoints are
// integers so they land on a unit-spaced sample grid.
class FormulaGenerator {
 public:
  explicit FormulaGenerator(std::uint64_t seed) : rng_(seed) {}

  stl::ChannelSet channels() const { return stl::ChannelSet({"a", "b"}); }

  stl::PredicateExpr predicate() {
    using E = stl::PredicateExpr;
    const auto a = E::channel(0, "a");
    const auto b = E::channel(1, "b");
    const double k = std::round(uniform(-1.0, 1.0) * 8.0) / 8.0;
    switch (pick(5)) {
      case 0: return E::sub(a, E::constant(k));
      case 1: return E::sub(E::constant(k), b);
      case 2: return E::sub(E::mul(a, b), E::constant(k));
      case 3: return E::sub(E::pow(a, 2), E::constant(std::abs(k)));
      default: return E::add(E::mul(E::constant(2.0), a), E::neg(b));
    }
  }

  stl::Formula formula(int depth, int horizon) {
    using F = stl::Formula;
    if (depth <= 1) return F::predicate(predicate());
    const int choice = pick(horizon > 0 ? 8 : 5);
    switch (choice) {
      case 0: return F::predicate(predicate());
      case 1: return F::negation(formula(depth - 1, horizon));
      case 2: return F::conjunction(operands(depth, horizon));
      case 3: return F::disjunction(operands(depth, horizon));
      case 4: return F::implies(formula(depth - 1, horizon), formula(depth - 1, horizon));
      default: {
        const int hi = 1 + pick(horizon);
        const int lo = pick(hi + 1);
        const stl::Interval w{static_cast<double>(lo), static_cast<double>(hi)};
        if (choice == 5) return F::always(w, formula(depth - 1, horizon - hi));
        if (choice == 6) return F::eventually(w, formula(depth - 1, horizon - hi));
        return F::until(w, formula(depth - 1, horizon - hi), formula(depth - 1, horizon - hi));
      }
    }
  }

  // Unit-spaced samples t = 0..M-1 with values on a coarse lattice so that
  // exact ties occur now and then.
  stl::SampledSignal signal(std::size_t samples) {
    std::vector<double> times(samples);
    std::vector<double> values(2 * samples);
    for (std::size_t m = 0; m < samples; ++m) times[m] = static_cast<double>(m);
    for (double& v : values) {
      v = pick(4) == 0 ? std::round(uniform(-2.0, 2.0) * 4.0) / 4.0 : uniform(-2.0, 2.0);
    }
    return stl::SampledSignal(channels(), std::move(times), std::move(values));
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::vector<stl::Formula> operands(int depth, int horizon) {
    std::vector<stl::Formula> out;
    const int count = 2 + pick(2);
    for (int i = 0; i < count; ++i) out.push_back(formula(depth - 1, horizon));
    return out;
  }

  std::mt19937_64 rng_;
};

}  // namespace ctstl::testing
