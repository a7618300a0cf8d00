#include "ctstl/classic/semantics.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "ctstl/error.hpp"
#include "ctstl/gmsr/robustness.hpp"

namespace ctstl::classic {
namespace {

using stl::Formula;

class Evaluator {
 public:
  explicit Evaluator(const stl::SampledSignal& signal) : signal_(signal) {}

  double eval(const Formula& f, std::size_t ell) {
    const auto key = std::make_pair(f.id(), ell);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const double v = compute(f, ell);
    memo_.emplace(key, v);
    return v;
  }

  /// min(rhs(m), min_{q=ell..m} lhs(q)) for every m in the window.
  std::vector<std::pair<std::size_t, double>> until_candidates(const Formula& f, std::size_t ell) {
    const auto r = gmsr::window_indices(ell, f.window(), signal_.times());
    std::vector<std::pair<std::size_t, double>> out;
    double prefix = std::numeric_limits<double>::infinity();
    for (std::size_t q = ell; q <= r.last; ++q) {
      prefix = std::min(prefix, eval(f.operands()[0], q));
      if (q >= r.first) out.emplace_back(q, std::min(eval(f.operands()[1], q), prefix));
    }
    return out;
  }

 private:
  double compute(const Formula& f, std::size_t ell) {
    const auto ops = f.operands();
    switch (f.kind()) {
      case Formula::Kind::Predicate: return f.predicate().evaluate(signal_.sample(ell));
      case Formula::Kind::Not: return -eval(ops[0], ell);
      case Formula::Kind::And: {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& child : ops) v = std::min(v, eval(child, ell));
        return v;
      }
      case Formula::Kind::Or: {
        double v = -std::numeric_limits<double>::infinity();
        for (const auto& child : ops) v = std::max(v, eval(child, ell));
        return v;
      }
      case Formula::Kind::Implies: return std::max(-eval(ops[0], ell), eval(ops[1], ell));
      case Formula::Kind::Always:
      case Formula::Kind::Eventually: {
        const auto r = gmsr::window_indices(ell, f.window(), signal_.times());
        const bool always = f.kind() == Formula::Kind::Always;
        double v = always ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
        for (std::size_t m = r.first; m <= r.last; ++m) {
          const double x = eval(ops[0], m);
          v = always ? std::min(v, x) : std::max(v, x);
        }
        return v;
      }
      case Formula::Kind::Until: {
        double v = -std::numeric_limits<double>::infinity();
        for (const auto& [m, value] : until_candidates(f, ell)) v = std::max(v, value);
        return v;
      }
    }
    return 0.0;
  }

  const stl::SampledSignal& signal_;
  std::map<std::pair<const void*, std::size_t>, double> memo_;
};

}  // namespace

double classical_robustness(const Formula& f, const stl::SampledSignal& signal, std::size_t ell) {
  if (ell >= signal.size()) throw GridError("evaluation index outside the signal");
  return Evaluator(signal).eval(f, ell);
}

bool boolean_satisfaction(const Formula& f, const stl::SampledSignal& signal, std::size_t ell) {
  return classical_robustness(f, signal, ell) >= 0.0;
}

std::optional<std::size_t> witness(const Formula& f, const stl::SampledSignal& signal,
                                   std::size_t ell) {
  if (ell >= signal.size()) throw GridError("evaluation index outside the signal");
  Evaluator ev(signal);
  if (f.kind() == Formula::Kind::Eventually) {
    const auto r = gmsr::window_indices(ell, f.window(), signal.times());
    for (std::size_t m = r.first; m <= r.last; ++m) {
      if (ev.eval(f.operands()[0], m) >= 0.0) return m;
    }
    return std::nullopt;
  }
  if (f.kind() == Formula::Kind::Until) {
    for (const auto& [m, value] : ev.until_candidates(f, ell)) {
      if (value >= 0.0) return m;
    }
    return std::nullopt;
  }
  throw DimensionError("witness is defined for eventually and until formulas only");
}

}  // namespace ctstl::classic
