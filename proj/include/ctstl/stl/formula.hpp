#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ctstl/stl/predicate.hpp"

namespace ctstl::stl {

/// Closed time window [lo, hi] relative to the evaluation time, in seconds.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Throws GridError unless 0 <= lo <= hi < inf.
void validate_interval(const Interval& interval);

/// Immutable STL formula tree. Predicates use the canonical form g >= 0.
class Formula {
 public:
  enum class Kind { Predicate, Not, And, Or, Implies, Always, Eventually, Until };

  static Formula predicate(PredicateExpr g);
  static Formula negation(Formula operand);
  static Formula conjunction(std::vector<Formula> operands);  // >= 2 operands
  static Formula disjunction(std::vector<Formula> operands);  // >= 2 operands
  static Formula implies(Formula premise, Formula conclusion);
  static Formula always(Interval window, Formula operand);
  static Formula eventually(Interval window, Formula operand);
  /// lhs must hold from the evaluation time until rhs holds inside the window.
  static Formula until(Interval window, Formula lhs, Formula rhs);

  Kind kind() const noexcept;
  const PredicateExpr& predicate() const;
  /// Operands in order: Not/Always/Eventually have one, Implies and Until two
  /// (premise/lhs first), And/Or two or more.
  std::span<const Formula> operands() const noexcept;
  const Interval& window() const;

  /// Stable identity of the underlying node, used as a memoization key.
  const void* id() const noexcept { return node_.get(); }
  int depth() const;
  bool is_temporal() const noexcept;

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace ctstl::stl
