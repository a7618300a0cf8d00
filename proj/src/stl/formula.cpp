#include "ctstl/stl/formula.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ctstl/error.hpp"

namespace ctstl::stl {

void validate_interval(const Interval& interval) {
  if (!std::isfinite(interval.lo) || !std::isfinite(interval.hi)) {
    throw GridError("interval endpoints must be finite");
  }
  if (interval.lo < 0.0) throw GridError("interval endpoints must be nonnegative");
  if (interval.lo > interval.hi) throw GridError("interval has a > b");
}

struct Formula::Node {
  Kind kind = Kind::Predicate;
  std::optional<PredicateExpr> predicate;
  std::vector<Formula> operands;
  Interval window;
};

Formula Formula::predicate(PredicateExpr g) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Predicate;
  n->predicate = std::move(g);
  return Formula(std::move(n));
}

Formula Formula::negation(Formula operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->operands.push_back(std::move(operand));
  return Formula(std::move(n));
}

Formula Formula::conjunction(std::vector<Formula> operands) {
  if (operands.size() < 2) throw DimensionError("conjunction needs at least two operands");
  auto n = std::make_shared<Node>();
  n->kind = Kind::And;
  n->operands = std::move(operands);
  return Formula(std::move(n));
}

Formula Formula::disjunction(std::vector<Formula> operands) {
  if (operands.size() < 2) throw DimensionError("disjunction needs at least two operands");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Or;
  n->operands = std::move(operands);
  return Formula(std::move(n));
}

Formula Formula::implies(Formula premise, Formula conclusion) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Implies;
  n->operands = {std::move(premise), std::move(conclusion)};
  return Formula(std::move(n));
}

Formula Formula::always(Interval window, Formula operand) {
  validate_interval(window);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Always;
  n->window = window;
  n->operands.push_back(std::move(operand));
  return Formula(std::move(n));
}

Formula Formula::eventually(Interval window, Formula operand) {
  validate_interval(window);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Eventually;
  n->window = window;
  n->operands.push_back(std::move(operand));
  return Formula(std::move(n));
}

Formula Formula::until(Interval window, Formula lhs, Formula rhs) {
  validate_interval(window);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Until;
  n->window = window;
  n->operands = {std::move(lhs), std::move(rhs)};
  return Formula(std::move(n));
}

Formula::Kind Formula::kind() const noexcept { return node_->kind; }

const PredicateExpr& Formula::predicate() const {
  if (!node_->predicate) throw DimensionError("formula is not a predicate");
  return *node_->predicate;
}

std::span<const Formula> Formula::operands() const noexcept { return node_->operands; }

const Interval& Formula::window() const { return node_->window; }

bool Formula::is_temporal() const noexcept {
  return node_->kind == Kind::Always || node_->kind == Kind::Eventually ||
         node_->kind == Kind::Until;
}

int Formula::depth() const {
  int deepest = 0;
  for (const auto& child : node_->operands) deepest = std::max(deepest, child.depth());
  return deepest + 1;
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind) return false;
  if (x.kind == Formula::Kind::Predicate) return *x.predicate == *y.predicate;
  if (a.is_temporal() && !(x.window == y.window)) return false;
  return x.operands == y.operands;
}

}  // namespace ctstl::stl
