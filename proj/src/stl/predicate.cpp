#include "ctstl/stl/predicate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ctstl/error.hpp"

namespace ctstl::stl {

ChannelSet::ChannelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw ChannelError("duplicate channel name '" + names_[i] + "'");
    }
  }
}

std::optional<std::size_t> ChannelSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ChannelSet::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ChannelError("unknown channel '" + std::string(name) + "'");
}

struct PredicateExpr::Node {
  Op op = Op::Constant;
  double value = 0.0;
  std::size_t channel = 0;
  std::string name;
  int exponent = 1;
  std::optional<PredicateExpr> lhs;
  std::optional<PredicateExpr> rhs;
};

namespace {

double ipow(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

}  // namespace

PredicateExpr PredicateExpr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = value;
  return PredicateExpr(std::move(n));
}

PredicateExpr PredicateExpr::channel(std::size_t index, std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Channel;
  n->channel = index;
  n->name = std::move(name);
  return PredicateExpr(std::move(n));
}

#define CTSTL_BINARY(fn, OP)                                        \
  PredicateExpr PredicateExpr::fn(PredicateExpr lhs, PredicateExpr rhs) { \
    auto n = std::make_shared<Node>();                              \
    n->op = Op::OP;                                                 \
    n->lhs = std::move(lhs);                                        \
    n->rhs = std::move(rhs);                                        \
    return PredicateExpr(std::move(n));                             \
  }
CTSTL_BINARY(add, Add)
CTSTL_BINARY(sub, Sub)
CTSTL_BINARY(mul, Mul)
#undef CTSTL_BINARY

PredicateExpr PredicateExpr::neg(PredicateExpr operand) {
  auto n = std::make_shared<Node>();
  n->op = Op::Neg;
  n->lhs = std::move(operand);
  return PredicateExpr(std::move(n));
}

PredicateExpr PredicateExpr::pow(PredicateExpr base, int exponent) {
  if (exponent < 1) throw DimensionError("power exponent must be >= 1");
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->exponent = exponent;
  n->lhs = std::move(base);
  return PredicateExpr(std::move(n));
}

PredicateExpr::Op PredicateExpr::op() const noexcept { return node_->op; }
double PredicateExpr::constant_value() const { return node_->value; }
std::size_t PredicateExpr::channel_index() const { return node_->channel; }
const std::string& PredicateExpr::channel_name() const { return node_->name; }
int PredicateExpr::exponent() const { return node_->exponent; }
const PredicateExpr& PredicateExpr::lhs() const { return *node_->lhs; }
const PredicateExpr& PredicateExpr::rhs() const { return *node_->rhs; }

double PredicateExpr::evaluate(std::span<const double> sample) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Channel:
      if (n.channel >= sample.size()) {
        throw ChannelError("sample has no channel '" + n.name + "'");
      }
      return sample[n.channel];
    case Op::Add: return n.lhs->evaluate(sample) + n.rhs->evaluate(sample);
    case Op::Sub: return n.lhs->evaluate(sample) - n.rhs->evaluate(sample);
    case Op::Mul: return n.lhs->evaluate(sample) * n.rhs->evaluate(sample);
    case Op::Neg: return -n.lhs->evaluate(sample);
    case Op::Pow: return ipow(n.lhs->evaluate(sample), n.exponent);
  }
  return 0.0;
}

double PredicateExpr::evaluate(const NamedSample& sample) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Channel: {
      auto it = sample.find(n.name);
      if (it == sample.end()) throw ChannelError("sample has no channel '" + n.name + "'");
      return it->second;
    }
    case Op::Add: return n.lhs->evaluate(sample) + n.rhs->evaluate(sample);
    case Op::Sub: return n.lhs->evaluate(sample) - n.rhs->evaluate(sample);
    case Op::Mul: return n.lhs->evaluate(sample) * n.rhs->evaluate(sample);
    case Op::Neg: return -n.lhs->evaluate(sample);
    case Op::Pow: return ipow(n.lhs->evaluate(sample), n.exponent);
  }
  return 0.0;
}

double PredicateExpr::accumulate_gradient(std::span<const double> sample, double seed,
                                          std::span<double> grad) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Channel:
      if (n.channel >= sample.size() || n.channel >= grad.size()) {
        throw ChannelError("sample has no channel '" + n.name + "'");
      }
      grad[n.channel] += seed;
      return sample[n.channel];
    case Op::Add:
      return n.lhs->accumulate_gradient(sample, seed, grad) +
             n.rhs->accumulate_gradient(sample, seed, grad);
    case Op::Sub:
      return n.lhs->accumulate_gradient(sample, seed, grad) -
             n.rhs->accumulate_gradient(sample, -seed, grad);
    case Op::Mul: {
      const double a = n.lhs->evaluate(sample);
      const double b = n.rhs->evaluate(sample);
      n.lhs->accumulate_gradient(sample, seed * b, grad);
      n.rhs->accumulate_gradient(sample, seed * a, grad);
      return a * b;
    }
    case Op::Neg: return -n.lhs->accumulate_gradient(sample, -seed, grad);
    case Op::Pow: {
      const double base = n.lhs->evaluate(sample);
      n.lhs->accumulate_gradient(sample, seed * n.exponent * ipow(base, n.exponent - 1), grad);
      return ipow(base, n.exponent);
    }
  }
  return 0.0;
}

std::vector<std::size_t> PredicateExpr::channels() const {
  std::set<std::size_t> found;
  auto visit = [&](const auto& self, const PredicateExpr& e) -> void {
    switch (e.op()) {
      case Op::Constant: return;
      case Op::Channel: found.insert(e.channel_index()); return;
      case Op::Neg:
      case Op::Pow: self(self, e.lhs()); return;
      default:
        self(self, e.lhs());
        self(self, e.rhs());
    }
  };
  visit(visit, *this);
  return {found.begin(), found.end()};
}

NamedSample PredicateExpr::gradient(const NamedSample& sample) const {
  // Map the named sample onto the channel positions this tree references.
  std::size_t width = 0;
  std::map<std::size_t, std::string> names;
  auto collect = [&](const auto& self, const PredicateExpr& e) -> void {
    switch (e.op()) {
      case Op::Constant: return;
      case Op::Channel:
        names[e.channel_index()] = e.channel_name();
        width = std::max(width, e.channel_index() + 1);
        return;
      case Op::Neg:
      case Op::Pow: self(self, e.lhs()); return;
      default:
        self(self, e.lhs());
        self(self, e.rhs());
    }
  };
  collect(collect, *this);

  std::vector<double> dense(width, 0.0);
  for (const auto& [index, name] : names) {
    auto it = sample.find(name);
    if (it == sample.end()) throw ChannelError("sample has no channel '" + name + "'");
    dense[index] = it->second;
  }
  std::vector<double> grad(width, 0.0);
  accumulate_gradient(dense, 1.0, grad);

  NamedSample out;
  for (const auto& [index, name] : names) out[name] = grad[index];
  return out;
}

bool operator==(const PredicateExpr& a, const PredicateExpr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.op != y.op) return false;
  using Op = PredicateExpr::Op;
  switch (x.op) {
    case Op::Constant: return x.value == y.value;
    case Op::Channel: return x.channel == y.channel && x.name == y.name;
    case Op::Neg: return *x.lhs == *y.lhs;
    case Op::Pow: return x.exponent == y.exponent && *x.lhs == *y.lhs;
    default: return *x.lhs == *y.lhs && *x.rhs == *y.rhs;
  }
}

}  // namespace ctstl::stl
