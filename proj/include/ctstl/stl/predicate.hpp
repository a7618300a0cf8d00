#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctstl::stl {

/// Ordered set of named scalar signal channels. The position of a name is the
/// column index used by every sample vector evaluated against it.
class ChannelSet {
 public:
  ChannelSet() = default;
  explicit ChannelSet(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws ChannelError
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

using NamedSample = std::map<std::string, double, std::less<>>;

/// Polynomial expression over channels: constants, channel references,
/// + - *, unary negation and integer powers. Immutable; copies share nodes.
class PredicateExpr {
 public:
  enum class Op { Constant, Channel, Add, Sub, Mul, Neg, Pow };

  static PredicateExpr constant(double value);
  static PredicateExpr channel(std::size_t index, std::string name);
  static PredicateExpr add(PredicateExpr lhs, PredicateExpr rhs);
  static PredicateExpr sub(PredicateExpr lhs, PredicateExpr rhs);
  static PredicateExpr mul(PredicateExpr lhs, PredicateExpr rhs);
  static PredicateExpr neg(PredicateExpr operand);
  static PredicateExpr pow(PredicateExpr base, int exponent);

  Op op() const noexcept;
  double constant_value() const;
  std::size_t channel_index() const;
  const std::string& channel_name() const;
  int exponent() const;
  const PredicateExpr& lhs() const;  // also the operand of Neg and Pow
  const PredicateExpr& rhs() const;

  /// Evaluates on a sample indexed by channel position.
  double evaluate(std::span<const double> sample) const;
  /// Evaluates on a sample keyed by channel name.
  double evaluate(const NamedSample& sample) const;

  /// Adds seed * d(value)/d(sample[j]) into grad[j]; returns the value.
  double accumulate_gradient(std::span<const double> sample, double seed,
                             std::span<double> grad) const;
  /// Gradient keyed by the channel names the expression references.
  NamedSample gradient(const NamedSample& sample) const;

  /// Channel positions referenced anywhere in the tree, sorted, unique.
  std::vector<std::size_t> channels() const;

  friend bool operator==(const PredicateExpr& a, const PredicateExpr& b);

 private:
  struct Node;
  explicit PredicateExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace ctstl::stl
