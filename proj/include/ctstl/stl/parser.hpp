#pragma once

#include <map>
#include <string>
#include <string_view>

#include "ctstl/stl/formula.hpp"
#include "ctstl/stl/predicate.hpp"

namespace ctstl::stl {

/// Named numeric constants substituted while parsing (e.g. "Tmax2").
using ConstantTable = std::map<std::string, double, std::less<>>;

// Grammar, loosest binding first:
//
//   formula   := or ( "->" formula )?            right associative
//   or        := and ( "|" and )*                n-ary
//   and       := until ( "&" until )*            n-ary
//   until     := unary ( "U" window unary )*
//   unary     := "!" unary | "G" window unary | "F" window unary | atom
//   atom      := "(" formula ")" | expr cmp expr
//   cmp       := ">=" | "<=" | ">" | "<"
//   window    := "[" bound "," bound "]"
//   expr      := term ( ("+" | "-") term )*
//   term      := factor ( "*" factor )*
//   factor    := "-" factor | primary ( "^" integer )?
//   primary   := number | identifier | "(" expr ")"
//
// Comparisons desugar to g >= 0: "a >= b" becomes a - b, "a <= b" becomes
// b - a, and a literal zero on the small side is dropped.

Formula parse_formula(std::string_view text, const ChannelSet& channels,
                      const ConstantTable& constants = {});

PredicateExpr parse_expression(std::string_view text, const ChannelSet& channels,
                               const ConstantTable& constants = {});

/// Canonical text; parse_formula(format_formula(f)) == f structurally.
std::string format_formula(const Formula& f);
std::string format_expression(const PredicateExpr& e);

/// Shortest decimal text that reads back to exactly the same double.
std::string format_number(double value);

}  // namespace ctstl::stl
