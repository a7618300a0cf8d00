#include <cmath>
#include <random>

#include "ctstl/error.hpp"
#include "ctstl/stl/formula.hpp"
#include "ctstl/stl/parser.hpp"
#include "ctstl/stl/predicate.hpp"
#include "doctest.h"
#include "support/random_formula.hpp"

using namespace ctstl;
using stl::Formula;
using stl::PredicateExpr;

namespace {

stl::ChannelSet quad_channels() {
  return stl::ChannelSet({"rx", "ry", "rz", "vx", "vy", "vz", "ux", "uy", "uz"});
}

// Random expression trees for the precedence and desugaring checks.
PredicateExpr random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 6);
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  const int choice = depth <= 1 ? pick(rng) % 2 : pick(rng);
  switch (choice) {
    case 0: return PredicateExpr::constant(std::round(value(rng) * 4.0) / 4.0);
    case 1: {
      const int c = std::uniform_int_distribution<int>(0, 1)(rng);
      return PredicateExpr::channel(static_cast<std::size_t>(c), c == 0 ? "a" : "b");
    }
    case 2: return PredicateExpr::add(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 3: return PredicateExpr::sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 4: return PredicateExpr::mul(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 5: return PredicateExpr::neg(random_expr(rng, depth - 1));
    default:
      return PredicateExpr::pow(random_expr(rng, depth - 1),
                                std::uniform_int_distribution<int>(1, 3)(rng));
  }
}

}  // namespace

TEST_CASE("thrust bound parses with constant substitution") {
  const stl::ConstantTable k{{"Tmax2", 17.1605 * 17.1605}};
  const auto f = stl::parse_formula("G[0,10.7649]((Tmax2 - ux^2 - uy^2 - uz^2) >= 0)",
                                    quad_channels(), k);
  REQUIRE(f.kind() == Formula::Kind::Always);
  CHECK(f.window() == stl::Interval{0.0, 10.7649});
  const auto& g = f.operands()[0];
  REQUIRE(g.kind() == Formula::Kind::Predicate);
  const stl::NamedSample s{{"ux", 1.0}, {"uy", 2.0}, {"uz", 3.0}};
  CHECK(g.predicate().evaluate(s) == doctest::Approx(17.1605 * 17.1605 - 14.0).epsilon(1e-15));
}

TEST_CASE("atomic predicate has depth one") {
  const auto f = stl::parse_formula("(x >= 0)", stl::ChannelSet({"x"}));
  CHECK(f.kind() == Formula::Kind::Predicate);
  CHECK(f.depth() == 1);
  CHECK(f == Formula::predicate(PredicateExpr::channel(0, "x")));
}

TEST_CASE("until parses to the hand-built tree") {
  const stl::ChannelSet ch({"s", "c"});
  const auto f = stl::parse_formula("(s >= 0) U[0,1] (c >= 0)", ch);
  const auto expected = Formula::until({0.0, 1.0}, Formula::predicate(PredicateExpr::channel(0, "s")),
                                       Formula::predicate(PredicateExpr::channel(1, "c")));
  CHECK(f == expected);
}

TEST_CASE("format examples") {
  const stl::ChannelSet ch({"x", "y", "z"});
  const auto px = Formula::predicate(PredicateExpr::channel(0, "x"));
  CHECK(stl::format_formula(px) == "(x >= 0)");
  CHECK(stl::format_formula(Formula::negation(px)) == "!(x >= 0)");
  const auto py = Formula::predicate(PredicateExpr::channel(1, "y"));
  const auto pz = Formula::predicate(PredicateExpr::channel(2, "z"));
  const auto conj = Formula::conjunction({px, py, pz});
  CHECK(stl::format_formula(conj) == "((x >= 0) & (y >= 0) & (z >= 0))");
  const auto back = stl::parse_formula(stl::format_formula(conj), ch);
  CHECK(back == conj);
  CHECK(back.operands().size() == 3);
}

TEST_CASE("parse and format round-trip on random trees") {
  testing::FormulaGenerator gen(7);
  const auto ch = gen.channels();
  for (int i = 0; i < 1000; ++i) {
    const auto f = gen.formula(1 + gen.pick(5), 6);
    const auto text = stl::format_formula(f);
    INFO(text);
    const auto g = stl::parse_formula(text, ch);
    REQUIRE(g == f);
    CHECK(stl::format_formula(g) == text);
  }
}

TEST_CASE("comparison desugaring agrees on random samples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  const stl::ChannelSet ch({"a", "b"});
  for (int i = 0; i < 200; ++i) {
    const auto e1 = stl::format_expression(random_expr(rng, 3));
    const auto e2 = stl::format_expression(random_expr(rng, 3));
    const auto le = stl::parse_formula(e1 + " <= " + e2, ch);
    const auto ge = stl::parse_formula(e2 + " - (" + e1 + ") >= 0", ch);
    const auto rev = stl::parse_formula(e2 + " >= " + e1, ch);
    for (int s = 0; s < 5; ++s) {
      const double sample[2] = {value(rng), value(rng)};
      const double v = ge.predicate().evaluate(sample);
      CHECK(le.predicate().evaluate(sample) == doctest::Approx(v).epsilon(1e-12));
      CHECK(rev.predicate().evaluate(sample) == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("operator precedence") {
  const stl::ChannelSet ch({"a", "b", "c"});
  const auto A = Formula::predicate(PredicateExpr::channel(0, "a"));
  const auto B = Formula::predicate(PredicateExpr::channel(1, "b"));
  const auto C = Formula::predicate(PredicateExpr::channel(2, "c"));
  SUBCASE("not binds tighter than and") {
    CHECK(stl::parse_formula("!(a >= 0) & (b >= 0)", ch) ==
          Formula::conjunction({Formula::negation(A), B}));
  }
  SUBCASE("and binds tighter than or") {
    CHECK(stl::parse_formula("(a >= 0) | (b >= 0) & (c >= 0)", ch) ==
          Formula::disjunction({A, Formula::conjunction({B, C})}));
  }
  SUBCASE("or binds tighter than implies") {
    CHECK(stl::parse_formula("(a >= 0) | (b >= 0) -> (c >= 0)", ch) ==
          Formula::implies(Formula::disjunction({A, B}), C));
  }
  SUBCASE("implies is right associative") {
    CHECK(stl::parse_formula("(a >= 0) -> (b >= 0) -> (c >= 0)", ch) ==
          Formula::implies(A, Formula::implies(B, C)));
  }
  SUBCASE("arithmetic precedence") {
    const auto f = stl::parse_formula("a + b * c^2 - -a >= 0", ch);
    const double s[3] = {1.5, 2.0, 3.0};
    CHECK(f.predicate().evaluate(s) == doctest::Approx(1.5 + 2.0 * 9.0 + 1.5));
  }
}

TEST_CASE("parse errors") {
  const stl::ChannelSet ch({"x"});
  SUBCASE("syntax error carries line and column") {
    try {
      stl::parse_formula("G[0,1] (x >= 0) &\n  & (x >= 1)", ch);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() == 3);
    }
  }
  SUBCASE("unknown channel") {
    CHECK_THROWS_WITH_AS(stl::parse_formula("y >= 0", ch), "1:1: unknown channel 'y'", ParseError);
  }
  SUBCASE("reversed interval") {
    CHECK_THROWS_AS(stl::parse_formula("G[2,1](x >= 0)", ch), Error);
  }
  SUBCASE("negative endpoint") {
    CHECK_THROWS_AS(stl::parse_formula("F[-1,1](x >= 0)", ch), Error);
  }
  SUBCASE("non-integer exponent") {
    CHECK_THROWS_AS(stl::parse_formula("x^1.5 >= 0", ch), ParseError);
  }
  SUBCASE("missing comparison") {
    CHECK_THROWS_AS(stl::parse_formula("G[0,1] x", ch), ParseError);
  }
}

TEST_CASE("predicate evaluation examples") {
  const auto ch = quad_channels();
  SUBCASE("speed bound at rest") {
    const auto e = stl::parse_expression("vmax^2 - vx^2 - vy^2 - vz^2", ch, {{"vmax", 10.0}});
    CHECK(e.evaluate(stl::NamedSample{{"vx", 0.0}, {"vy", 0.0}, {"vz", 0.0}}) == 100.0);
  }
  SUBCASE("constant zero") {
    CHECK(PredicateExpr::constant(0.0).evaluate(std::span<const double>{}) == 0.0);
  }
  SUBCASE("tilt cone on its boundary") {
    const auto e = stl::parse_expression("cth2 * uz^2 - ux^2 - uy^2", ch, {{"cth2", 0.5}});
    CHECK(e.evaluate(stl::NamedSample{{"ux", 1.0}, {"uy", 1.0}, {"uz", 2.0}}) == 0.0);
  }
  SUBCASE("missing channel in a named sample") {
    const auto e = stl::parse_expression("vx^2", ch);
    CHECK_THROWS_AS(e.evaluate(stl::NamedSample{{"vy", 1.0}}), ChannelError);
  }
}

TEST_CASE("predicate gradient examples") {
  const auto ch = quad_channels();
  const auto e = stl::parse_expression("vmax^2 - vx^2", ch, {{"vmax", 10.0}});
  const auto g = e.gradient(stl::NamedSample{{"vx", 3.0}});
  CHECK(g.at("vx") == -6.0);

  const auto c = PredicateExpr::constant(4.0);
  for (const auto& [name, value] : c.gradient(stl::NamedSample{{"vx", 1.0}})) CHECK(value == 0.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 2.0);
  const auto tilt = stl::parse_expression("0.5 * uz^2 - ux^2 - uy^2", ch);
  for (int i = 0; i < 50; ++i) {
    stl::NamedSample s{{"ux", normal(rng)}, {"uy", normal(rng)}, {"uz", normal(rng)}};
    const auto grad = tilt.gradient(s);
    for (const char* name : {"ux", "uy", "uz"}) {
      const double h = 1e-6 * (1.0 + std::abs(tilt.evaluate(s)));
      auto sp = s, sm = s;
      sp[name] += h;
      sm[name] -= h;
      const double fd = (tilt.evaluate(sp) - tilt.evaluate(sm)) / (2.0 * h);
      const double scale = std::max(std::abs(fd), std::abs(grad.at(name)));
      CHECK(std::abs(fd - grad.at(name)) <= 1e-6 * std::max(scale, 1.0));
    }
  }
}

TEST_CASE("accumulate_gradient adds seeded derivatives by position") {
  const stl::ChannelSet ch({"a", "b"});
  const auto e = stl::parse_expression("a * b + a^3", ch);
  const double s[2] = {2.0, -1.0};
  double grad[2] = {1.0, 1.0};
  const double v = e.accumulate_gradient(s, 0.5, grad);
  CHECK(v == -2.0 + 8.0);
  CHECK(grad[0] == 1.0 + 0.5 * (-1.0 + 12.0));
  CHECK(grad[1] == 1.0 + 0.5 * 2.0);
}

TEST_CASE("format_number reads back exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, std::uniform_int_distribution<int>(-20, 20)(rng));
    CHECK(std::stod(stl::format_number(v)) == v);
  }
}
