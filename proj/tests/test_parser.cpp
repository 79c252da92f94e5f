#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "softchase/parser.hpp"

using namespace softchase;

static const char* kRunningExample =
    "% demo\n"
    "0.9 :: lendertype(X,Y), regulatoryrestriction(Y,Z) -> exists V: guarantee(X,Z,V).\n"
    "0.8 :: lendertype(X,Y), lenderclass(Y,Z) -> lendertype(X,Z).\n"
    "0.7 :: contract(X,Y,Z), exposure(Y,W) -> contract(Z,W,X).\n"
    "contract(X,Y,Z), regulatoryrestriction(W,Y) -> lendertype(X,W).\n";

TEST_CASE("parses the running example") {
  Program p = parse_program(kRunningExample);
  REQUIRE(p.rules.size() == 4);
  CHECK(p.rules[0].weight == doctest::Approx(0.9));
  CHECK(p.rules[1].weight == doctest::Approx(0.8));
  CHECK(p.rules[2].weight == doctest::Approx(0.7));
  CHECK(p.rules[3].is_hard());
  CHECK(p.rules[0].existential_vars == std::vector<std::string>{"V"});
  CHECK(p.arity.at("contract") == 3);
  CHECK(p.arity.at("guarantee") == 3);
  CHECK(p.rules[2].head[0].predicate == "contract");
}

TEST_CASE("head-only variables become existential") {
  Program p = parse_program("p(X) -> q(X,Y).");
  CHECK(p.rules[0].existential_vars == std::vector<std::string>{"Y"});
}

TEST_CASE("weight prefixes") {
  Program p = parse_program(
      "0 :: p(X) -> q(X).\n"
      "-0.5 :: p(X) -> r(X).\n"
      "inf :: p(X) -> s(X).\n"
      "-inf :: p(X) -> t(X).\n"
      "p(X) -> u(X).\n");
  CHECK(p.rules[0].weight == 0.0);
  CHECK(p.rules[1].weight == doctest::Approx(-0.5));
  CHECK(p.rules[2].is_hard());
  CHECK(p.rules[3].weight == -kHardWeight);
  CHECK(p.rules[4].is_hard());
}

TEST_CASE("body-less weighted ground rules") {
  Program p = parse_program("0.8 :: accuracy(a, income).\n");
  REQUIRE(p.rules.size() == 1);
  CHECK(p.rules[0].body.empty());
  CHECK(p.rules[0].head[0].predicate == "accuracy");
  CHECK(p.rules[0].weight == doctest::Approx(0.8));
}

TEST_CASE("comparison filters: chains, disjunction, abs") {
  Program p = parse_program(
      "p(X,S), 0 < S < 1 -> q(X).\n"
      "p(X,S), (S < 0 or S > 1) -> r(X).\n"
      "p(X,S), p(Y,W), |S - W| < 10 -> near(X,Y).\n");
  const Filter& chain = p.rules[0].body[1].filter;
  REQUIRE(chain.disjuncts.size() == 1);
  CHECK(chain.disjuncts[0].size() == 2);
  const Filter& disj = p.rules[1].body[1].filter;
  CHECK(disj.disjuncts.size() == 2);
  const Filter& abs = p.rules[2].body[2].filter;
  CHECK(abs.disjuncts[0][0].lhs.kind == Expr::Kind::Abs);
}

TEST_CASE("aggregate bindings parse and validate") {
  Program p = parse_program(
      "control(X,Y), own(Y,Z,S), V = sum(S), V > 0.5 -> control(X,Z).");
  const Rule& r = p.rules[0];
  const AggregateBinding* agg = r.aggregate();
  REQUIRE(agg != nullptr);
  CHECK(agg->result_var == "V");
  CHECK(agg->operand_var == "S");
  CHECK(agg->op == AggOp::Sum);

  CHECK_THROWS_AS(parse_program("p(X), V = sum(W) -> q(V)."), ParseError);
  CHECK_THROWS_AS(parse_program("p(X,V), V = sum(X) -> q(V)."), ParseError);
  CHECK_THROWS_AS(
      parse_program("p(X,S), V = sum(S), U = count(S) -> q(V,U)."), ParseError);
}

TEST_CASE("negation parses") {
  Program p = parse_program("p(X), not q(X) -> r(X).");
  CHECK(p.rules[0].body[1].kind == BodyLiteral::Kind::Negated);
}

TEST_CASE("arity mismatches are rejected") {
  CHECK_THROWS_AS(parse_program("p(X) -> q(X).\np(X,Y) -> r(X)."), ParseError);
}

TEST_CASE("unbound comparison variables are rejected") {
  CHECK_THROWS_AS(parse_program("p(X), Y > 1 -> q(X)."), ParseError);
}

TEST_CASE("declared existentials must not occur in the body") {
  CHECK_THROWS_AS(parse_program("p(X) -> exists X: q(X)."), ParseError);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_program("p(X) -> \n q(X");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE_FALSE(e.diagnostics.empty());
    CHECK(e.diagnostics[0].span.line >= 1);
  }
}

TEST_CASE("comments and numbers in programs") {
  Program p = parse_program(
      "% line comment\n"
      "// another\n"
      "p(X,S), S > 0.5 -> q(X). % trailing\n");
  CHECK(p.rules.size() == 1);
}

TEST_CASE("program text round-trips through repr") {
  Program p1 = parse_program(kRunningExample);
  Program p2 = parse_program(p1.repr());
  CHECK(p1.repr() == p2.repr());
  CHECK(p2.rules.size() == 4);
}

TEST_CASE("fact files in rule syntax") {
  Instance inst = parse_facts(
      "contract(a, b, c).\n"
      "exposure(b, l).\n"
      "share(a, 0.6).\n"
      "share(a, 0.6).\n");  // duplicate collapses
  CHECK(inst.size() == 3);
  CHECK(inst.facts("share")[0].terms[1] == Term::number(0.6));
  CHECK_THROWS_AS(parse_facts("p(X)."), ParseError);
}

TEST_CASE("fact files in csv format") {
  Instance inst = parse_facts(
      "inputown:3\n"
      "c0, c1, 0.6\n"
      "c1, c2, 0.55\n"
      "company:1\n"
      "c0\n",
      FactFormat::CsvPerPredicate);
  CHECK(inst.size() == 3);
  CHECK(inst.facts("inputown").size() == 2);
  CHECK(inst.facts("inputown")[0].terms[2] == Term::number(0.6));
  CHECK_THROWS_AS(
      parse_facts("inputown:3\nc0, c1\n", FactFormat::CsvPerPredicate), ParseError);
  CHECK_THROWS_AS(parse_facts("c0, c1, 0.6\n", FactFormat::CsvPerPredicate),
                  ParseError);
}

TEST_CASE("answers serialize deterministically with canonical nulls") {
  Instance inst;
  Term n1 = inst.mint_null("a");
  Term n2 = inst.mint_null("b");
  std::vector<std::pair<Fact, double>> answer = {
      {Fact{"z", {Term::constant("q")}}, 0.25},
      {Fact{"guarantee", {Term::constant("c"), n2, n1}}, 0.897},
      {Fact{"contract", {Term::constant("c"), Term::constant("l")}}, 0.9863},
  };
  std::string tsv = serialize_answer(answer);
  CHECK(tsv ==
        "contract(c,l)\t0.986300\n"
        "guarantee(c,_:n0,_:n1)\t0.897000\n"
        "z(q)\t0.250000\n");
  std::string csv = serialize_answer(answer, AnswerFormat::Csv);
  CHECK(csv.find("contract(c,l),0.986300") == 0);
}

TEST_CASE("facts serialize in canonical order") {
  Instance inst;
  Term n = inst.mint_null("x");
  std::string out = serialize_facts(
      {Fact{"b", {n}}, Fact{"a", {Term::constant("k")}}});
  CHECK(out == "a(k).\nb(_:n0).\n");
}

TEST_CASE("query parsing") {
  ConjunctiveQuery q1 = parse_query("control");
  CHECK(q1.atomic);
  CHECK(q1.predicate == "control");

  ConjunctiveQuery q2 = parse_query("control(X,Y)");
  CHECK(q2.atomic);
  CHECK(q2.predicate == "control");

  ConjunctiveQuery q3 = parse_query("control(X,X)");
  CHECK_FALSE(q3.atomic);
  CHECK(q3.head_vars == std::vector<std::string>{"X"});
  CHECK(q3.body.size() == 1);

  ConjunctiveQuery q4 = parse_query("q(X) :- control(X,Y), company(Y)");
  CHECK_FALSE(q4.atomic);
  CHECK(q4.head_pred == "q");
  CHECK(q4.body.size() == 2);

  CHECK_THROWS_AS(parse_query("q(X) :- not control(X,Y)"), ParseError);
}
