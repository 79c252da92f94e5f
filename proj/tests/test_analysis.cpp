#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "softchase/analysis.hpp"
#include "softchase/parser.hpp"

using namespace softchase;

static bool has_code(const std::vector<Violation>& vs, const std::string& code) {
  for (const Violation& v : vs)
    if (v.code == code) return true;
  return false;
}

TEST_CASE("affected positions of the mother program") {
  Program p = parse_program(
      "person(X) -> exists Y: hasmother(X,Y).\n"
      "hasmother(X,Y) -> person(Y).\n");
  PositionSet affected = affected_positions(p);
  PositionSet expected{{"hasmother", 1}, {"hasmother", 2}, {"person", 1}};
  CHECK(affected == expected);
}

TEST_CASE("affected positions of the running example") {
  Program p = parse_program(
      "0.9 :: lendertype(X,Y), regulatoryrestriction(Y,Z) -> exists V: guarantee(X,Z,V).\n"
      "0.8 :: lendertype(X,Y), lenderclass(Y,Z) -> lendertype(X,Z).\n"
      "0.7 :: contract(X,Y,Z), exposure(Y,W) -> contract(Z,W,X).\n"
      "contract(X,Y,Z), regulatoryrestriction(W,Y) -> lendertype(X,W).\n");
  PositionSet affected = affected_positions(p);
  CHECK(affected == PositionSet{{"guarantee", 3}});
  CHECK(check_warded(p).ok);
}

TEST_CASE("variable classification flags dangerous variables") {
  Program p = parse_program(
      "person(X) -> exists Y: hasmother(X,Y).\n"
      "hasmother(X,Y) -> person(Y).\n");
  PositionSet affected = affected_positions(p);
  auto classes = classify_variables(p.rules[1], affected);
  CHECK(classes.at("Y") == VarClass::Dangerous);
  CHECK(classes.at("X") == VarClass::Harmful);
  auto first = classify_variables(p.rules[0], affected);
  CHECK(first.at("X") == VarClass::Dangerous);
}

TEST_CASE("non-warded program is rejected with a ward code") {
  Program p = parse_program(
      "p(X) -> exists Z: e(X,Z).\n"
      "p(X) -> exists Z: f(X,Z).\n"
      "e(X,Y), f(X2,Y) -> q(Y).\n");
  WardReport report = check_warded(p);
  CHECK_FALSE(report.ok);
  CHECK((has_code(report.violations, "WARD_MISSING") ||
         has_code(report.violations, "WARD_SHARED_HARMFUL")));
}

TEST_CASE("ward must not share harmful variables") {
  // Every atom covering the dangerous variable shares it with another atom.
  Program p = parse_program(
      "p(X) -> exists Z: e(X,Z).\n"
      "e(X,Y) -> f(Y).\n"
      "e(X,Y), f(Y) -> g(Y).\n");
  WardReport report = check_warded(p);
  CHECK_FALSE(report.ok);
  CHECK(has_code(report.violations, "WARD_SHARED_HARMFUL"));
}

TEST_CASE("negation in a cycle is rejected") {
  Program p = parse_program("p(X), not q(X) -> q(X).");
  StratReport report = check_stratified(p);
  CHECK_FALSE(report.ok);
  CHECK(has_code(report.violations, "NEG_CYCLE"));
}

TEST_CASE("unsafe negation is rejected") {
  Program p = parse_program("p(X), not q(X,Y) -> r(X).");
  StratReport report = check_stratified(p);
  CHECK_FALSE(report.ok);
  CHECK(has_code(report.violations, "NEG_UNSAFE"));
}

TEST_CASE("stratified negation gets increasing strata") {
  Program p = parse_program(
      "a(X) -> b(X).\n"
      "c(X), not b(X) -> d(X).\n"
      "d(X), not e(X) -> f(X).\n");
  StratReport report = check_stratified(p);
  REQUIRE(report.ok);
  // f depends on d only positively, so they share a stratum; both negated
  // predicates sit strictly below their consumers.
  CHECK(report.stratum.at("b") < report.stratum.at("d"));
  CHECK(report.stratum.at("e") < report.stratum.at("f"));
  CHECK(report.stratum.at("d") <= report.stratum.at("f"));
  CHECK(report.num_strata >= 2);
}

TEST_CASE("aggregation over a non-recursive operand is stratified") {
  Program p = parse_program(
      "control(X,Y), own(Y,Z,S), V = sum(S), V > 0.5 -> control(X,Z).\n"
      "company(X) -> control(X,X).\n");
  StratReport report = check_stratified(p);
  CHECK(report.ok);
  // own feeds the aggregate, so it sits strictly below control.
  CHECK(report.stratum.at("own") < report.stratum.at("control"));
}

TEST_CASE("aggregation inside recursion is rejected unless relaxed") {
  Program p = parse_program(
      "t(X,Y,S) -> reach(X,Y,S).\n"
      "reach(X,Y,S), V = sum(S) -> reach(Y,X,V).\n");
  StratReport strict = check_stratified(p);
  CHECK_FALSE(strict.ok);
  CHECK(has_code(strict.violations, "AGG_CYCLE"));
  StratReport relaxed = check_stratified(p, true);
  CHECK(relaxed.ok);
}

TEST_CASE("negative infinite weights are rejected") {
  Program p = parse_program("-inf :: p(X) -> q(X).");
  AnalysisReport report = analyze(p);
  CHECK_FALSE(report.ok);
  CHECK(has_code(report.violations, "WEIGHT_NEG_INF"));
}

TEST_CASE("analyze aggregates all violation kinds") {
  Program p = parse_program(
      "p(X), not q(X) -> q(X).\n"
      "-inf :: p(X) -> r(X).\n");
  AnalysisReport report = analyze(p);
  CHECK_FALSE(report.ok);
  CHECK(has_code(report.violations, "NEG_CYCLE"));
  CHECK(has_code(report.violations, "WEIGHT_NEG_INF"));
}

TEST_CASE("atomic queries pass through rewrite") {
  Program p = parse_program("own(X,Y,S), S > 0.5 -> control(X,Y).");
  RewrittenQuery rw = rewrite_query(p, parse_query("control"));
  CHECK(rw.answer_predicate == "control");
  CHECK(rw.program.rules.size() == p.rules.size());
  CHECK(rw.report.ok);
}

TEST_CASE("conjunctive queries add a hard answer rule") {
  Program p = parse_program("own(X,Y,S), S > 0.5 -> control(X,Y).");
  RewrittenQuery rw = rewrite_query(p, parse_query("q(X) :- control(X,Y), control(Y,X)"));
  CHECK(rw.report.ok);
  CHECK(rw.answer_predicate == "q");
  const Rule& added = rw.program.rules.back();
  CHECK(added.is_hard());
  CHECK(added.head[0].predicate == "q");
  CHECK(added.body.size() == 2);
}

TEST_CASE("query rewriting re-checks wardedness") {
  Program p = parse_program(
      "p(X) -> exists Z: e(X,Z).\n"
      "p(X) -> exists Z: f(X,Z).\n");
  // The query joins the two existential positions, which is not warded.
  RewrittenQuery rw = rewrite_query(p, parse_query("q(Y) :- e(X,Y), f(X2,Y)"));
  CHECK_FALSE(rw.report.ok);
}

TEST_CASE("query arity mismatches are flagged") {
  Program p = parse_program("own(X,Y,S) -> control(X,Y).");
  RewrittenQuery rw = rewrite_query(p, parse_query("q(X) :- control(X)"));
  CHECK_FALSE(rw.report.ok);
  CHECK(has_code(rw.report.violations, "QUERY_ARITY"));
}
