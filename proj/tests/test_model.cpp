#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "softchase/model.hpp"

using namespace softchase;

TEST_CASE("term kinds and equality") {
  Term c = Term::constant("a");
  Term n = Term::null(0);
  Term v = Term::variable("X");
  CHECK(c.is_constant());
  CHECK(n.is_null());
  CHECK(v.is_variable());
  CHECK(c != n);
  CHECK(c != v);
  CHECK(n != v);
  CHECK(Term::constant("a") == Term::constant("a"));
  CHECK(Term::constant("a") != Term::constant("b"));
  CHECK(Term::null(1) == Term::null(1));
  CHECK(Term::null(1) != Term::null(2));
}

TEST_CASE("numeric constants are distinct from symbols") {
  CHECK(Term::number(1.5) == Term::number(1.5));
  CHECK(Term::number(1.5) != Term::number(2.5));
  CHECK(Term::number(1.5) != Term::constant("1.5"));
  CHECK(Term::number(1.0).is_number());
  CHECK(Term::constant("x").is_symbol());
}

TEST_CASE("format_number round-trips") {
  CHECK(format_number(0.6) == "0.6");
  CHECK(format_number(10) == "10");
  CHECK(format_number(-0.25) == "-0.25");
  for (double v : {0.1, 1e-9, 123456.789, -42.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("apply_substitution grounds atoms and rejects unbound variables") {
  Atom a{"p", {Term::variable("X"), Term::constant("c")}};
  Substitution s{{"X", Term::constant("v")}};
  Fact f = apply_substitution(a, s);
  CHECK(f.is_ground());
  CHECK(f.terms[0] == Term::constant("v"));
  Atom b{"p", {Term::variable("Y")}};
  CHECK_THROWS_AS(apply_substitution(b, s), UnboundVariableError);
}

TEST_CASE("single-fact isomorphism keys") {
  Fact f1{"p", {Term::null(3), Term::null(7), Term::null(3)}};
  Fact f2{"p", {Term::null(9), Term::null(1), Term::null(9)}};
  Fact f3{"p", {Term::null(9), Term::null(1), Term::null(1)}};
  CHECK(iso_key(f1) == iso_key(f2));
  CHECK(iso_key(f1) != iso_key(f3));
  Fact c1{"p", {Term::constant("a"), Term::null(0), Term::constant("a")}};
  Fact c2{"p", {Term::constant("a"), Term::null(5), Term::constant("a")}};
  CHECK(iso_key(c1) == iso_key(c2));
}

TEST_CASE("tuple isomorphism uses a shared null renumbering") {
  std::vector<Fact> t1{{"f", {Term::null(1), Term::null(2)}},
                       {"g", {Term::null(2)}}};
  std::vector<Fact> t2{{"f", {Term::null(5), Term::null(9)}},
                       {"g", {Term::null(9)}}};
  std::vector<Fact> t3{{"f", {Term::null(5), Term::null(9)}},
                       {"g", {Term::null(5)}}};
  CHECK(iso_key(t1) == iso_key(t2));
  CHECK(iso_key(t1) != iso_key(t3));
}

TEST_CASE("iso_key equality agrees with a bijection search on random pairs") {
  std::mt19937_64 rng(42);
  auto random_tuple = [&](int null_pool) {
    std::vector<Fact> facts;
    int nfacts = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < nfacts; ++i) {
      Fact f;
      f.predicate = rng() % 2 ? "p" : "q";
      int arity = 1 + static_cast<int>(rng() % 3);
      for (int j = 0; j < arity; ++j) {
        if (rng() % 2)
          f.terms.push_back(Term::null(rng() % null_pool));
        else
          f.terms.push_back(Term::constant(rng() % 2 ? "a" : "b"));
      }
      facts.push_back(f);
    }
    return facts;
  };

  for (int trial = 0; trial < 1000; ++trial) {
    // Single facts: key equality must coincide exactly with the existence of
    // a null bijection.
    Fact a = random_tuple(3)[0];
    Fact b = random_tuple(3)[0];
    bool keys_equal = iso_key(a) == iso_key(b);
    bool bijection = oracles::isomorphic({a}, {b});
    CHECK(keys_equal == bijection);

    // Tuples: renaming nulls never changes the key (and keeps isomorphism).
    std::vector<Fact> tuple = random_tuple(3);
    std::vector<Fact> renamed = tuple;
    for (Fact& f : renamed)
      for (Term& t : f.terms)
        if (t.is_null()) t = Term::null(t.null_id() + 100);
    CHECK(iso_key(renamed) == iso_key(tuple));
  }
}

TEST_CASE("instance insert, dedupe, and canonical keys") {
  Instance inst;
  Fact f{"p", {Term::constant("a")}};
  CHECK(inst.insert(f));
  CHECK_FALSE(inst.insert(f));
  CHECK(inst.size() == 1);
  CHECK(inst.contains(f));

  Term n1 = inst.mint_null("gen1");
  Term n1again = inst.mint_null("gen1");
  CHECK(n1 == n1again);
  Term n2 = inst.mint_null("gen2");
  CHECK(n1 != n2);
  CHECK(inst.null_name(n1.null_id()) == "gen1");
  CHECK(inst.null_id_for("gen2").has_value());
  CHECK_FALSE(inst.null_id_for("nope").has_value());

  Fact g{"q", {n1}};
  inst.insert(g);
  CHECK(inst.contains(g));
  std::string key = inst.fact_key(g);
  CHECK(key.find("~gen1") != std::string::npos);

  Instance other;
  Term m = other.mint_null("gen1");
  Fact h{"q", {m}};
  CHECK(other.fact_key(h) == key);  // provenance keys agree across instances

  inst.erase_key(key);
  CHECK_FALSE(inst.contains_key(key));
}

TEST_CASE("canonical_key is order-insensitive") {
  Instance a, b;
  Fact f1{"p", {Term::constant("x")}};
  Fact f2{"q", {Term::constant("y")}};
  a.insert(f1);
  a.insert(f2);
  b.insert(f2);
  b.insert(f1);
  CHECK(a.canonical_key() == b.canonical_key());
}

TEST_CASE("rule classification and frontier") {
  Rule r;
  r.weight = 0.5;
  CHECK(r.is_soft());
  r.weight = kHardWeight;
  CHECK(r.is_hard());

  BodyLiteral lit;
  lit.kind = BodyLiteral::Kind::Positive;
  lit.atom = Atom{"p", {Term::variable("X"), Term::variable("Y")}};
  r.body.push_back(lit);
  r.head.push_back(Atom{"q", {Term::variable("X"), Term::variable("Z")}});
  r.existential_vars.push_back("Z");
  auto frontier = r.frontier_vars();
  CHECK(frontier == std::vector<std::string>{"X"});
}

TEST_CASE("fnv1a64 is deterministic and spreads") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("abc") == fnv1a64("abc"));
  CHECK(fnv1a64("abc") != fnv1a64("abd"));
  CHECK(fnv1a64_hex("abc").size() == 16);
}
