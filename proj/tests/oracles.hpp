// Independent reference implementations used only to cross-check the engine.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "softchase/model.hpp"

namespace oracles {

using softchase::Atom;
using softchase::BodyLiteral;
using softchase::Fact;
using softchase::Program;
using softchase::Rule;
using softchase::Substitution;
using softchase::Term;

// ---------------------------------------------------------------------------
// Naive bottom-up fixpoint for hard, existential-free, filter-free programs.
// No memoing, no instance machinery; facts keyed by their repr.
// ---------------------------------------------------------------------------

inline bool naive_match(const Atom& pattern, const Fact& fact, Substitution& s) {
  if (pattern.predicate != fact.predicate ||
      pattern.terms.size() != fact.terms.size())
    return false;
  Substitution saved = s;
  for (std::size_t i = 0; i < pattern.terms.size(); ++i) {
    const Term& p = pattern.terms[i];
    if (p.is_variable()) {
      auto it = s.find(p.var_name());
      if (it == s.end())
        s.emplace(p.var_name(), fact.terms[i]);
      else if (it->second != fact.terms[i]) {
        s = saved;
        return false;
      }
    } else if (p != fact.terms[i]) {
      s = saved;
      return false;
    }
  }
  return true;
}

inline std::vector<Fact> naive_lfp(const Program& program,
                                   std::vector<Fact> facts) {
  std::set<std::string> seen;
  for (const Fact& f : facts) seen.insert(f.repr());
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& rule : program.rules) {
      std::vector<const Atom*> body;
      std::vector<const Atom*> negs;
      for (const BodyLiteral& lit : rule.body) {
        if (lit.kind == BodyLiteral::Kind::Positive) body.push_back(&lit.atom);
        if (lit.kind == BodyLiteral::Kind::Negated) negs.push_back(&lit.atom);
      }
      std::vector<Substitution> substs{{}};
      for (const Atom* atom : body) {
        std::vector<Substitution> next;
        for (const Substitution& s : substs)
          for (const Fact& f : facts) {
            Substitution ext = s;
            if (naive_match(*atom, f, ext)) next.push_back(ext);
          }
        substs = std::move(next);
      }
      for (const Substitution& s : substs) {
        bool blocked = false;
        for (const Atom* neg : negs)
          if (seen.count(softchase::apply_substitution(*neg, s).repr()))
            blocked = true;
        if (blocked) continue;
        for (const Atom& h : rule.head) {
          Fact derived = softchase::apply_substitution(h, s);
          if (seen.insert(derived.repr()).second) {
            facts.push_back(derived);
            changed = true;
          }
        }
      }
    }
  }
  return facts;
}

// ---------------------------------------------------------------------------
// Bounded-depth unrestricted chase (no isomorphism suppression): each round
// fires every new trigger once, minting fresh nulls per trigger.
// ---------------------------------------------------------------------------

inline std::vector<Fact> reference_chase(const Program& program,
                                         std::vector<Fact> facts, int depth) {
  std::set<std::string> seen;
  for (const Fact& f : facts) seen.insert(f.repr());
  std::set<std::string> fired;  // rule id + matched tuple reprs
  std::uint64_t next_null = 1000000;  // disjoint from engine ids

  for (int round = 0; round < depth; ++round) {
    std::vector<Fact> snapshot = facts;
    for (const Rule& rule : program.rules) {
      std::vector<const Atom*> body;
      for (const BodyLiteral& lit : rule.body)
        if (lit.kind == BodyLiteral::Kind::Positive) body.push_back(&lit.atom);
      std::vector<std::pair<Substitution, std::string>> matches{{{}, ""}};
      for (const Atom* atom : body) {
        std::vector<std::pair<Substitution, std::string>> next;
        for (const auto& [s, key] : matches)
          for (const Fact& f : snapshot) {
            Substitution ext = s;
            if (naive_match(*atom, f, ext))
              next.emplace_back(ext, key + f.repr() + ";");
          }
        matches = std::move(next);
      }
      for (auto& [s, key] : matches) {
        std::string trigger = std::to_string(rule.id) + "|" + key;
        if (!fired.insert(trigger).second) continue;
        for (const std::string& v : rule.existential_vars)
          s.emplace(v, Term::null(next_null++));
        for (const Atom& h : rule.head) {
          Fact derived = softchase::apply_substitution(h, s);
          if (seen.insert(derived.repr()).second) facts.push_back(derived);
        }
      }
    }
  }
  return facts;
}

// ---------------------------------------------------------------------------
// Fact-set isomorphism: does a null bijection map one set onto the other?
// Backtracking over null pairings.
// ---------------------------------------------------------------------------

inline std::vector<std::uint64_t> nulls_of(const std::vector<Fact>& facts) {
  std::set<std::uint64_t> ids;
  for (const Fact& f : facts)
    for (const Term& t : f.terms)
      if (t.is_null()) ids.insert(t.null_id());
  return {ids.begin(), ids.end()};
}

inline bool isomorphic(const std::vector<Fact>& a, const std::vector<Fact>& b) {
  if (a.size() != b.size()) return false;
  std::vector<std::uint64_t> na = nulls_of(a), nb = nulls_of(b);
  if (na.size() != nb.size()) return false;

  std::set<std::string> b_reprs;
  for (const Fact& f : b) b_reprs.insert(f.repr());
  if (b_reprs.size() != b.size()) return false;  // treat inputs as sets

  std::map<std::uint64_t, std::uint64_t> mapping;
  std::vector<bool> used(nb.size(), false);
  std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
    if (i == na.size()) {
      std::set<std::string> mapped;
      for (const Fact& f : a) {
        Fact g = f;
        for (Term& t : g.terms)
          if (t.is_null()) t = Term::null(mapping.at(t.null_id()));
        mapped.insert(g.repr());
      }
      return mapped == b_reprs;
    }
    for (std::size_t j = 0; j < nb.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      mapping[na[i]] = nb[j];
      if (assign(i + 1)) return true;
      used[j] = false;
      mapping.erase(na[i]);
    }
    return false;
  };
  std::set<std::string> a_reprs;
  for (const Fact& f : a) a_reprs.insert(f.repr());
  if (a_reprs.size() != a.size()) return false;
  return assign(0);
}

// Distinct single-fact isomorphism classes of a fact set.
inline std::set<std::string> iso_classes(const std::vector<Fact>& facts) {
  std::set<std::string> out;
  for (const Fact& f : facts) out.insert(softchase::iso_key(f));
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force model counter for the two-level boolean program: fraction of
// r/t subsets under which some s-edge has both endpoints selected.
// ---------------------------------------------------------------------------

inline double boolean_truth_fraction(const std::vector<std::string>& r,
                                     const std::vector<std::string>& t,
                                     const std::vector<std::pair<std::string, std::string>>& s) {
  std::size_t n = r.size() + t.size();
  std::size_t sat = 0;
  for (std::size_t mask = 0; mask < (1ull << n); ++mask) {
    auto on = [&](const std::string& name) -> bool {
      for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i] == name) return (mask >> i) & 1;
      for (std::size_t j = 0; j < t.size(); ++j)
        if (t[j] == name) return (mask >> (r.size() + j)) & 1;
      return false;
    };
    for (const auto& [x, y] : s)
      if (on(x) && on(y)) {
        ++sat;
        break;
      }
  }
  return static_cast<double>(sat) / static_cast<double>(1ull << n);
}

}  // namespace oracles
