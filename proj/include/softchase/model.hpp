#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace softchase {

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

enum class TermKind { Constant, Null, Variable };

/// A term is a constant (symbol or number), a labeled null, or a variable.
/// Equality is kind-aware: a constant never equals a null or a variable.
class Term {
 public:
  Term() = default;

  static Term constant(std::string symbol);
  static Term number(double value);
  static Term null(std::uint64_t id);
  static Term variable(std::string name);

  TermKind kind() const { return kind_; }
  bool is_constant() const { return kind_ == TermKind::Constant; }
  bool is_null() const { return kind_ == TermKind::Null; }
  bool is_variable() const { return kind_ == TermKind::Variable; }
  bool is_number() const { return kind_ == TermKind::Constant && numeric_; }
  bool is_symbol() const { return kind_ == TermKind::Constant && !numeric_; }

  const std::string& symbol() const { return text_; }
  const std::string& var_name() const { return text_; }
  double number_value() const { return num_; }
  std::uint64_t null_id() const { return id_; }

  bool operator==(const Term& o) const;
  bool operator!=(const Term& o) const { return !(*this == o); }
  bool operator<(const Term& o) const;

  /// Unambiguous textual form ("c:a", "d:0.6", "?3", "V:X").
  std::string repr() const;
  /// Surface form as it appears in program text (nulls as "?<id>").
  std::string display() const;

 private:
  TermKind kind_ = TermKind::Constant;
  bool numeric_ = false;
  std::string text_;
  double num_ = 0.0;
  std::uint64_t id_ = 0;
};

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Atoms and facts
// ---------------------------------------------------------------------------

struct Atom {
  std::string predicate;
  std::vector<Term> terms;

  bool is_ground() const;
  std::string repr() const;
  bool operator==(const Atom& o) const {
    return predicate == o.predicate && terms == o.terms;
  }
};

/// A ground atom (constants and labeled nulls only).
using Fact = Atom;

// ---------------------------------------------------------------------------
// Substitutions
// ---------------------------------------------------------------------------

/// Maps variable names to constants or labeled nulls. Ordered so the
/// canonical serialization is deterministic.
using Substitution = std::map<std::string, Term>;

class UnboundVariableError : public std::runtime_error {
 public:
  explicit UnboundVariableError(const std::string& var)
      : std::runtime_error("unbound variable: " + var) {}
};

/// Applies a substitution to an atom; throws UnboundVariableError if a
/// variable of the atom is not in the substitution's domain.
Fact apply_substitution(const Atom& atom, const Substitution& s);

// ---------------------------------------------------------------------------
// Rules and programs
// ---------------------------------------------------------------------------

struct SourceSpan {
  int line = 0;
  int column = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Arithmetic expression usable in comparison filters.
struct Expr {
  enum class Kind { Var, Const, Add, Sub, Abs };
  Kind kind = Kind::Const;
  std::string var;
  double value = 0.0;
  std::vector<Expr> args;

  static Expr variable(std::string name);
  static Expr constant(double v);
  static Expr binary(Kind k, Expr lhs, Expr rhs);
  static Expr abs(Expr inner);

  void collect_vars(std::vector<std::string>& out) const;
  std::string repr() const;
};

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

struct Comparison {
  Expr lhs;
  CmpOp op = CmpOp::Lt;
  Expr rhs;
};

/// Comparison filter in disjunctive normal form: OR of AND-groups. A plain
/// chained comparison like 0 < S < 1 is a single AND-group.
struct Filter {
  std::vector<std::vector<Comparison>> disjuncts;
  std::vector<std::string> vars() const;
  std::string repr() const;
};

enum class AggOp { Sum, Count, Min, Max };

struct AggregateBinding {
  std::string result_var;
  AggOp op = AggOp::Sum;
  std::string operand_var;
  std::string repr() const;
};

struct BodyLiteral {
  enum class Kind { Positive, Negated, Filter, Aggregate };
  Kind kind = Kind::Positive;
  Atom atom;            // Positive / Negated
  Filter filter;        // Filter
  AggregateBinding agg; // Aggregate

  std::string repr() const;
};

constexpr double kHardWeight = std::numeric_limits<double>::infinity();

struct Rule {
  int id = 0;
  std::vector<BodyLiteral> body;
  std::vector<Atom> head;
  std::vector<std::string> existential_vars;
  double weight = kHardWeight;
  SourceSpan span;

  bool is_hard() const { return weight == kHardWeight; }
  bool is_soft() const { return !is_hard(); }
  std::vector<const Atom*> positive_body() const;
  /// Universally quantified variables occurring in both body and head.
  std::vector<std::string> frontier_vars() const;
  const AggregateBinding* aggregate() const;
  std::string repr() const;
};

struct Program {
  std::vector<Rule> rules;
  /// Predicate name -> arity, fixed across the program.
  std::map<std::string, int> arity;

  bool is_intensional(const std::string& pred) const;
  bool is_extensional(const std::string& pred) const { return !is_intensional(pred); }
  std::string repr() const;
};

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& s);
std::string fnv1a64_hex(const std::string& s);

/// Pure fact-isomorphism key: nulls are renumbered by first occurrence, so
/// two facts get equal keys iff they are isomorphic.
std::string iso_key(const Fact& f);

/// Joint isomorphism key of a fact tuple: a single null renumbering spans all
/// facts, so componentwise-isomorphic tuples under one bijection collide.
std::string iso_key(const std::vector<Fact>& facts);

/// A set of ground facts keyed by provenance-canonical fact keys, plus the
/// null-name registry and the fresh-null counter.
class Instance {
 public:
  /// Inserts a fact; returns false if an equal-keyed fact is already stored.
  bool insert(const Fact& f);
  bool contains(const Fact& f) const { return keys_.count(fact_key(f)) > 0; }
  bool contains_key(const std::string& key) const { return keys_.count(key) > 0; }
  void erase_key(const std::string& key);

  /// Mints (or revives, if the name is already registered) a labeled null
  /// with the given provenance-canonical name.
  Term mint_null(const std::string& prov_name);
  /// Fresh anonymous null (input data); name derived from the id.
  Term mint_input_null();
  const std::string& null_name(std::uint64_t id) const;
  std::optional<std::uint64_t> null_id_for(const std::string& prov_name) const;

  /// Provenance-canonical key: nulls are identified by their provenance
  /// names, so the "same" existential fact matches across instances.
  std::string fact_key(const Fact& f) const;

  const std::vector<Fact>& facts(const std::string& pred) const;
  std::vector<Fact> all_facts() const;  // deterministic (pred, insertion) order
  std::vector<std::string> predicates() const;
  std::size_t size() const { return keys_.size(); }

  /// Canonical instance key: sorted fact keys. Equal iff the instances hold
  /// the same facts under provenance-canonical identity.
  std::string canonical_key() const;
  std::vector<std::string> sorted_fact_keys() const;

 private:
  std::map<std::string, std::vector<Fact>> by_pred_;
  std::unordered_set<std::string> keys_;
  std::unordered_map<std::uint64_t, std::string> null_names_;
  std::unordered_map<std::string, std::uint64_t> name_to_null_;
  std::uint64_t next_null_ = 0;
};

}  // namespace softchase
