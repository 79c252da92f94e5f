#include "softchase/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace softchase {

// ---------------------------------------------------------------------------
// Term
// ---------------------------------------------------------------------------

Term Term::constant(std::string symbol) {
  Term t;
  t.kind_ = TermKind::Constant;
  t.numeric_ = false;
  t.text_ = std::move(symbol);
  return t;
}

Term Term::number(double value) {
  Term t;
  t.kind_ = TermKind::Constant;
  t.numeric_ = true;
  t.num_ = value;
  return t;
}

Term Term::null(std::uint64_t id) {
  Term t;
  t.kind_ = TermKind::Null;
  t.id_ = id;
  return t;
}

Term Term::variable(std::string name) {
  Term t;
  t.kind_ = TermKind::Variable;
  t.text_ = std::move(name);
  return t;
}

bool Term::operator==(const Term& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case TermKind::Constant:
      if (numeric_ != o.numeric_) return false;
      return numeric_ ? num_ == o.num_ : text_ == o.text_;
    case TermKind::Null:
      return id_ == o.id_;
    case TermKind::Variable:
      return text_ == o.text_;
  }
  return false;
}

bool Term::operator<(const Term& o) const {
  if (kind_ != o.kind_) return kind_ < o.kind_;
  switch (kind_) {
    case TermKind::Constant:
      if (numeric_ != o.numeric_) return numeric_ < o.numeric_;
      return numeric_ ? num_ < o.num_ : text_ < o.text_;
    case TermKind::Null:
      return id_ < o.id_;
    case TermKind::Variable:
      return text_ < o.text_;
  }
  return false;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string Term::repr() const {
  switch (kind_) {
    case TermKind::Constant:
      return numeric_ ? "d:" + format_number(num_) : "c:" + text_;
    case TermKind::Null:
      return "?" + std::to_string(id_);
    case TermKind::Variable:
      return "V:" + text_;
  }
  return {};
}

std::string Term::display() const {
  switch (kind_) {
    case TermKind::Constant:
      return numeric_ ? format_number(num_) : text_;
    case TermKind::Null:
      return "?" + std::to_string(id_);
    case TermKind::Variable:
      return text_;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Atom
// ---------------------------------------------------------------------------

bool Atom::is_ground() const {
  return std::none_of(terms.begin(), terms.end(),
                      [](const Term& t) { return t.is_variable(); });
}

std::string Atom::repr() const {
  std::string out = predicate + "(";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += ",";
    out += terms[i].repr();
  }
  out += ")";
  return out;
}

Fact apply_substitution(const Atom& atom, const Substitution& s) {
  Fact out;
  out.predicate = atom.predicate;
  out.terms.reserve(atom.terms.size());
  for (const Term& t : atom.terms) {
    if (t.is_variable()) {
      auto it = s.find(t.var_name());
      if (it == s.end()) throw UnboundVariableError(t.var_name());
      out.terms.push_back(it->second);
    } else {
      out.terms.push_back(t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expressions and filters
// ---------------------------------------------------------------------------

Expr Expr::variable(std::string name) {
  Expr e;
  e.kind = Kind::Var;
  e.var = std::move(name);
  return e;
}

Expr Expr::constant(double v) {
  Expr e;
  e.kind = Kind::Const;
  e.value = v;
  return e;
}

Expr Expr::binary(Kind k, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = k;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

Expr Expr::abs(Expr inner) {
  Expr e;
  e.kind = Kind::Abs;
  e.args.push_back(std::move(inner));
  return e;
}

void Expr::collect_vars(std::vector<std::string>& out) const {
  if (kind == Kind::Var) out.push_back(var);
  for (const Expr& a : args) a.collect_vars(out);
}

std::string Expr::repr() const {
  switch (kind) {
    case Kind::Var:
      return var;
    case Kind::Const:
      return format_number(value);
    case Kind::Add:
      return args[0].repr() + " + " + args[1].repr();
    case Kind::Sub:
      return args[0].repr() + " - " + args[1].repr();
    case Kind::Abs:
      return "|" + args[0].repr() + "|";
  }
  return {};
}

namespace {
const char* cmp_op_text(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
  }
  return "?";
}
}  // namespace

std::vector<std::string> Filter::vars() const {
  std::vector<std::string> out;
  for (const auto& group : disjuncts) {
    for (const Comparison& c : group) {
      c.lhs.collect_vars(out);
      c.rhs.collect_vars(out);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string Filter::repr() const {
  std::string out;
  if (disjuncts.size() > 1) out += "(";
  for (std::size_t d = 0; d < disjuncts.size(); ++d) {
    if (d) out += " or ";
    for (std::size_t i = 0; i < disjuncts[d].size(); ++i) {
      if (i) out += ", ";
      const Comparison& c = disjuncts[d][i];
      out += c.lhs.repr();
      out += " ";
      out += cmp_op_text(c.op);
      out += " ";
      out += c.rhs.repr();
    }
  }
  if (disjuncts.size() > 1) out += ")";
  return out;
}

std::string AggregateBinding::repr() const {
  static const char* names[] = {"sum", "count", "min", "max"};
  return result_var + " = " + names[static_cast<int>(op)] + "(" + operand_var + ")";
}

std::string BodyLiteral::repr() const {
  switch (kind) {
    case Kind::Positive: {
      std::string out = atom.predicate + "(";
      for (std::size_t i = 0; i < atom.terms.size(); ++i) {
        if (i) out += ",";
        out += atom.terms[i].display();
      }
      return out + ")";
    }
    case Kind::Negated: {
      BodyLiteral pos;
      pos.kind = Kind::Positive;
      pos.atom = atom;
      return "not " + pos.repr();
    }
    case Kind::Filter:
      return filter.repr();
    case Kind::Aggregate:
      return agg.repr();
  }
  return {};
}

// ---------------------------------------------------------------------------
// Rule / Program
// ---------------------------------------------------------------------------

std::vector<const Atom*> Rule::positive_body() const {
  std::vector<const Atom*> out;
  for (const BodyLiteral& lit : body)
    if (lit.kind == BodyLiteral::Kind::Positive) out.push_back(&lit.atom);
  return out;
}

std::vector<std::string> Rule::frontier_vars() const {
  std::unordered_set<std::string> body_vars;
  for (const Atom* a : positive_body())
    for (const Term& t : a->terms)
      if (t.is_variable()) body_vars.insert(t.var_name());
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const Atom& h : head)
    for (const Term& t : h.terms)
      if (t.is_variable() && body_vars.count(t.var_name()) &&
          seen.insert(t.var_name()).second)
        out.push_back(t.var_name());
  return out;
}

const AggregateBinding* Rule::aggregate() const {
  for (const BodyLiteral& lit : body)
    if (lit.kind == BodyLiteral::Kind::Aggregate) return &lit.agg;
  return nullptr;
}

std::string Rule::repr() const {
  std::string out;
  if (is_soft()) out += format_number(weight) + " :: ";
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += ", ";
    out += body[i].repr();
  }
  if (!head.empty()) {
    if (!body.empty()) out += " -> ";
    if (!existential_vars.empty()) {
      out += "exists ";
      for (std::size_t i = 0; i < existential_vars.size(); ++i) {
        if (i) out += ",";
        out += existential_vars[i];
      }
      out += ": ";
    }
    for (std::size_t i = 0; i < head.size(); ++i) {
      if (i) out += ", ";
      BodyLiteral lit;
      lit.kind = BodyLiteral::Kind::Positive;
      lit.atom = head[i];
      out += lit.repr();
    }
  }
  out += ".";
  return out;
}

bool Program::is_intensional(const std::string& pred) const {
  for (const Rule& r : rules)
    for (const Atom& h : r.head)
      if (h.predicate == pred) return true;
  return false;
}

std::string Program::repr() const {
  std::string out;
  for (const Rule& r : rules) {
    out += r.repr();
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Keys and hashing
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& s) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(s);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

namespace {
std::string iso_key_impl(const std::vector<const Fact*>& facts) {
  std::unordered_map<std::uint64_t, std::size_t> renumber;
  std::string out;
  for (const Fact* f : facts) {
    out += f->predicate;
    out += "(";
    for (std::size_t i = 0; i < f->terms.size(); ++i) {
      if (i) out += ",";
      const Term& t = f->terms[i];
      if (t.is_null()) {
        auto [it, fresh] = renumber.emplace(t.null_id(), renumber.size());
        (void)fresh;
        out += "n" + std::to_string(it->second);
      } else {
        out += t.repr();
      }
    }
    out += ")";
    out += "|";
  }
  return out;
}
}  // namespace

std::string iso_key(const Fact& f) { return iso_key_impl({&f}); }

std::string iso_key(const std::vector<Fact>& facts) {
  std::vector<const Fact*> ptrs;
  ptrs.reserve(facts.size());
  for (const Fact& f : facts) ptrs.push_back(&f);
  return iso_key_impl(ptrs);
}

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

bool Instance::insert(const Fact& f) {
  std::string key = fact_key(f);
  if (!keys_.insert(key).second) return false;
  by_pred_[f.predicate].push_back(f);
  return true;
}

void Instance::erase_key(const std::string& key) {
  if (keys_.erase(key) == 0) return;
  for (auto& [pred, facts] : by_pred_) {
    for (auto it = facts.begin(); it != facts.end(); ++it) {
      if (fact_key(*it) == key) {
        facts.erase(it);
        return;
      }
    }
  }
}

Term Instance::mint_null(const std::string& prov_name) {
  auto it = name_to_null_.find(prov_name);
  if (it != name_to_null_.end()) return Term::null(it->second);
  std::uint64_t id = next_null_++;
  null_names_[id] = prov_name;
  name_to_null_[prov_name] = id;
  return Term::null(id);
}

Term Instance::mint_input_null() {
  return mint_null("input:" + std::to_string(next_null_));
}

const std::string& Instance::null_name(std::uint64_t id) const {
  auto it = null_names_.find(id);
  if (it == null_names_.end())
    throw std::runtime_error("unknown labeled null id " + std::to_string(id));
  return it->second;
}

std::optional<std::uint64_t> Instance::null_id_for(const std::string& prov_name) const {
  auto it = name_to_null_.find(prov_name);
  if (it == name_to_null_.end()) return std::nullopt;
  return it->second;
}

std::string Instance::fact_key(const Fact& f) const {
  std::string out = f.predicate + "(";
  for (std::size_t i = 0; i < f.terms.size(); ++i) {
    if (i) out += ",";
    const Term& t = f.terms[i];
    if (t.is_null()) {
      out += "~" + null_name(t.null_id());
    } else if (t.is_variable()) {
      throw std::runtime_error("non-ground fact: " + f.repr());
    } else {
      out += t.repr();
    }
  }
  out += ")";
  return out;
}

const std::vector<Fact>& Instance::facts(const std::string& pred) const {
  static const std::vector<Fact> empty;
  auto it = by_pred_.find(pred);
  return it == by_pred_.end() ? empty : it->second;
}

std::vector<Fact> Instance::all_facts() const {
  std::vector<Fact> out;
  out.reserve(keys_.size());
  for (const auto& [pred, facts] : by_pred_)
    out.insert(out.end(), facts.begin(), facts.end());
  return out;
}

std::vector<std::string> Instance::predicates() const {
  std::vector<std::string> out;
  for (const auto& [pred, facts] : by_pred_)
    if (!facts.empty()) out.push_back(pred);
  return out;
}

std::vector<std::string> Instance::sorted_fact_keys() const {
  std::vector<std::string> keys(keys_.begin(), keys_.end());
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string Instance::canonical_key() const {
  std::string out;
  for (const std::string& k : sorted_fact_keys()) {
    out += k;
    out += ";";
  }
  return out;
}

}  // namespace softchase
