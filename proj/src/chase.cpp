#include "softchase/chase.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace softchase {

const Rule& CompiledProgram::rule_by_id(int id) const {
  for (const Rule& r : program.rules)
    if (r.id == id) return r;
  throw std::out_of_range("no rule with id " + std::to_string(id));
}

CompiledProgram compile(const Program& program, bool relax_aggregates) {
  CompiledProgram cp;
  cp.program = program;
  cp.report = analyze(program, relax_aggregates);
  if (!cp.report.ok) throw AnalysisError(cp.report.violations);
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    if (program.rules[i].is_hard())
      cp.hard_rules.push_back(static_cast<int>(i));
    else
      cp.soft_rules.push_back(static_cast<int>(i));
  }
  return cp;
}

PFact to_portable(const Fact& f, const Instance& inst) {
  PFact out;
  out.predicate = f.predicate;
  for (const Term& t : f.terms) {
    PTerm pt;
    if (t.is_null()) {
      pt.is_null = true;
      pt.null_name = inst.null_name(t.null_id());
    } else {
      pt.term = t;
    }
    out.terms.push_back(std::move(pt));
  }
  return out;
}

Fact from_portable(const PFact& f, Instance& inst) {
  Fact out;
  out.predicate = f.predicate;
  for (const PTerm& pt : f.terms)
    out.terms.push_back(pt.is_null ? inst.mint_null(pt.null_name) : pt.term);
  return out;
}

ChaseState make_state(const Instance& edb) {
  ChaseState state;
  state.edb = edb;
  state.instance = edb;
  return state;
}

// ---------------------------------------------------------------------------
// Filter evaluation
// ---------------------------------------------------------------------------

namespace {

std::optional<double> eval_expr(const Expr& e, const Substitution& s) {
  switch (e.kind) {
    case Expr::Kind::Const:
      return e.value;
    case Expr::Kind::Var: {
      auto it = s.find(e.var);
      if (it == s.end() || !it->second.is_number()) return std::nullopt;
      return it->second.number_value();
    }
    case Expr::Kind::Add: {
      auto a = eval_expr(e.args[0], s), b = eval_expr(e.args[1], s);
      if (!a || !b) return std::nullopt;
      return *a + *b;
    }
    case Expr::Kind::Sub: {
      auto a = eval_expr(e.args[0], s), b = eval_expr(e.args[1], s);
      if (!a || !b) return std::nullopt;
      return *a - *b;
    }
    case Expr::Kind::Abs: {
      auto a = eval_expr(e.args[0], s);
      if (!a) return std::nullopt;
      return std::fabs(*a);
    }
  }
  return std::nullopt;
}

bool is_simple(const Expr& e) {
  return e.kind == Expr::Kind::Var || e.kind == Expr::Kind::Const;
}

std::optional<Term> resolve_simple(const Expr& e, const Substitution& s) {
  if (e.kind == Expr::Kind::Const) return Term::number(e.value);
  auto it = s.find(e.var);
  if (it == s.end()) return std::nullopt;
  return it->second;
}

bool eval_comparison(const Comparison& c, const Substitution& s) {
  // Symbol (in)equality is allowed for = and != between plain terms.
  if ((c.op == CmpOp::Eq || c.op == CmpOp::Ne) && is_simple(c.lhs) && is_simple(c.rhs)) {
    auto a = resolve_simple(c.lhs, s), b = resolve_simple(c.rhs, s);
    if (!a || !b) return false;
    bool eq = *a == *b;
    return c.op == CmpOp::Eq ? eq : !eq;
  }
  auto a = eval_expr(c.lhs, s), b = eval_expr(c.rhs, s);
  if (!a || !b) return false;
  switch (c.op) {
    case CmpOp::Lt: return *a < *b;
    case CmpOp::Le: return *a <= *b;
    case CmpOp::Gt: return *a > *b;
    case CmpOp::Ge: return *a >= *b;
    case CmpOp::Eq: return *a == *b;
    case CmpOp::Ne: return *a != *b;
  }
  return false;
}

bool eval_filter(const Filter& f, const Substitution& s) {
  for (const auto& conj : f.disjuncts) {
    bool ok = true;
    for (const Comparison& c : conj)
      if (!eval_comparison(c, s)) {
        ok = false;
        break;
      }
    if (ok) return true;
  }
  return false;
}

bool vars_bound(const std::vector<std::string>& vars, const Substitution& s) {
  for (const std::string& v : vars)
    if (!s.count(v)) return false;
  return true;
}

bool mentions(const std::vector<std::string>& vars, const std::string& v) {
  return std::find(vars.begin(), vars.end(), v) != vars.end();
}

// ---------------------------------------------------------------------------
// Match enumeration
// ---------------------------------------------------------------------------

std::string term_sig(const Term& t, const Instance& inst) {
  return t.is_null() ? "~" + inst.null_name(t.null_id()) : t.repr();
}

std::string unifier_signature(const Substitution& s, const Instance& inst) {
  std::string out;
  for (const auto& [var, term] : s) {
    if (!out.empty()) out += ",";
    out += var + "=" + term_sig(term, inst);
  }
  return out;
}

std::string null_provenance_name(int rule_id, const std::string& var,
                                 const std::string& unifier_sig) {
  return fnv1a64_hex("null|" + std::to_string(rule_id) + "|" + var + "|" + unifier_sig);
}

// A full positive-body match.
struct Match {
  Substitution subst;
  std::vector<Fact> facts;
  std::vector<std::string> keys;
};

bool match_atom(const Atom& pattern, const Fact& fact, Substitution& s,
                std::vector<std::string>& bound_here) {
  if (pattern.terms.size() != fact.terms.size()) return false;
  for (std::size_t i = 0; i < pattern.terms.size(); ++i) {
    const Term& p = pattern.terms[i];
    const Term& f = fact.terms[i];
    if (p.is_variable()) {
      auto it = s.find(p.var_name());
      if (it == s.end()) {
        s.emplace(p.var_name(), f);
        bound_here.push_back(p.var_name());
      } else if (it->second != f) {
        return false;
      }
    } else if (p != f) {
      return false;
    }
  }
  return true;
}

void enumerate_matches(const ChaseState& state, const Rule& rule,
                       const std::string& skip_filter_var,
                       const std::function<void(const Match&)>& emit) {
  std::vector<const Atom*> positives;
  std::vector<const Filter*> filters;
  std::vector<const Atom*> negatives;
  for (const BodyLiteral& lit : rule.body) {
    switch (lit.kind) {
      case BodyLiteral::Kind::Positive: positives.push_back(&lit.atom); break;
      case BodyLiteral::Kind::Negated: negatives.push_back(&lit.atom); break;
      case BodyLiteral::Kind::Filter: {
        auto vars = lit.filter.vars();
        if (skip_filter_var.empty() || !mentions(vars, skip_filter_var))
          filters.push_back(&lit.filter);
        break;
      }
      case BodyLiteral::Kind::Aggregate: break;
    }
  }

  Match m;
  std::vector<bool> filter_done(filters.size(), false);

  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == positives.size()) {
      for (const Atom* neg : negatives) {
        Fact f = apply_substitution(*neg, m.subst);
        if (state.instance.contains(f)) return;
      }
      emit(m);
      return;
    }
    for (const Fact& fact : state.instance.facts(positives[i]->predicate)) {
      std::vector<std::string> bound_here;
      if (match_atom(*positives[i], fact, m.subst, bound_here)) {
        std::vector<std::size_t> checked;
        bool ok = true;
        for (std::size_t fi = 0; fi < filters.size(); ++fi) {
          if (filter_done[fi]) continue;
          if (!vars_bound(filters[fi]->vars(), m.subst)) continue;
          filter_done[fi] = true;
          checked.push_back(fi);
          if (!eval_filter(*filters[fi], m.subst)) {
            ok = false;
            break;
          }
        }
        if (ok) {
          m.facts.push_back(fact);
          m.keys.push_back(state.instance.fact_key(fact));
          go(i + 1);
          m.facts.pop_back();
          m.keys.pop_back();
        }
        for (std::size_t fi : checked) filter_done[fi] = false;
      }
      for (const std::string& v : bound_here) m.subst.erase(v);
    }
  };
  go(0);
}

// Head facts of a candidate, resolving existential nulls by provenance name.
// Returns false through adds_fact if some head fact is not in the instance.
bool candidate_is_noop(const ChaseState& state, const Rule& rule,
                       const Substitution& unifier, const std::string& sig) {
  for (const Atom& h : rule.head) {
    Fact f;
    f.predicate = h.predicate;
    bool unresolved = false;
    for (const Term& t : h.terms) {
      if (!t.is_variable()) {
        f.terms.push_back(t);
        continue;
      }
      auto it = unifier.find(t.var_name());
      if (it != unifier.end()) {
        f.terms.push_back(it->second);
        continue;
      }
      // Existential: the null exists only if its provenance name is known.
      auto id = state.instance.null_id_for(
          null_provenance_name(rule.id, t.var_name(), sig));
      if (!id) {
        unresolved = true;
        break;
      }
      f.terms.push_back(Term::null(*id));
    }
    if (unresolved || !state.instance.contains(f)) return false;
  }
  return true;
}

double aggregate_values(AggOp op, const std::vector<double>& values) {
  switch (op) {
    case AggOp::Sum: {
      double s = 0;
      for (double v : values) s += v;
      return s;
    }
    case AggOp::Count:
      return static_cast<double>(values.size());
    case AggOp::Min:
      return *std::min_element(values.begin(), values.end());
    case AggOp::Max:
      return *std::max_element(values.begin(), values.end());
  }
  return 0;
}

}  // namespace

std::vector<CandidateApplication> applicable_unifiers(const ChaseState& state,
                                                      const CompiledProgram& cp,
                                                      int rule_id) {
  const Rule& rule = cp.rule_by_id(rule_id);
  const AggregateBinding* agg = rule.aggregate();
  std::vector<CandidateApplication> out;
  std::unordered_set<std::string> seen;  // memo keys emitted in this call

  auto push = [&](CandidateApplication cand) {
    if (state.memo.count(cand.memo_key) || !seen.insert(cand.memo_key).second) return;
    cand.adds_fact = !candidate_is_noop(state, rule, cand.unifier, cand.unifier_sig);
    out.push_back(std::move(cand));
  };

  if (!agg) {
    enumerate_matches(state, rule, "", [&](const Match& m) {
      CandidateApplication cand;
      cand.rule_id = rule.id;
      cand.unifier = m.subst;
      cand.matched_keys = m.keys;
      cand.memo_key = "r" + std::to_string(rule.id) + "|" + iso_key(m.facts);
      cand.unifier_sig = unifier_signature(m.subst, state.instance);
      push(std::move(cand));
    });
  } else {
    // Group the full matches by the head variables, aggregate the operand
    // over distinct matched tuples, then apply result-variable filters.
    std::vector<std::string> group_vars;
    for (const Atom& h : rule.head)
      for (const Term& t : h.terms)
        if (t.is_variable() && t.var_name() != agg->result_var &&
            !mentions(group_vars, t.var_name()) &&
            !mentions(rule.existential_vars, t.var_name()))
          group_vars.push_back(t.var_name());
    std::sort(group_vars.begin(), group_vars.end());

    struct Group {
      Substitution binding;
      std::map<std::string, std::pair<double, Match>> matches;  // by tuple key
    };
    std::map<std::string, Group> groups;
    enumerate_matches(state, rule, agg->result_var, [&](const Match& m) {
      auto op_it = m.subst.find(agg->operand_var);
      if (op_it == m.subst.end() || !op_it->second.is_number()) return;
      Substitution binding;
      for (const std::string& v : group_vars) {
        auto it = m.subst.find(v);
        if (it == m.subst.end()) return;
        binding.emplace(v, it->second);
      }
      std::string gkey = unifier_signature(binding, state.instance);
      std::vector<std::string> sorted_keys = m.keys;
      std::sort(sorted_keys.begin(), sorted_keys.end());
      std::string tuple_key;
      for (const std::string& k : sorted_keys) tuple_key += k + ";";
      Group& g = groups[gkey];
      g.binding = std::move(binding);
      g.matches.emplace(tuple_key,
                        std::make_pair(op_it->second.number_value(), m));
    });

    for (auto& [gkey, group] : groups) {
      std::vector<double> values;
      std::map<std::string, Fact> fact_by_key;
      for (auto& [tk, vm] : group.matches) {
        values.push_back(vm.first);
        for (std::size_t i = 0; i < vm.second.keys.size(); ++i)
          fact_by_key.emplace(vm.second.keys[i], vm.second.facts[i]);
      }
      Substitution unifier = group.binding;
      unifier.emplace(agg->result_var, Term::number(aggregate_values(agg->op, values)));
      // Result-variable filters.
      bool ok = true;
      for (const BodyLiteral& lit : rule.body) {
        if (lit.kind != BodyLiteral::Kind::Filter) continue;
        if (!mentions(lit.filter.vars(), agg->result_var)) continue;
        if (!eval_filter(lit.filter, unifier)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      CandidateApplication cand;
      cand.rule_id = rule.id;
      cand.unifier = std::move(unifier);
      std::vector<Fact> facts;
      for (auto& [k, f] : fact_by_key) {
        cand.matched_keys.push_back(k);
        facts.push_back(f);
      }
      cand.unifier_sig = unifier_signature(cand.unifier, state.instance);
      cand.memo_key = "r" + std::to_string(rule.id) + "|agg|" + gkey + "|" +
                      iso_key(facts);
      push(std::move(cand));
    }
  }

  std::sort(out.begin(), out.end(),
            [](const CandidateApplication& a, const CandidateApplication& b) {
              return a.memo_key < b.memo_key;
            });
  return out;
}

std::vector<CandidateApplication> soft_candidates(const ChaseState& state,
                                                  const CompiledProgram& cp) {
  std::vector<CandidateApplication> out;
  for (int idx : cp.soft_rules) {
    auto cands = applicable_unifiers(state, cp, cp.program.rules[idx].id);
    for (CandidateApplication& c : cands)
      if (c.adds_fact) out.push_back(std::move(c));
  }
  return out;
}

int apply_chase_step(ChaseState& state, const CompiledProgram& cp,
                     const CandidateApplication& cand) {
  const Rule& rule = cp.rule_by_id(cand.rule_id);
  Substitution full = cand.unifier;
  for (const std::string& v : rule.existential_vars)
    full.emplace(v, state.instance.mint_null(
                        null_provenance_name(rule.id, v, cand.unifier_sig)));

  AppRecord rec;
  rec.id = state.next_app_id++;
  rec.rule_id = rule.id;
  rec.soft = rule.is_soft();
  rec.weight = rule.weight;
  rec.memo_key = cand.memo_key;
  rec.unifier_sig = cand.unifier_sig;
  rec.matched_keys = cand.matched_keys;

  for (const Atom& h : rule.head) {
    Fact f = apply_substitution(h, full);
    std::string key = state.instance.fact_key(f);
    if (state.instance.insert(f)) {
      rec.generated.push_back(to_portable(f, state.instance));
      rec.generated_keys.push_back(key);
    } else {
      // Already present: the application consumes it instead.
      rec.matched_keys.push_back(key);
    }
  }

  state.memo.insert(cand.memo_key);
  for (const std::string& k : rec.matched_keys) state.consumers[k].push_back(rec.id);
  for (const std::string& k : rec.generated_keys) state.generator.emplace(k, rec.id);
  state.apps.push_back(std::move(rec));
  return state.apps.back().id;
}

namespace {

std::size_t run_to_fixpoint(ChaseState& state, const CompiledProgram& cp,
                            const std::vector<int>& rule_indices,
                            const ChaseConfig& config) {
  std::size_t fired = 0;
  std::optional<std::mt19937_64> rng;
  if (config.shuffle_seed) rng.emplace(*config.shuffle_seed);

  int num_strata = std::max(cp.report.strat.num_strata, 1);
  for (int stratum = 0; stratum < num_strata; ++stratum) {
    for (;;) {
      std::vector<CandidateApplication> batch;
      for (int idx : rule_indices) {
        const Rule& rule = cp.program.rules[idx];
        auto it = cp.report.strat.rule_stratum.find(rule.id);
        int rs = it == cp.report.strat.rule_stratum.end() ? 0 : it->second;
        if (rs != stratum) continue;
        auto cands = applicable_unifiers(state, cp, rule.id);
        for (CandidateApplication& c : cands) batch.push_back(std::move(c));
      }
      if (batch.empty()) break;
      if (rng)
        for (std::size_t i = batch.size(); i > 1; --i)
          std::swap(batch[i - 1], batch[(*rng)() % i]);
      bool any = false;
      for (const CandidateApplication& cand : batch) {
        if (state.memo.count(cand.memo_key)) continue;  // fired earlier in batch
        apply_chase_step(state, cp, cand);
        any = true;
        if (++fired > config.step_budget)
          throw BudgetExceededError("chase step budget of " +
                                    std::to_string(config.step_budget) + " exceeded");
      }
      if (!any) break;
    }
  }
  return fired;
}

}  // namespace

std::size_t close_under_hard_rules(ChaseState& state, const CompiledProgram& cp,
                                   const ChaseConfig& config) {
  return run_to_fixpoint(state, cp, cp.hard_rules, config);
}

std::size_t warded_chase(ChaseState& state, const CompiledProgram& cp,
                         const ChaseConfig& config) {
  std::vector<int> all(cp.program.rules.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return run_to_fixpoint(state, cp, all, config);
}

std::vector<int> undoable_applications(const ChaseState& state) {
  std::vector<int> out;
  for (const AppRecord& app : state.apps) {
    if (!app.soft) continue;
    // Trace consumption of this application's facts through hard applications;
    // any soft consumer makes it non-undoable.
    std::vector<std::string> frontier = app.generated_keys;
    std::unordered_set<std::string> visited(frontier.begin(), frontier.end());
    bool blocked = false;
    while (!frontier.empty() && !blocked) {
      std::string key = std::move(frontier.back());
      frontier.pop_back();
      auto it = state.consumers.find(key);
      if (it == state.consumers.end()) continue;
      for (int cid : it->second) {
        if (cid == app.id) continue;
        const AppRecord& c = state.apps[cid];
        if (c.soft) {
          blocked = true;
          break;
        }
        for (const std::string& k : c.generated_keys)
          if (visited.insert(k).second) frontier.push_back(k);
      }
    }
    if (!blocked) out.push_back(app.id);
  }
  return out;
}

void undo_application(ChaseState& state, const CompiledProgram& cp, int app_id,
                      const ChaseConfig& config) {
  std::vector<int> ok = undoable_applications(state);
  if (std::find(ok.begin(), ok.end(), app_id) == ok.end())
    throw std::invalid_argument("application " + std::to_string(app_id) +
                                " is not undoable");

  std::vector<AppRecord> kept;
  for (const AppRecord& app : state.apps)
    if (app.soft && app.id != app_id) kept.push_back(app);

  state.instance = state.edb;
  state.apps.clear();
  state.memo.clear();
  state.consumers.clear();
  state.generator.clear();
  state.next_app_id = 0;

  for (AppRecord& app : kept) {
    app.id = state.next_app_id++;
    for (const PFact& pf : app.generated) {
      Fact f = from_portable(pf, state.instance);
      state.instance.insert(f);
    }
    state.memo.insert(app.memo_key);
    for (const std::string& k : app.matched_keys)
      state.consumers[k].push_back(app.id);
    for (const std::string& k : app.generated_keys)
      state.generator.emplace(k, app.id);
    state.apps.push_back(std::move(app));
  }
  close_under_hard_rules(state, cp, config);
}

}  // namespace softchase
