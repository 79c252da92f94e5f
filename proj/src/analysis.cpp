#include "softchase/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>
#include <unordered_set>

namespace softchase {

namespace {

// Positions at which a variable occurs in the positive body.
std::map<std::string, std::vector<Position>> body_var_positions(const Rule& rule) {
  std::map<std::string, std::vector<Position>> out;
  for (const Atom* atom : rule.positive_body()) {
    for (std::size_t i = 0; i < atom->terms.size(); ++i) {
      const Term& t = atom->terms[i];
      if (t.is_variable())
        out[t.var_name()].push_back({atom->predicate, static_cast<int>(i) + 1});
    }
  }
  return out;
}

bool all_affected(const std::vector<Position>& positions, const PositionSet& affected) {
  return std::all_of(positions.begin(), positions.end(),
                     [&](const Position& p) { return affected.count(p) > 0; });
}

}  // namespace

PositionSet affected_positions(const Program& program) {
  PositionSet affected;
  // Base: positions of existential variables in rule heads.
  for (const Rule& rule : program.rules) {
    std::unordered_set<std::string> ex(rule.existential_vars.begin(),
                                       rule.existential_vars.end());
    for (const Atom& h : rule.head)
      for (std::size_t i = 0; i < h.terms.size(); ++i)
        if (h.terms[i].is_variable() && ex.count(h.terms[i].var_name()))
          affected.insert({h.predicate, static_cast<int>(i) + 1});
  }
  // Propagate through frontier variables occurring only at affected positions.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& rule : program.rules) {
      auto positions = body_var_positions(rule);
      for (const Atom& h : rule.head) {
        for (std::size_t i = 0; i < h.terms.size(); ++i) {
          const Term& t = h.terms[i];
          if (!t.is_variable()) continue;
          auto it = positions.find(t.var_name());
          if (it == positions.end() || it->second.empty()) continue;
          if (!all_affected(it->second, affected)) continue;
          if (affected.insert({h.predicate, static_cast<int>(i) + 1}).second)
            changed = true;
        }
      }
    }
  }
  return affected;
}

std::map<std::string, VarClass> classify_variables(const Rule& rule,
                                                   const PositionSet& affected) {
  std::map<std::string, VarClass> out;
  auto positions = body_var_positions(rule);
  std::unordered_set<std::string> head_vars;
  for (const Atom& h : rule.head)
    for (const Term& t : h.terms)
      if (t.is_variable()) head_vars.insert(t.var_name());

  for (const auto& [var, occs] : positions) {
    if (all_affected(occs, affected))
      out[var] = head_vars.count(var) ? VarClass::Dangerous : VarClass::Harmful;
    else
      out[var] = VarClass::Harmless;
  }
  return out;
}

WardReport check_warded(const Program& program) {
  WardReport report;
  PositionSet affected = affected_positions(program);
  for (const Rule& rule : program.rules) {
    auto classes = classify_variables(rule, affected);
    std::vector<std::string> dangerous;
    for (const auto& [var, cls] : classes)
      if (cls == VarClass::Dangerous) dangerous.push_back(var);
    if (dangerous.empty()) continue;

    std::vector<const Atom*> body = rule.positive_body();
    auto atom_vars = [](const Atom* a) {
      std::unordered_set<std::string> vs;
      for (const Term& t : a->terms)
        if (t.is_variable()) vs.insert(t.var_name());
      return vs;
    };

    bool any_cover = false;
    bool has_ward = false;
    for (const Atom* candidate : body) {
      auto vars = atom_vars(candidate);
      bool covers = std::all_of(dangerous.begin(), dangerous.end(),
                                [&](const std::string& v) { return vars.count(v) > 0; });
      if (!covers) continue;
      any_cover = true;
      bool clean = true;
      for (const Atom* other : body) {
        if (other == candidate) continue;
        for (const std::string& v : atom_vars(other))
          if (vars.count(v) && classes.at(v) != VarClass::Harmless) clean = false;
      }
      if (clean) {
        has_ward = true;
        break;
      }
    }
    if (has_ward) continue;
    report.ok = false;
    std::string vars_text;
    for (std::size_t i = 0; i < dangerous.size(); ++i)
      vars_text += (i ? ", " : "") + dangerous[i];
    if (!any_cover)
      report.violations.push_back(
          {"WARD_MISSING", rule.id,
           "no single body atom contains all dangerous variables {" + vars_text + "}"});
    else
      report.violations.push_back(
          {"WARD_SHARED_HARMFUL", rule.id,
           "every atom covering the dangerous variables {" + vars_text +
               "} shares a harmful variable with another body atom"});
  }
  return report;
}

StratReport check_stratified(const Program& program, bool relax_aggregates) {
  StratReport report;

  // Negation safety first: variables of a negated atom must be bound.
  for (const Rule& rule : program.rules) {
    std::unordered_set<std::string> bound;
    for (const Atom* a : rule.positive_body())
      for (const Term& t : a->terms)
        if (t.is_variable()) bound.insert(t.var_name());
    for (const BodyLiteral& lit : rule.body) {
      if (lit.kind != BodyLiteral::Kind::Negated) continue;
      for (const Term& t : lit.atom.terms)
        if (t.is_variable() && !bound.count(t.var_name())) {
          report.ok = false;
          report.violations.push_back(
              {"NEG_UNSAFE", rule.id,
               "variable '" + t.var_name() +
                   "' of a negated atom is not bound by a positive body atom"});
        }
    }
  }

  // Dependency graph. Edge kinds: 0 positive, 1 negative, 2 aggregate.
  struct Edge {
    int to;
    int kind;
    int rule_id;
  };
  std::vector<std::string> preds;
  std::unordered_map<std::string, int> pred_index;
  auto node = [&](const std::string& p) {
    auto [it, fresh] = pred_index.emplace(p, static_cast<int>(preds.size()));
    if (fresh) preds.push_back(p);
    return it->second;
  };
  for (const auto& [p, arity] : program.arity) node(p);
  std::vector<std::vector<Edge>> adj(preds.size());

  for (const Rule& rule : program.rules) {
    const AggregateBinding* agg = rule.aggregate();
    for (const Atom& h : rule.head) {
      int hn = node(h.predicate);
      for (const BodyLiteral& lit : rule.body) {
        if (lit.kind == BodyLiteral::Kind::Positive) {
          int kind = 0;
          if (agg) {
            // Predicates that bind the aggregate operand feed the aggregate.
            for (const Term& t : lit.atom.terms)
              if (t.is_variable() && t.var_name() == agg->operand_var)
                kind = relax_aggregates ? 0 : 2;
          }
          adj[node(lit.atom.predicate)].push_back({hn, kind, rule.id});
        } else if (lit.kind == BodyLiteral::Kind::Negated) {
          adj[node(lit.atom.predicate)].push_back({hn, 1, rule.id});
        }
      }
    }
  }

  // Tarjan SCC.
  int n = static_cast<int>(preds.size());
  std::vector<int> comp(n, -1), low(n), idx(n, -1), stack;
  std::vector<bool> on_stack(n, false);
  int counter = 0, ncomp = 0;
  std::function<void(int)> strongconnect = [&](int v) {
    idx[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (const Edge& e : adj[v]) {
      if (idx[e.to] == -1) {
        strongconnect(e.to);
        low[v] = std::min(low[v], low[e.to]);
      } else if (on_stack[e.to]) {
        low[v] = std::min(low[v], idx[e.to]);
      }
    }
    if (low[v] == idx[v]) {
      for (;;) {
        int w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = ncomp;
        if (w == v) break;
      }
      ++ncomp;
    }
  };
  for (int v = 0; v < n; ++v)
    if (idx[v] == -1) strongconnect(v);

  for (int v = 0; v < n; ++v) {
    for (const Edge& e : adj[v]) {
      if (comp[v] != comp[e.to] || e.kind == 0) continue;
      report.ok = false;
      const char* code = e.kind == 1 ? "NEG_CYCLE" : "AGG_CYCLE";
      const char* what = e.kind == 1 ? "negation" : "aggregation";
      report.violations.push_back(
          {code, e.rule_id,
           std::string(what) + " from '" + preds[v] + "' to '" + preds[e.to] +
               "' occurs inside a recursive component"});
    }
  }
  if (!report.ok) return report;

  // Strata: longest path over the condensation, +1 across negative/aggregate
  // edges. Tarjan emits components in reverse topological order, so component
  // id descending is a topological order of the condensation.
  std::vector<int> comp_stratum(ncomp, 0);
  for (int c = ncomp - 1; c >= 0; --c) {
    for (int v = 0; v < n; ++v) {
      if (comp[v] != c) continue;
      for (const Edge& e : adj[v]) {
        if (comp[e.to] == c) continue;
        int need = comp_stratum[c] + (e.kind == 0 ? 0 : 1);
        comp_stratum[comp[e.to]] = std::max(comp_stratum[comp[e.to]], need);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    report.stratum[preds[v]] = comp_stratum[comp[v]];
    report.num_strata = std::max(report.num_strata, comp_stratum[comp[v]] + 1);
  }
  for (const Rule& rule : program.rules) {
    int s = 0;
    for (const Atom& h : rule.head) s = std::max(s, report.stratum[h.predicate]);
    report.rule_stratum[rule.id] = s;
  }
  return report;
}

AnalysisReport analyze(const Program& program, bool relax_aggregates) {
  AnalysisReport report;
  for (const Rule& rule : program.rules) {
    if (std::isinf(rule.weight) && rule.weight < 0) {
      report.ok = false;
      report.violations.push_back(
          {"WEIGHT_NEG_INF", rule.id,
           "weight -inf is not a valid rule weight (hard rules use +inf)"});
    }
  }
  report.affected = affected_positions(program);
  WardReport ward = check_warded(program);
  if (!ward.ok) {
    report.ok = false;
    report.violations.insert(report.violations.end(), ward.violations.begin(),
                             ward.violations.end());
  }
  report.strat = check_stratified(program, relax_aggregates);
  if (!report.strat.ok) {
    report.ok = false;
    report.violations.insert(report.violations.end(), report.strat.violations.begin(),
                             report.strat.violations.end());
  }
  return report;
}

RewrittenQuery rewrite_query(const Program& program, const ConjunctiveQuery& query,
                             bool relax_aggregates) {
  RewrittenQuery out;
  out.program = program;
  if (query.atomic) {
    out.answer_predicate = query.predicate;
    out.report = analyze(out.program, relax_aggregates);
    return out;
  }
  std::string ans = query.head_pred.empty() ? "q" : query.head_pred;
  while (out.program.arity.count(ans)) ans += "_ans";
  for (const BodyLiteral& lit : query.body) {
    if (lit.kind != BodyLiteral::Kind::Positive) continue;
    auto [it, fresh] = out.program.arity.emplace(
        lit.atom.predicate, static_cast<int>(lit.atom.terms.size()));
    if (!fresh && it->second != static_cast<int>(lit.atom.terms.size())) {
      out.report.ok = false;
      out.report.violations.push_back(
          {"QUERY_ARITY", -1,
           "query atom '" + lit.atom.predicate + "' used with arity " +
               std::to_string(lit.atom.terms.size()) + ", program declares " +
               std::to_string(it->second)});
      out.answer_predicate = ans;
      return out;
    }
  }
  Rule rule;
  rule.id = out.program.rules.empty() ? 0 : out.program.rules.back().id + 1;
  rule.weight = kHardWeight;
  rule.body = query.body;
  Atom head;
  head.predicate = ans;
  for (const std::string& v : query.head_vars) head.terms.push_back(Term::variable(v));
  rule.head.push_back(head);
  out.program.rules.push_back(rule);
  out.program.arity[ans] = static_cast<int>(query.head_vars.size());
  out.answer_predicate = ans;
  out.report = analyze(out.program, relax_aggregates);
  return out;
}

}  // namespace softchase
