#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "softchase/model.hpp"
#include "softchase/parser.hpp"

namespace softchase {

/// (predicate, 1-based argument index)
using Position = std::pair<std::string, int>;
using PositionSet = std::set<Position>;

/// Fixpoint of: positions holding existential head variables, plus head
/// positions of frontier variables all of whose body occurrences are at
/// already-affected positions.
PositionSet affected_positions(const Program& program);

enum class VarClass { Harmless, Harmful, Dangerous };

/// Per-rule body variable classification against a set of affected positions.
/// A variable is harmful if every occurrence in positive body atoms is at an
/// affected position, dangerous if additionally it occurs in the head.
std::map<std::string, VarClass> classify_variables(const Rule& rule,
                                                   const PositionSet& affected);

struct Violation {
  std::string code;   // WARD_MISSING, NEG_CYCLE, ...
  int rule_id = -1;   // -1 for program-level violations
  std::string message;
};

struct WardReport {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Checks every rule has a ward: one body atom covering all dangerous
/// variables that shares only harmless variables with the rest of the body.
WardReport check_warded(const Program& program);

struct StratReport {
  bool ok = true;
  std::vector<Violation> violations;
  std::map<std::string, int> stratum;  // predicate -> stratum (0-based)
  std::map<int, int> rule_stratum;     // rule id -> stratum
  int num_strata = 0;
};

/// Predicate-level stratification of negation and aggregation. Negated and
/// aggregate dependencies must not occur inside a recursive component; with
/// relax_aggregates, aggregate dependencies are treated as positive.
StratReport check_stratified(const Program& program, bool relax_aggregates = false);

struct AnalysisReport {
  bool ok = true;
  std::vector<Violation> violations;
  PositionSet affected;
  StratReport strat;
};

/// Full static check: weights, wardedness, stratification.
AnalysisReport analyze(const Program& program, bool relax_aggregates = false);

struct RewrittenQuery {
  Program program;               // input program plus the answer rule (if any)
  std::string answer_predicate;  // predicate whose facts answer the query
  AnalysisReport report;         // analysis of the augmented program
};

/// Atomic queries leave the program untouched; conjunctive queries add a hard
/// answer-collection rule and re-run the static checks.
RewrittenQuery rewrite_query(const Program& program, const ConjunctiveQuery& query,
                             bool relax_aggregates = false);

}  // namespace softchase
