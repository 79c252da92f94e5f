#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "softchase/analysis.hpp"
#include "softchase/model.hpp"

namespace softchase {

class AnalysisError : public std::runtime_error {
 public:
  explicit AnalysisError(std::vector<Violation> v)
      : std::runtime_error(v.empty() ? "analysis error" : v.front().code + ": " + v.front().message),
        violations(std::move(v)) {}
  std::vector<Violation> violations;
};

class BudgetExceededError : public std::runtime_error {
 public:
  explicit BudgetExceededError(const std::string& what) : std::runtime_error(what) {}
};

struct ChaseConfig {
  std::size_t step_budget = 1'000'000;  // chase applications before giving up
  std::optional<std::uint64_t> shuffle_seed;  // permutes application order
};

/// Program plus the static analysis it passed.
struct CompiledProgram {
  Program program;
  AnalysisReport report;
  std::vector<int> hard_rules;  // indices into program.rules
  std::vector<int> soft_rules;

  const Rule& rule_by_id(int id) const;
};

/// Runs the full static check; throws AnalysisError on violations.
CompiledProgram compile(const Program& program, bool relax_aggregates = false);

/// A ground term that survives instance rebuilds: nulls are carried by their
/// provenance name rather than a numeric id.
struct PTerm {
  bool is_null = false;
  Term term;              // constant, when !is_null
  std::string null_name;  // provenance name, when is_null
};

struct PFact {
  std::string predicate;
  std::vector<PTerm> terms;
};

PFact to_portable(const Fact& f, const Instance& inst);
Fact from_portable(const PFact& f, Instance& inst);  // mints nulls by name

/// One applied rule instance (hard or soft).
struct AppRecord {
  int id = 0;
  int rule_id = 0;
  bool soft = false;
  double weight = 0.0;
  std::string memo_key;
  std::string unifier_sig;
  std::vector<std::string> matched_keys;    // consumed facts (body matches plus
                                            // head facts that already existed)
  std::vector<PFact> generated;             // newly added head facts
  std::vector<std::string> generated_keys;  // their provenance keys
};

struct ChaseState {
  Instance edb;       // input facts, kept for rebuilds
  Instance instance;  // current instance
  std::vector<AppRecord> apps;
  std::unordered_set<std::string> memo;  // fired (rule, body-isomorphism) keys
  std::unordered_map<std::string, std::vector<int>> consumers;  // fact -> app ids
  std::unordered_map<std::string, int> generator;               // fact -> app id
  int next_app_id = 0;
};

ChaseState make_state(const Instance& edb);

/// A rule match ready to fire.
struct CandidateApplication {
  int rule_id = 0;
  Substitution unifier;  // frontier variables (plus the aggregate result)
  std::vector<std::string> matched_keys;
  std::string memo_key;
  std::string unifier_sig;
  bool adds_fact = false;  // at least one head fact is not yet in the instance
};

/// Enumerates the unfired matches of one rule against the current instance,
/// in deterministic order. Matches suppressed by the body-isomorphism memo
/// are omitted.
std::vector<CandidateApplication> applicable_unifiers(const ChaseState& state,
                                                      const CompiledProgram& cp,
                                                      int rule_id);

/// Unfired matches of every soft rule that would add at least one fact.
std::vector<CandidateApplication> soft_candidates(const ChaseState& state,
                                                  const CompiledProgram& cp);

/// Fires one match: mints nulls for existential variables (named by rule and
/// unifier, so replays agree), inserts the head facts, records provenance.
/// Returns the application id.
int apply_chase_step(ChaseState& state, const CompiledProgram& cp,
                     const CandidateApplication& cand);

/// Applies hard rules to fixpoint, stratum by stratum. Returns the number of
/// applications fired. Throws BudgetExceededError past config.step_budget.
std::size_t close_under_hard_rules(ChaseState& state, const CompiledProgram& cp,
                                   const ChaseConfig& config = {});

/// Applies all rules (hard and soft) to fixpoint under body-isomorphism
/// suppression: one representative match per isomorphism class ever fires.
std::size_t warded_chase(ChaseState& state, const CompiledProgram& cp,
                         const ChaseConfig& config = {});

/// Soft applications whose generated facts were not consumed by any other
/// soft application, tracing consumption through hard applications.
std::vector<int> undoable_applications(const ChaseState& state);

/// Removes one undoable soft application: rebuilds the instance from the
/// input facts plus the remaining soft applications and recomputes the hard
/// closure. Throws std::invalid_argument if the application is not undoable.
void undo_application(ChaseState& state, const CompiledProgram& cp, int app_id,
                      const ChaseConfig& config = {});

}  // namespace softchase
