#pragma once

#include <string>
#include <vector>

#include "softchase/model.hpp"

namespace softchase {

struct Diagnostic {
  std::string code;
  SourceSpan span;
  std::string message;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diags)
      : std::runtime_error(diags.empty() ? "parse error" : diags.front().message),
        diagnostics(std::move(diags)) {}
  std::vector<Diagnostic> diagnostics;
};

/// Parses weighted-rule program text (.svdlg). Throws ParseError with spans.
Program parse_program(const std::string& text);

enum class FactFormat { DatalogFacts, CsvPerPredicate };

/// Parses a fact file into an instance of ground facts. Datalog format is
/// "pred(a, 0.6)." lines; CSV format starts with a "predicate:arity" header.
Instance parse_facts(const std::string& text, FactFormat format = FactFormat::DatalogFacts);

enum class AnswerFormat { Tsv, Csv };

/// Serializes (fact, probability) pairs deterministically: sorted by
/// predicate then canonical terms, nulls displayed as _:n0, _:n1 in first-
/// appearance order, probabilities with 6 decimal places.
std::string serialize_answer(const std::vector<std::pair<Fact, double>>& answer,
                             AnswerFormat format = AnswerFormat::Tsv);

/// Prints an instance's facts in the same canonical order and null display.
std::string serialize_facts(const std::vector<Fact>& facts);

struct ConjunctiveQuery {
  bool atomic = false;
  std::string predicate;           // atomic case
  std::string head_pred;           // CQ case
  std::vector<std::string> head_vars;
  std::vector<BodyLiteral> body;
};

/// Parses a query: either a bare predicate name, "pred(X,Y)" with distinct
/// variables (atomic), or "q(X) :- a(X,Y), b(Y,X)".
ConjunctiveQuery parse_query(const std::string& text);

}  // namespace softchase
