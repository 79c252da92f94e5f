#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "softchase/model.hpp"

namespace softchase {

/// Directed scale-free graph parameters: alpha adds a new node wired to an
/// existing one, beta and gamma add edges between existing nodes chosen
/// preferentially by out- and in-degree. alpha + beta + gamma must be 1.
struct ScaleFreeParams {
  double alpha = 0.71;
  double beta = 0.09;
  double gamma = 0.2;
  std::size_t nodes = 100;
  double corruption_rate = 0.0;  // fraction of shares drawn outside (0,1)
};

ScaleFreeParams base_params();
ScaleFreeParams dense_params();
ScaleFreeParams super_dense_params();

void validate_params(const ScaleFreeParams& p);  // throws std::invalid_argument

struct GeneratedGraph {
  Instance facts;  // company/1 and inputown/3
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

GeneratedGraph gen_scale_free(const ScaleFreeParams& p, std::uint64_t seed);

/// Built-in demo programs by name: running-example, mother, record-linkage,
/// data-fusion, company-control, pp2dnf.
const std::map<std::string, std::string>& builtin_programs();

/// Demo facts for a built-in program (empty when the program generates or
/// embeds its own data).
std::string builtin_facts(const std::string& name);

/// Random instance for the two-level boolean program: nr facts r(..), nt
/// facts t(..), and s-edges drawn independently with the given probability.
Instance gen_boolean_instance(int nr, int nt, double edge_prob, std::uint64_t seed);

struct EvalRow {
  std::string name;
  std::size_t edb_facts = 0;
  std::size_t iterations = 0;
  std::size_t network_nodes = 0;  // 0 when exact grounding was skipped
  bool exact_available = false;
  double seconds = 0.0;
  double error_percent = 0.0;  // mean |exact - estimated| * 100
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string csv() const;
  std::string table() const;
};

struct EvalOptions {
  std::vector<std::string> programs;  // builtin names; company-control uses sizes
  std::vector<std::size_t> sizes = {20};
  std::size_t iterations = 2000;
  std::uint64_t seed = 1;
  bool skip_exact = false;
  std::size_t exact_budget = 20000;  // node budget before falling back
  std::size_t jobs = 1;              // parallel workers across rows
};

/// Runs each program with the MCMC sampler and, budget permitting, the exact
/// grounding, reporting timing and estimation error.
EvalReport evaluate(const EvalOptions& options);

}  // namespace softchase
