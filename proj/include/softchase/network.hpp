#pragma once

#include <string>
#include <vector>

#include "softchase/chase.hpp"

namespace softchase {

class NetworkBudgetError : public std::runtime_error {
 public:
  NetworkBudgetError(std::size_t discovered, std::size_t budget)
      : std::runtime_error("chase network exceeds node budget of " +
                           std::to_string(budget) + " (discovered " +
                           std::to_string(discovered) + " so far)"),
        nodes_discovered(discovered) {}
  std::size_t nodes_discovered;
};

/// One transition: a soft rule fired with one unifier, followed by the hard
/// closure. Parallel edges with distinct matches are kept apart.
struct NetworkEdge {
  int from = 0;
  int to = 0;
  int rule_id = 0;
  std::string memo_key;
  double label = 0.0;  // the soft rule's weight
};

/// The exact grounding: every world reachable from the closed input instance
/// by soft transitions, with its weight and probability.
struct ChaseNetwork {
  std::vector<ChaseState> nodes;  // node 0 is the closed input instance
  std::vector<std::string> keys;  // canonical instance keys
  std::vector<NetworkEdge> edges;
  std::vector<std::vector<int>> in_edges;  // node -> incoming edge indices
  std::vector<double> weights;             // path-sum weight per node
  std::vector<double> probs;               // normalized exp weights
};

ChaseNetwork ground_chase_network(const Instance& edb, const CompiledProgram& cp,
                                  std::size_t max_nodes = 100000,
                                  const ChaseConfig& config = {});

/// Probability that a ground fact holds: the total probability of the worlds
/// containing it.
double marginal_probability(const ChaseNetwork& net, const Fact& fact);

/// Marginals of every fact of the given predicate (all predicates if empty).
/// Returned facts share one null namespace so they serialize consistently.
std::vector<std::pair<Fact, double>> network_marginals(const ChaseNetwork& net,
                                                       const std::string& predicate);

/// Human-readable dump: worlds with weights and probabilities, transitions
/// with labels.
std::string describe_network(const ChaseNetwork& net, const CompiledProgram& cp);

}  // namespace softchase
