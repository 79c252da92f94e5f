#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "softchase/chase.hpp"

namespace softchase {

/// Deterministic RNG with hand-rolled draws, so runs with the same seed are
/// byte-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next() { return eng_(); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }  // [0,1)
  int poisson(double lambda);
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

 private:
  std::mt19937_64 eng_;
};

struct McmcConfig {
  std::size_t iterations = 10000;
  double lambda = 5.0;           // Poisson mean of inner steps per proposal
  std::uint64_t seed = 1;
  double backward_probability = 0.5;
  std::size_t step_budget = 1'000'000;
};

/// The worlds and transitions the sampler has discovered. A subgraph of the
/// exact chase network; node weights computed over it converge to the exact
/// ones as exploration completes.
struct SampledGraph {
  std::vector<std::string> keys;
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<std::pair<int, double>>> in_edges;  // to -> (from, label)
  std::vector<std::tuple<int, int, int>> edge_list;           // (from, to, rule id)
  std::unordered_set<std::string> edge_sigs;
  std::vector<std::vector<std::uint64_t>> node_facts;  // sorted fact-key hashes
  std::unordered_map<std::uint64_t, PFact> fact_dict;

  int add_node(const ChaseState& state);
  void add_edge(int from, int to, int rule_id, const std::string& memo_key,
                double label);
  /// Path-sum weight of a node over the discovered subgraph.
  double pi_weight(int node) const;

 private:
  mutable std::vector<double> pi_cache_;
  mutable std::vector<bool> pi_valid_;
};

struct AcceptedSample {
  std::size_t iteration = 0;
  std::string node_key;
  double trajectory_weight = 0.0;  // running sum of applied-minus-undone weights
  std::size_t fact_count = 0;
};

struct McmcResult {
  SampledGraph graph;
  std::map<std::string, std::size_t> occupancy;  // node key -> iterations spent
  std::vector<AcceptedSample> samples;           // accepted proposals
  std::vector<double> weight_trace;              // trajectory weight per iteration
  double acceptance_rate = 0.0;
  std::size_t distinct_nodes = 0;
};

/// Metropolis-Hastings over worlds: each proposal performs a Poisson number
/// of forward (apply a randomly selected soft rule with a random match, then
/// close) or backward (undo a random undoable application of a selected
/// rule) steps, and is accepted by the path-sum weight ratio.
McmcResult mcmc_chase(const Instance& edb, const CompiledProgram& cp,
                      const McmcConfig& config = {});

/// Marginals from the visited worlds, renormalized over them. Facts share a
/// single null namespace. Throws std::runtime_error if nothing was sampled.
std::vector<std::pair<Fact, double>> estimate_marginals(const McmcResult& result,
                                                        const std::string& predicate);

}  // namespace softchase
