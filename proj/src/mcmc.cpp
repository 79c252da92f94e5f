#include "softchase/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace softchase {

int Rng::poisson(double lambda) {
  // Inversion by sequential search; fine for small means.
  double p = std::exp(-lambda);
  double cum = p;
  double u = uniform();
  int k = 0;
  while (u > cum && k < 10000) {
    ++k;
    p *= lambda / k;
    cum += p;
  }
  return k;
}

int SampledGraph::add_node(const ChaseState& state) {
  std::string key = state.instance.canonical_key();
  auto it = index.find(key);
  if (it != index.end()) return it->second;
  int id = static_cast<int>(keys.size());
  keys.push_back(key);
  index.emplace(key, id);
  in_edges.emplace_back();
  std::vector<std::uint64_t> hashes;
  for (const std::string& pred : state.instance.predicates()) {
    for (const Fact& f : state.instance.facts(pred)) {
      std::uint64_t h = fnv1a64(state.instance.fact_key(f));
      hashes.push_back(h);
      if (!fact_dict.count(h)) fact_dict.emplace(h, to_portable(f, state.instance));
    }
  }
  std::sort(hashes.begin(), hashes.end());
  node_facts.push_back(std::move(hashes));
  pi_valid_.assign(keys.size(), false);
  return id;
}

void SampledGraph::add_edge(int from, int to, int rule_id,
                            const std::string& memo_key, double label) {
  std::string sig = keys[from] + "|" + memo_key;
  if (!edge_sigs.insert(sig).second) return;
  in_edges[to].emplace_back(from, label);
  edge_list.emplace_back(from, to, rule_id);
  pi_valid_.assign(keys.size(), false);
}

double SampledGraph::pi_weight(int node) const {
  if (pi_cache_.size() < keys.size()) pi_cache_.resize(keys.size(), 0.0);
  if (pi_valid_.size() < keys.size()) pi_valid_.resize(keys.size(), false);
  if (pi_valid_[node]) return pi_cache_[node];
  // Reverse reachability from the node; every in-edge of an ancestor lies on
  // some root-to-node path, so its label counts once.
  std::vector<int> stack{node};
  std::vector<bool> seen(keys.size(), false);
  seen[node] = true;
  double sum = 0.0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (const auto& [from, label] : in_edges[v]) {
      sum += label;
      if (!seen[from]) {
        seen[from] = true;
        stack.push_back(from);
      }
    }
  }
  pi_cache_[node] = sum;
  pi_valid_[node] = true;
  return sum;
}

McmcResult mcmc_chase(const Instance& edb, const CompiledProgram& cp,
                      const McmcConfig& config) {
  Rng rng(config.seed);
  ChaseConfig chase_config;
  chase_config.step_budget = config.step_budget;

  McmcResult result;
  ChaseState current = make_state(edb);
  close_under_hard_rules(current, cp, chase_config);
  double current_traj = 0.0;
  int current_node = result.graph.add_node(current);

  // Soft rule ids in program order; selection draws one uniform per rule.
  std::vector<int> soft_ids;
  for (int idx : cp.soft_rules) soft_ids.push_back(cp.program.rules[idx].id);

  auto selected = [&](double w) {
    double mu = rng.uniform();
    if (w > 0) return mu < 1.0 - std::exp(-w);
    if (w < 0) return mu > 1.0 - std::exp(w);
    return false;
  };

  std::size_t accepted_count = 0;
  for (std::size_t n = 1; n <= config.iterations; ++n) {
    ChaseState proposal = current;
    double proposal_traj = current_traj;
    int proposal_node = current_node;
    int steps = rng.poisson(config.lambda);

    for (int s = 0; s < steps; ++s) {
      bool backward = rng.uniform() < config.backward_probability;
      if (!backward) {
        for (int rid : soft_ids) {
          const Rule& rule = cp.rule_by_id(rid);
          if (!selected(rule.weight)) continue;
          auto cands = applicable_unifiers(proposal, cp, rid);
          std::erase_if(cands,
                        [](const CandidateApplication& c) { return !c.adds_fact; });
          if (cands.empty()) continue;
          const CandidateApplication cand = cands[rng.index(cands.size())];
          apply_chase_step(proposal, cp, cand);
          close_under_hard_rules(proposal, cp, chase_config);
          proposal_traj += rule.weight;
          int to = result.graph.add_node(proposal);
          result.graph.add_edge(proposal_node, to, rid, cand.memo_key, rule.weight);
          proposal_node = to;
        }
      } else {
        std::vector<int> undoable = undoable_applications(proposal);
        for (int rid : soft_ids) {
          const Rule& rule = cp.rule_by_id(rid);
          if (!selected(rule.weight)) continue;
          std::vector<int> of_rule;
          for (int aid : undoable)
            if (proposal.apps[aid].rule_id == rid) of_rule.push_back(aid);
          if (of_rule.empty()) continue;
          int aid = of_rule[rng.index(of_rule.size())];
          std::string memo = proposal.apps[aid].memo_key;
          undo_application(proposal, cp, aid, chase_config);
          proposal_traj -= rule.weight;
          int from = result.graph.add_node(proposal);
          result.graph.add_edge(from, proposal_node, rid, memo, rule.weight);
          proposal_node = from;
          undoable = undoable_applications(proposal);
        }
      }
    }

    double alpha = std::exp(result.graph.pi_weight(proposal_node) -
                            result.graph.pi_weight(current_node));
    if (rng.uniform() < std::min(1.0, alpha)) {
      current = std::move(proposal);
      current_traj = proposal_traj;
      current_node = proposal_node;
      ++accepted_count;
      result.samples.push_back({n, result.graph.keys[current_node], current_traj,
                                current.instance.size()});
    }
    ++result.occupancy[result.graph.keys[current_node]];
    result.weight_trace.push_back(current_traj);
  }

  result.acceptance_rate =
      static_cast<double>(accepted_count) / static_cast<double>(config.iterations);
  result.distinct_nodes = result.occupancy.size();
  return result;
}

std::vector<std::pair<Fact, double>> estimate_marginals(const McmcResult& result,
                                                        const std::string& predicate) {
  if (result.occupancy.empty())
    throw std::runtime_error("no samples: run the chain before estimating marginals");

  // Renormalize the exact node weights over the visited worlds.
  std::vector<int> nodes;
  std::vector<double> weights;
  double max_w = -std::numeric_limits<double>::infinity();
  for (const auto& [key, count] : result.occupancy) {
    int id = result.graph.index.at(key);
    nodes.push_back(id);
    weights.push_back(result.graph.pi_weight(id));
    max_w = std::max(max_w, weights.back());
  }
  double z = 0.0;
  for (double& w : weights) {
    w = std::exp(w - max_w);
    z += w;
  }

  std::map<std::string, std::pair<std::uint64_t, double>> by_key;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double p = weights[i] / z;
    for (std::uint64_t h : result.graph.node_facts[nodes[i]]) {
      const PFact& pf = result.graph.fact_dict.at(h);
      if (!predicate.empty() && pf.predicate != predicate) continue;
      auto [it, fresh] = by_key.emplace(pf.predicate + "#" + std::to_string(h),
                                        std::make_pair(h, 0.0));
      it->second.second += p;
    }
  }

  Instance display;
  std::vector<std::pair<Fact, double>> out;
  for (auto& [key, hp] : by_key)
    out.emplace_back(from_portable(result.graph.fact_dict.at(hp.first), display),
                     hp.second);
  return out;
}

}  // namespace softchase
