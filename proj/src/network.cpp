#include "softchase/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <unordered_map>

namespace softchase {

namespace {

// Topological order: fact counts strictly increase along edges.
std::vector<int> topo_order(const ChaseNetwork& net) {
  std::vector<int> order(net.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    std::size_t sa = net.nodes[a].instance.size(), sb = net.nodes[b].instance.size();
    if (sa != sb) return sa < sb;
    return net.keys[a] < net.keys[b];
  });
  return order;
}

void compute_weights(ChaseNetwork& net) {
  std::size_t n = net.nodes.size();
  std::vector<double> inlabel(n, 0.0);
  for (const NetworkEdge& e : net.edges) inlabel[e.to] += e.label;

  // Ancestor bitsets accumulated in topological order. A world's weight is
  // the sum, over itself and its ancestors, of incoming edge labels: every
  // edge into an ancestor lies on some path from the root.
  std::size_t words = (n + 63) / 64;
  std::vector<std::vector<std::uint64_t>> anc(n, std::vector<std::uint64_t>(words, 0));
  net.weights.assign(n, 0.0);
  for (int v : topo_order(net)) {
    anc[v][v / 64] |= 1ull << (v % 64);
    for (int ei : net.in_edges[v]) {
      const auto& from = anc[net.edges[ei].from];
      for (std::size_t w = 0; w < words; ++w) anc[v][w] |= from[w];
    }
    double sum = 0.0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t bits = anc[v][w];
      while (bits) {
        int b = std::countr_zero(bits);
        bits &= bits - 1;
        sum += inlabel[w * 64 + b];
      }
    }
    net.weights[v] = sum;
  }

  double max_w = *std::max_element(net.weights.begin(), net.weights.end());
  net.probs.assign(n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    net.probs[i] = std::exp(net.weights[i] - max_w);
    z += net.probs[i];
  }
  for (double& p : net.probs) p /= z;
}

}  // namespace

ChaseNetwork ground_chase_network(const Instance& edb, const CompiledProgram& cp,
                                  std::size_t max_nodes, const ChaseConfig& config) {
  ChaseNetwork net;
  ChaseState root = make_state(edb);
  close_under_hard_rules(root, cp, config);
  net.nodes.push_back(std::move(root));
  net.keys.push_back(net.nodes[0].instance.canonical_key());
  std::unordered_map<std::string, int> index{{net.keys[0], 0}};

  std::deque<int> queue{0};
  while (!queue.empty()) {
    int at = queue.front();
    queue.pop_front();
    // Candidates are re-enumerated from a copy of the node because applying
    // one consumes the state.
    std::vector<CandidateApplication> cands = soft_candidates(net.nodes[at], cp);
    for (const CandidateApplication& cand : cands) {
      ChaseState next = net.nodes[at];
      apply_chase_step(next, cp, cand);
      close_under_hard_rules(next, cp, config);
      std::string key = next.instance.canonical_key();
      int to;
      auto it = index.find(key);
      if (it != index.end()) {
        to = it->second;
      } else {
        to = static_cast<int>(net.nodes.size());
        if (net.nodes.size() >= max_nodes)
          throw NetworkBudgetError(net.nodes.size() + 1, max_nodes);
        net.nodes.push_back(std::move(next));
        net.keys.push_back(key);
        index.emplace(key, to);
        queue.push_back(to);
      }
      const Rule& rule = cp.rule_by_id(cand.rule_id);
      net.edges.push_back(
          {at, to, cand.rule_id, cand.memo_key, rule.weight});
    }
  }

  net.in_edges.assign(net.nodes.size(), {});
  for (std::size_t i = 0; i < net.edges.size(); ++i)
    net.in_edges[net.edges[i].to].push_back(static_cast<int>(i));
  compute_weights(net);
  return net;
}

double marginal_probability(const ChaseNetwork& net, const Fact& fact) {
  for (const Term& t : fact.terms)
    if (t.is_null())
      throw std::invalid_argument(
          "marginal_probability expects a constant fact; query facts with "
          "nulls via network_marginals");
  double p = 0.0;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Instance& inst = net.nodes[i].instance;
    if (inst.contains(fact)) p += net.probs[i];
  }
  return p;
}

std::vector<std::pair<Fact, double>> network_marginals(const ChaseNetwork& net,
                                                       const std::string& predicate) {
  // Collect every fact key once with a representative, then sum node
  // probabilities per key. Representatives are re-minted into one shared
  // instance so null ids are consistent across worlds.
  std::map<std::string, std::pair<PFact, double>> by_key;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Instance& inst = net.nodes[i].instance;
    for (const std::string& pred : inst.predicates()) {
      if (!predicate.empty() && pred != predicate) continue;
      for (const Fact& f : inst.facts(pred)) {
        std::string key = inst.fact_key(f);
        auto it = by_key.find(key);
        if (it == by_key.end())
          by_key.emplace(key, std::make_pair(to_portable(f, inst), net.probs[i]));
        else
          it->second.second += net.probs[i];
      }
    }
  }
  Instance display;
  std::vector<std::pair<Fact, double>> out;
  for (auto& [key, rep] : by_key)
    out.emplace_back(from_portable(rep.first, display), rep.second);
  return out;
}

std::string describe_network(const ChaseNetwork& net, const CompiledProgram& cp) {
  std::string out;
  char buf[128];
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "world %zu  weight=%.6f  prob=%.6f  facts=%zu\n",
                  i, net.weights[i], net.probs[i], net.nodes[i].instance.size());
    out += buf;
    for (const std::string& key : net.nodes[i].instance.sorted_fact_keys())
      out += "  " + key + "\n";
  }
  for (const NetworkEdge& e : net.edges) {
    const Rule& rule = cp.rule_by_id(e.rule_id);
    std::snprintf(buf, sizeof(buf), "edge %d -> %d  label=%.6f  rule=%d\n", e.from,
                  e.to, rule.weight, e.rule_id);
    out += buf;
  }
  return out;
}

}  // namespace softchase
