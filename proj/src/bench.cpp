#include "softchase/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include "softchase/mcmc.hpp"
#include "softchase/network.hpp"
#include "softchase/parser.hpp"

namespace softchase {

ScaleFreeParams base_params() { return {0.71, 0.09, 0.2}; }
ScaleFreeParams dense_params() { return {0.51, 0.34, 0.15}; }
ScaleFreeParams super_dense_params() { return {0.51, 0.44, 0.05}; }

void validate_params(const ScaleFreeParams& p) {
  if (std::fabs(p.alpha + p.beta + p.gamma - 1.0) > 1e-9)
    throw std::invalid_argument("alpha + beta + gamma must sum to 1");
  for (double v : {p.alpha, p.beta, p.gamma})
    if (!(v > 0.0 && v < 1.0))
      throw std::invalid_argument("alpha, beta, gamma must lie in (0, 1)");
  if (p.nodes < 2) throw std::invalid_argument("need at least 2 nodes");
  if (p.corruption_rate < 0.0 || p.corruption_rate > 1.0)
    throw std::invalid_argument("corruption rate must lie in [0, 1]");
}

GeneratedGraph gen_scale_free(const ScaleFreeParams& p, std::uint64_t seed) {
  validate_params(p);
  Rng rng(seed);
  std::size_t n = 2;  // seed graph: one edge
  std::vector<std::size_t> in_ends{1}, out_ends{0};  // edge endpoints, for
                                                     // degree-preferential picks
  std::set<std::pair<std::size_t, std::size_t>> edges{{0, 1}};

  auto pick_in = [&]() {  // in-degree preferential with +1 smoothing
    std::size_t r = rng.index(in_ends.size() + n);
    return r < in_ends.size() ? in_ends[r] : rng.index(n);
  };
  auto pick_out = [&]() {
    std::size_t r = rng.index(out_ends.size() + n);
    return r < out_ends.size() ? out_ends[r] : rng.index(n);
  };
  auto add_edge = [&](std::size_t from, std::size_t to) {
    if (from == to || !edges.emplace(from, to).second) return;
    out_ends.push_back(from);
    in_ends.push_back(to);
  };

  while (n < p.nodes) {
    double u = rng.uniform();
    if (u < p.alpha) {
      std::size_t v = n++;
      add_edge(v, pick_in());
    } else if (u < p.alpha + p.beta) {
      add_edge(pick_out(), pick_in());
    } else {
      add_edge(pick_in(), pick_out());
    }
  }

  GeneratedGraph g;
  g.nodes = n;
  g.edges = edges.size();
  for (std::size_t i = 0; i < n; ++i) {
    Fact f;
    f.predicate = "company";
    f.terms.push_back(Term::constant("c" + std::to_string(i)));
    g.facts.insert(f);
  }
  for (const auto& [from, to] : edges) {
    double share = 1.0 - rng.uniform();  // (0, 1]
    if (rng.uniform() < p.corruption_rate)
      share = rng.uniform() < 0.5 ? share + 1.0 : -share;  // invalid share
    Fact f;
    f.predicate = "inputown";
    f.terms.push_back(Term::constant("c" + std::to_string(from)));
    f.terms.push_back(Term::constant("c" + std::to_string(to)));
    f.terms.push_back(Term::number(share));
    g.facts.insert(f);
  }
  return g;
}

const std::map<std::string, std::string>& builtin_programs() {
  static const std::map<std::string, std::string> programs = {
      {"running-example",
       "% Financial contracts and guarantees.\n"
       "0.9 :: lendertype(X,Y), regulatoryrestriction(Y,Z) -> exists V: guarantee(X,Z,V).\n"
       "0.8 :: lendertype(X,Y), lenderclass(Y,Z) -> lendertype(X,Z).\n"
       "0.7 :: contract(X,Y,Z), exposure(Y,W) -> contract(Z,W,X).\n"
       "contract(X,Y,Z), regulatoryrestriction(W,Y) -> lendertype(X,W).\n"},
      {"mother",
       "% Everyone has a mother, who is a person too.\n"
       "person(X) -> exists Y: hasmother(X,Y).\n"
       "hasmother(X,Y) -> person(Y).\n"},
      {"record-linkage",
       "% Matching company records across sources.\n"
       "0.5 :: company(X), industry(X,Z), company(Y), industry(Y,Z) -> match(X,Y).\n"
       "0.3 :: company(X), size(X,Z), company(Y), size(Y,W), samesize(Z,W) -> match(X,Y).\n"
       "0.9 :: company(X), company(Y), size(X,Z), size(Y,W), |Z - W| < 10 -> samesize(Z,W).\n"
       "company(X) -> exists Z: group(X,Z).\n"
       "company(X), company(Y), subsidiary(X,Y), group(Y,Z) -> group(X,Z).\n"
       "0.7 :: company(X), company(Y), group(X,Z), group(Y,Z), industry(X,W), industry(Y,W) -> samesize(X,Y).\n"},
      {"data-fusion",
       "% Conflict resolution across copying sources. Accuracies and copy\n"
       "% likelihoods below are illustrative demo values.\n"
       "0.8 :: accuracy(a, income).\n"
       "0.6 :: accuracy(b, income).\n"
       "0.7 :: accuracy(c, income).\n"
       "0.4 :: copies(b, a, income).\n"
       "0.3 :: copies(c, b, income).\n"
       "copies(S,U,F) -> doescopy(S,F).\n"
       "vote(S,C,F,V), not doescopy(S,F), accuracy(S,F) -> value(C,F,V).\n"
       "copies(X,Z,F), copies(Z,Y,F) -> copies(X,Y,F).\n"},
      {"company-control",
       "% Company control with unreliable ownership data.\n"
       "0.9 :: inputown(X,Y,S), 0 < S < 1 -> own(X,Y,S).\n"
       "0.1 :: inputown(X,Y,S), (S < 0 or S > 1) -> exists Z: own(X,Y,Z), unreliable(X,Y).\n"
       "own(X,Y,S), not unreliable(X,Y), S > 0.5 -> control(X,Y).\n"
       "0.5 :: own(X,Y,S), unreliable(X,Y) -> control(X,Y).\n"
       "control(X,Y), own(Y,Z,S), not unreliable(Y,Z), V = sum(S), V > 0.5 -> control(X,Z).\n"
       "0.3 :: control(X,Y), own(Y,Z,S), unreliable(Y,Z) -> control(X,Z).\n"
       "company(X) -> control(X,X).\n"},
      {"pp2dnf",
       "% Two-level boolean reachability; the marginal of q() counts\n"
       "% satisfying assignments.\n"
       "0 :: r(X) -> rp(X).\n"
       "0 :: t(X) -> tp(X).\n"
       "rp(X), s(X,Y), tp(Y) -> q().\n"},
  };
  return programs;
}

std::string builtin_facts(const std::string& name) {
  if (name == "running-example")
    return "contract(a,b,c).\nexposure(b,l).\nregulatoryrestriction(m,l).\nlenderclass(m,n).\n";
  if (name == "mother") return "person(alice).\n";
  if (name == "record-linkage")
    return "company(acme).\ncompany(acmecorp).\ncompany(globex).\n"
           "industry(acme, steel).\nindustry(acmecorp, steel).\nindustry(globex, retail).\n"
           "size(acme, 45).\nsize(acmecorp, 50).\nsize(globex, 200).\n"
           "subsidiary(globex, acme).\n";
  if (name == "data-fusion")
    return "vote(a, acme, income, 100).\nvote(b, acme, income, 120).\n"
           "vote(c, acme, income, 100).\n";
  if (name == "company-control")
    return "company(c0).\ncompany(c1).\ncompany(c2).\n"
           "inputown(c0, c1, 0.6).\ninputown(c1, c2, 0.55).\ninputown(c0, c2, 1.2).\n";
  if (name == "pp2dnf")
    return "r(x1).\nr(x2).\nt(y1).\nt(y2).\ns(x1, y1).\ns(x2, y2).\n";
  throw std::invalid_argument("unknown builtin program: " + name);
}

Instance gen_boolean_instance(int nr, int nt, double edge_prob, std::uint64_t seed) {
  Rng rng(seed);
  Instance inst;
  auto unary = [&](const std::string& pred, const std::string& c) {
    Fact f;
    f.predicate = pred;
    f.terms.push_back(Term::constant(c));
    inst.insert(f);
  };
  for (int i = 0; i < nr; ++i) unary("r", "x" + std::to_string(i));
  for (int j = 0; j < nt; ++j) unary("t", "y" + std::to_string(j));
  bool any = false;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nt; ++j)
      if (rng.uniform() < edge_prob) {
        Fact f;
        f.predicate = "s";
        f.terms.push_back(Term::constant("x" + std::to_string(i)));
        f.terms.push_back(Term::constant("y" + std::to_string(j)));
        inst.insert(f);
        any = true;
      }
  if (!any && nr > 0 && nt > 0) {
    Fact f;
    f.predicate = "s";
    f.terms.push_back(Term::constant("x0"));
    f.terms.push_back(Term::constant("y0"));
    inst.insert(f);
  }
  return inst;
}

std::string EvalReport::csv() const {
  std::string out =
      "name,edb_facts,iterations,network_nodes,exact,seconds,error_percent\n";
  char buf[256];
  for (const EvalRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%zu,%s,%.3f,%.4f\n", r.name.c_str(),
                  r.edb_facts, r.iterations, r.network_nodes,
                  r.exact_available ? "yes" : "no", r.seconds,
                  r.exact_available ? r.error_percent : 0.0);
    out += buf;
  }
  return out;
}

std::string EvalReport::table() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-28s %10s %10s %8s %6s %8s %8s\n", "name",
                "edb_facts", "iters", "nodes", "exact", "sec", "err%");
  out += buf;
  for (const EvalRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-28s %10zu %10zu %8zu %6s %8.3f %8.4f\n",
                  r.name.c_str(), r.edb_facts, r.iterations, r.network_nodes,
                  r.exact_available ? "yes" : "no", r.seconds,
                  r.exact_available ? r.error_percent : 0.0);
    out += buf;
  }
  return out;
}

namespace {

EvalRow run_one(const std::string& name, const std::string& program_text,
                const Instance& edb, const EvalOptions& options) {
  EvalRow row;
  row.name = name;
  row.edb_facts = edb.size();
  row.iterations = options.iterations;

  CompiledProgram cp = compile(parse_program(program_text));

  auto t0 = std::chrono::steady_clock::now();
  McmcConfig mc;
  mc.iterations = options.iterations;
  mc.seed = options.seed;
  McmcResult result = mcmc_chase(edb, cp, mc);
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();

  if (!options.skip_exact) {
    try {
      ChaseConfig config;
      ChaseNetwork net = ground_chase_network(edb, cp, options.exact_budget, config);
      row.network_nodes = net.nodes.size();
      row.exact_available = true;

      // Compare marginals by fact-key hash, the identity both sides share.
      std::map<std::uint64_t, double> exact;
      for (std::size_t i = 0; i < net.nodes.size(); ++i)
        for (const std::string& key : net.nodes[i].instance.sorted_fact_keys())
          exact[fnv1a64(key)] += net.probs[i];

      std::map<std::uint64_t, double> est;
      {
        std::vector<int> nodes;
        std::vector<double> w;
        double max_w = -1e300;
        for (const auto& [key, cnt] : result.occupancy) {
          nodes.push_back(result.graph.index.at(key));
          w.push_back(result.graph.pi_weight(nodes.back()));
          max_w = std::max(max_w, w.back());
        }
        double z = 0;
        for (double& v : w) {
          v = std::exp(v - max_w);
          z += v;
        }
        for (std::size_t i = 0; i < nodes.size(); ++i)
          for (std::uint64_t h : result.graph.node_facts[nodes[i]])
            est[h] += w[i] / z;
      }

      double total = 0.0;
      std::size_t count = 0;
      for (const auto& [h, p] : exact) {
        auto it = est.find(h);
        total += std::fabs(p - (it == est.end() ? 0.0 : it->second));
        ++count;
      }
      for (const auto& [h, p] : est)
        if (!exact.count(h)) {
          total += p;
          ++count;
        }
      row.error_percent = count ? 100.0 * total / static_cast<double>(count) : 0.0;
    } catch (const NetworkBudgetError&) {
      row.exact_available = false;
    }
  }
  return row;
}

}  // namespace

EvalReport evaluate(const EvalOptions& options) {
  struct Task {
    std::string name;
    std::string text;
    Instance edb;
  };
  std::vector<Task> tasks;
  for (const std::string& name : options.programs) {
    const std::string& text = builtin_programs().at(name);
    if (name == "company-control") {
      for (std::size_t size : options.sizes) {
        ScaleFreeParams p = base_params();
        p.nodes = size;
        p.corruption_rate = 0.2;
        GeneratedGraph g = gen_scale_free(p, options.seed);
        tasks.push_back({name + "-n" + std::to_string(size), text, g.facts});
      }
    } else {
      tasks.push_back({name, text, parse_facts(builtin_facts(name))});
    }
  }

  EvalReport report;
  report.rows.resize(tasks.size());
  std::size_t jobs = std::max<std::size_t>(1, options.jobs);
  if (jobs == 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      report.rows[i] = run_one(tasks[i].name, tasks[i].text, tasks[i].edb, options);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < std::min(jobs, tasks.size()); ++t)
      workers.emplace_back([&]() {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          try {
            report.rows[i] =
                run_one(tasks[i].name, tasks[i].text, tasks[i].edb, options);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    for (std::thread& w : workers) w.join();
    if (error) std::rethrow_exception(error);
  }
  return report;
}

}  // namespace softchase
