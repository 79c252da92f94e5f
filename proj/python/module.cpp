#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "softchase/analysis.hpp"
#include "softchase/bench.hpp"
#include "softchase/chase.hpp"
#include "softchase/mcmc.hpp"
#include "softchase/network.hpp"
#include "softchase/parser.hpp"

namespace py = pybind11;
using namespace softchase;

namespace {

// Resolves an optional query against a program; returns the effective
// compiled program and the predicate holding the answers.
std::pair<CompiledProgram, std::string> prepare(const std::string& program_text,
                                                const std::string& query) {
  Program program = parse_program(program_text);
  if (query.empty()) return {compile(program), ""};
  ConjunctiveQuery q = parse_query(query);
  RewrittenQuery rw = rewrite_query(program, q);
  if (!rw.report.ok) throw AnalysisError(rw.report.violations);
  return {compile(rw.program), rw.answer_predicate};
}

Instance facts_from_text(const std::string& text) {
  if (text.find(':') != std::string::npos &&
      text.find("(") == std::string::npos)
    return parse_facts(text, FactFormat::CsvPerPredicate);
  return parse_facts(text, FactFormat::DatalogFacts);
}

py::list violations_to_py(const std::vector<Violation>& violations) {
  py::list out;
  for (const Violation& v : violations) {
    py::dict d;
    d["code"] = v.code;
    d["rule"] = v.rule_id;
    d["message"] = v.message;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "probabilistic reasoning over weighted existential rules";

  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<AnalysisError>(m, "AnalysisError");
  py::register_exception<NetworkBudgetError>(m, "BudgetError");

  m.def(
      "check_program",
      [](const std::string& text, bool relax_aggregates) {
        Program program = parse_program(text);
        AnalysisReport report = analyze(program, relax_aggregates);
        py::dict out;
        out["ok"] = report.ok;
        out["violations"] = violations_to_py(report.violations);
        out["strata"] = report.strat.stratum;
        return out;
      },
      py::arg("program"), py::arg("relax_aggregates") = false,
      "Static analysis: wardedness, stratification, weight checks.");

  m.def(
      "run_chase",
      [](const std::string& program_text, const std::string& facts_text) {
        CompiledProgram cp = compile(parse_program(program_text));
        ChaseState state = make_state(facts_from_text(facts_text));
        warded_chase(state, cp);
        return serialize_facts(state.instance.all_facts());
      },
      py::arg("program"), py::arg("facts") = "",
      "Terminating chase; returns the derived facts as text.");

  m.def(
      "ground",
      [](const std::string& program_text, const std::string& facts_text,
         std::size_t budget) {
        CompiledProgram cp = compile(parse_program(program_text));
        ChaseNetwork net =
            ground_chase_network(facts_from_text(facts_text), cp, budget);
        py::dict out;
        out["worlds"] = net.nodes.size();
        out["transitions"] = net.edges.size();
        out["weights"] = net.weights;
        out["probabilities"] = net.probs;
        out["description"] = describe_network(net, cp);
        return out;
      },
      py::arg("program"), py::arg("facts") = "", py::arg("budget") = 100000,
      "Exact grounding; returns world weights and probabilities.");

  m.def(
      "infer_exact",
      [](const std::string& program_text, const std::string& facts_text,
         const std::string& query, std::size_t budget) {
        auto [cp, pred] = prepare(program_text, query);
        ChaseNetwork net = ground_chase_network(facts_from_text(facts_text), cp, budget);
        return serialize_answer(network_marginals(net, pred));
      },
      py::arg("program"), py::arg("facts") = "", py::arg("query") = "",
      py::arg("budget") = 100000,
      "Exact marginal probabilities, serialized as fact/probability lines.");

  m.def(
      "infer_mcmc",
      [](const std::string& program_text, const std::string& facts_text,
         const std::string& query, std::size_t iterations, double lambda,
         std::uint64_t seed) {
        auto [cp, pred] = prepare(program_text, query);
        McmcConfig mc;
        mc.iterations = iterations;
        mc.lambda = lambda;
        mc.seed = seed;
        McmcResult result = mcmc_chase(facts_from_text(facts_text), cp, mc);
        return serialize_answer(estimate_marginals(result, pred));
      },
      py::arg("program"), py::arg("facts") = "", py::arg("query") = "",
      py::arg("iterations") = 10000, py::arg("lam") = 5.0, py::arg("seed") = 1,
      "Sampled marginal probabilities.");

  m.def(
      "sample",
      [](const std::string& program_text, const std::string& facts_text,
         std::size_t iterations, double lambda, std::uint64_t seed) {
        CompiledProgram cp = compile(parse_program(program_text));
        McmcConfig mc;
        mc.iterations = iterations;
        mc.lambda = lambda;
        mc.seed = seed;
        McmcResult result = mcmc_chase(facts_from_text(facts_text), cp, mc);
        py::list out;
        for (const AcceptedSample& s : result.samples)
          out.append(py::make_tuple(s.iteration, s.trajectory_weight, s.fact_count));
        return out;
      },
      py::arg("program"), py::arg("facts") = "", py::arg("iterations") = 10000,
      py::arg("lam") = 5.0, py::arg("seed") = 1,
      "Accepted samples as (iteration, weight, fact_count) tuples.");

  m.def(
      "gen_scale_free",
      [](const std::string& preset, std::size_t nodes, std::uint64_t seed,
         double corruption) {
        ScaleFreeParams params = preset == "dense"         ? dense_params()
                                 : preset == "super-dense" ? super_dense_params()
                                                           : base_params();
        params.nodes = nodes;
        params.corruption_rate = corruption;
        GeneratedGraph g = gen_scale_free(params, seed);
        std::string out = "src,dst,share\n";
        for (const Fact& f : g.facts.facts("inputown"))
          out += f.terms[0].display() + "," + f.terms[1].display() + "," +
                 f.terms[2].display() + "\n";
        return out;
      },
      py::arg("preset") = "base", py::arg("nodes") = 100, py::arg("seed") = 1,
      py::arg("corruption") = 0.0, "Scale-free ownership graph as edge CSV.");

  m.def("builtin_programs", []() { return builtin_programs(); },
        "Demo programs by name.");
  m.def("builtin_facts", &builtin_facts, py::arg("name"),
        "Demo facts for a builtin program.");
}
