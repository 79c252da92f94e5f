#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "softchase/analysis.hpp"
#include "softchase/bench.hpp"
#include "softchase/chase.hpp"
#include "softchase/mcmc.hpp"
#include "softchase/network.hpp"
#include "softchase/parser.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 1 analysis violation, 2 I/O or parse error, 3 budget.
constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;

int log_level() {
  const char* env = std::getenv("SOFTCHASE_LOG");
  if (!env) return 1;
  std::string v = env;
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

softchase::FactFormat sniff_fact_format(const std::string& path) {
  return path.size() > 4 && path.substr(path.size() - 4) == ".csv"
             ? softchase::FactFormat::CsvPerPredicate
             : softchase::FactFormat::DatalogFacts;
}

void print_diagnostics(const std::vector<softchase::Violation>& violations,
                       const softchase::Program& program, std::ostream& out) {
  for (const softchase::Violation& v : violations) {
    int line = 0, col = 0;
    for (const softchase::Rule& r : program.rules)
      if (r.id == v.rule_id) {
        line = r.span.line;
        col = r.span.column;
      }
    out << v.code << " " << line << ":" << col << " " << v.message << "\n";
  }
}

struct Manifest {
  nlohmann::json data;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit Manifest(const std::string& command) {
    data["command"] = command;
    data["engine_version"] = kVersion;
  }
  void emit() const {
    if (log_level() == 0) return;
    nlohmann::json copy = data;
    copy["seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::cerr << copy.dump() << "\n";
  }
};

softchase::Program load_program(const std::string& path, Manifest& manifest) {
  manifest.data["program"] = path;
  return softchase::parse_program(read_file(path));
}

softchase::Instance load_facts(const std::string& path, Manifest& manifest) {
  manifest.data["facts"] = path;
  if (path.empty()) return {};
  return softchase::parse_facts(read_file(path), sniff_fact_format(path));
}

}  // namespace

int main(int argc, char** argv) {
  using namespace softchase;

  CLI::App app{"softchase: probabilistic reasoning over weighted existential rules"};
  app.require_subcommand(1);

  std::string program_path, facts_path, query_text, mode = "exact", format = "tsv";
  std::string preset = "base";
  std::size_t iterations = 10000, budget = 100000, nodes = 100, jobs = 1;
  double lambda = 5.0, corruption = 0.0;
  std::uint64_t seed = 1;
  bool relax_aggregates = false, skip_exact = false;
  std::vector<std::string> eval_programs;
  std::vector<std::size_t> eval_sizes;

  auto add_common = [&](CLI::App* cmd, bool with_facts) {
    cmd->add_option("--program", program_path, "program file (.svdlg)")->required();
    if (with_facts) cmd->add_option("--facts", facts_path, "fact file (.facts or .csv)");
  };

  CLI::App* check = app.add_subcommand("check", "static analysis of a program");
  add_common(check, false);
  check->add_flag("--relax-aggregates", relax_aggregates,
                  "allow aggregates in recursion");

  CLI::App* chase = app.add_subcommand("chase", "run the terminating chase");
  add_common(chase, true);
  chase->add_option("--budget", budget, "chase step budget");

  CLI::App* ground = app.add_subcommand("ground", "build and dump the exact network");
  add_common(ground, true);
  ground->add_option("--budget", budget, "node budget");

  CLI::App* infer = app.add_subcommand("infer", "marginal probabilities");
  add_common(infer, true);
  infer->add_option("--query", query_text, "predicate or conjunctive query");
  infer->add_option("--mode", mode, "exact or mcmc")
      ->check(CLI::IsMember({"exact", "mcmc"}));
  infer->add_option("--iterations", iterations, "mcmc iterations");
  infer->add_option("--lambda", lambda, "mean inner steps per proposal");
  infer->add_option("--seed", seed, "rng seed");
  infer->add_option("--budget", budget, "node budget (exact mode)");
  infer->add_option("--jobs", jobs, "worker cap (reserved; inference is sequential)");
  infer->add_option("--format", format, "tsv or csv")
      ->check(CLI::IsMember({"tsv", "csv"}));

  CLI::App* sample = app.add_subcommand("sample", "list accepted mcmc samples");
  add_common(sample, true);
  sample->add_option("--iterations", iterations, "mcmc iterations");
  sample->add_option("--lambda", lambda, "mean inner steps per proposal");
  sample->add_option("--seed", seed, "rng seed");

  CLI::App* gen = app.add_subcommand("gen", "generate a scale-free ownership graph");
  gen->add_option("--preset", preset, "base, dense, or super-dense")
      ->check(CLI::IsMember({"base", "dense", "super-dense"}));
  gen->add_option("--nodes", nodes, "target node count");
  gen->add_option("--seed", seed, "rng seed");
  gen->add_option("--corruption", corruption, "fraction of invalid shares");

  CLI::App* eval = app.add_subcommand("eval", "benchmark programs");
  eval->add_option("--programs", eval_programs, "builtin program names")
      ->delimiter(',')
      ->required();
  eval->add_option("--sizes", eval_sizes, "generated graph sizes")->delimiter(',');
  eval->add_option("--iterations", iterations, "mcmc iterations");
  eval->add_option("--seed", seed, "rng seed");
  eval->add_option("--jobs", jobs, "parallel workers across rows");
  eval->add_flag("--skip-exact", skip_exact, "skip exact grounding");
  eval->add_option("--format", format, "csv or table")
      ->check(CLI::IsMember({"csv", "table", "tsv"}));

  CLI11_PARSE(app, argc, argv);

  Manifest manifest(app.get_subcommands().front()->get_name());
  manifest.data["seed"] = seed;

  try {
    if (check->parsed()) {
      Program program = load_program(program_path, manifest);
      AnalysisReport report = analyze(program, relax_aggregates);
      if (!report.ok) {
        print_diagnostics(report.violations, program, std::cout);
        manifest.emit();
        return kExitAnalysis;
      }
      std::cout << "ok: " << program.rules.size() << " rules, "
                << report.strat.num_strata << " strata\n";
      manifest.emit();
      return kExitOk;
    }

    if (chase->parsed()) {
      Program program = load_program(program_path, manifest);
      Instance edb = load_facts(facts_path, manifest);
      CompiledProgram cp = compile(program);
      ChaseState state = make_state(edb);
      ChaseConfig config;
      config.step_budget = budget;
      warded_chase(state, cp, config);
      std::cout << serialize_facts(state.instance.all_facts());
      manifest.emit();
      return kExitOk;
    }

    if (ground->parsed()) {
      Program program = load_program(program_path, manifest);
      Instance edb = load_facts(facts_path, manifest);
      CompiledProgram cp = compile(program);
      ChaseNetwork net = ground_chase_network(edb, cp, budget);
      std::cout << describe_network(net, cp);
      manifest.data["worlds"] = net.nodes.size();
      manifest.data["transitions"] = net.edges.size();
      manifest.emit();
      return kExitOk;
    }

    if (infer->parsed()) {
      Program program = load_program(program_path, manifest);
      Instance edb = load_facts(facts_path, manifest);
      manifest.data["mode"] = mode;
      std::string answer_pred;
      Program effective = program;
      if (!query_text.empty()) {
        ConjunctiveQuery q = parse_query(query_text);
        RewrittenQuery rw = rewrite_query(program, q);
        if (!rw.report.ok) {
          print_diagnostics(rw.report.violations, rw.program, std::cerr);
          manifest.emit();
          return kExitAnalysis;
        }
        effective = rw.program;
        answer_pred = rw.answer_predicate;
      }
      CompiledProgram cp = compile(effective);
      AnswerFormat af = format == "csv" ? AnswerFormat::Csv : AnswerFormat::Tsv;
      std::vector<std::pair<Fact, double>> answer;
      if (mode == "exact") {
        ChaseNetwork net = ground_chase_network(edb, cp, budget);
        answer = network_marginals(net, answer_pred);
        manifest.data["worlds"] = net.nodes.size();
      } else {
        McmcConfig mc;
        mc.iterations = iterations;
        mc.lambda = lambda;
        mc.seed = seed;
        manifest.data["iterations"] = iterations;
        manifest.data["lambda"] = lambda;
        McmcResult result = mcmc_chase(edb, cp, mc);
        answer = estimate_marginals(result, answer_pred);
        manifest.data["acceptance_rate"] = result.acceptance_rate;
        manifest.data["distinct_worlds"] = result.distinct_nodes;
        if (log_level() >= 2)
          std::cerr << "debug: acceptance_rate=" << result.acceptance_rate
                    << " distinct_worlds=" << result.distinct_nodes << "\n";
      }
      std::cout << serialize_answer(answer, af);
      manifest.emit();
      return kExitOk;
    }

    if (sample->parsed()) {
      Program program = load_program(program_path, manifest);
      Instance edb = load_facts(facts_path, manifest);
      CompiledProgram cp = compile(program);
      McmcConfig mc;
      mc.iterations = iterations;
      mc.lambda = lambda;
      mc.seed = seed;
      manifest.data["iterations"] = iterations;
      McmcResult result = mcmc_chase(edb, cp, mc);
      char buf[128];
      for (const AcceptedSample& s : result.samples) {
        std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%zu\n", s.iteration,
                      s.trajectory_weight, s.fact_count);
        std::cout << buf;
      }
      manifest.data["accepted"] = result.samples.size();
      manifest.emit();
      return kExitOk;
    }

    if (gen->parsed()) {
      ScaleFreeParams params = preset == "dense"         ? dense_params()
                               : preset == "super-dense" ? super_dense_params()
                                                         : base_params();
      params.nodes = nodes;
      params.corruption_rate = corruption;
      GeneratedGraph g = gen_scale_free(params, seed);
      std::cout << "src,dst,share\n";
      for (const Fact& f : g.facts.facts("inputown"))
        std::cout << f.terms[0].display() << "," << f.terms[1].display() << ","
                  << f.terms[2].display() << "\n";
      manifest.data["nodes"] = g.nodes;
      manifest.data["edges"] = g.edges;
      manifest.emit();
      return kExitOk;
    }

    if (eval->parsed()) {
      EvalOptions options;
      options.programs = eval_programs;
      if (!eval_sizes.empty()) options.sizes = eval_sizes;
      options.iterations = iterations;
      options.seed = seed;
      options.skip_exact = skip_exact;
      options.jobs = jobs;
      EvalReport report = evaluate(options);
      std::cout << (format == "table" ? report.table() : report.csv());
      manifest.emit();
      return kExitOk;
    }
  } catch (const AnalysisError& e) {
    for (const Violation& v : e.violations)
      std::cerr << v.code << " rule=" << v.rule_id << " " << v.message << "\n";
    manifest.emit();
    return kExitAnalysis;
  } catch (const NetworkBudgetError& e) {
    std::cerr << "budget: " << e.what() << "\n";
    manifest.emit();
    return kExitBudget;
  } catch (const BudgetExceededError& e) {
    std::cerr << "budget: " << e.what() << "\n";
    manifest.emit();
    return kExitBudget;
  } catch (const ParseError& e) {
    for (const Diagnostic& d : e.diagnostics)
      std::cerr << d.code << " " << d.span.line << ":" << d.span.column << " "
                << d.message << "\n";
    manifest.emit();
    return kExitInput;
  } catch (const std::system_error& e) {
    std::cerr << "io: " << e.what() << "\n";
    manifest.emit();
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    manifest.emit();
    return kExitInput;
  }
  return kExitOk;
}
