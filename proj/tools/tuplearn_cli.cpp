// Command-line front end: grounding, inference, learning and the
// conditioning/cleaning/incomplete-data reductions.
//
// Exit codes: 0 success, 1 usage or input error, 2 learner did not
// converge, 3 inconsistent constraints.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "tuplearn/applications.hpp"
#include "tuplearn/bench.hpp"
#include "tuplearn/errors.hpp"
#include "tuplearn/formula_io.hpp"
#include "tuplearn/inference.hpp"
#include "tuplearn/io.hpp"
#include "tuplearn/learning.hpp"

using namespace tuplearn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNotConverged = 2, kInconsistent = 3 };

struct LearnerFlags {
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  std::uint64_t seed = 0;
  std::string objective = "mse";
  std::string optimizer = "sgd-per-tuple";
  unsigned threads = 1;
  std::size_t max_iter = 10000;
  std::string trace;

  void add_to(CLI::App* app) {
    app->add_option("--eps-abs", eps_abs, "absolute error bound")->capture_default_str();
    app->add_option("--eps-rel", eps_rel, "relative error bound")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--objective", objective, "mse or logical")
        ->check(CLI::IsMember({"mse", "logical"}))
        ->capture_default_str();
    app->add_option("--optimizer", optimizer, "sgd-per-tuple, sgd-single or gd")
        ->check(CLI::IsMember({"sgd-per-tuple", "sgd-single", "gd"}))
        ->capture_default_str();
    app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--max-iter", max_iter, "outer iteration cap")->capture_default_str();
    app->add_option("--trace", trace, "write the convergence trace as CSV");
  }

  LearnerConfig config() const {
    LearnerConfig cfg;
    cfg.eps_abs = eps_abs;
    cfg.eps_rel = eps_rel;
    cfg.seed = seed;
    cfg.objective = parse_objective(objective);
    cfg.optimizer = parse_optimizer(optimizer);
    cfg.threads = threads;
    cfg.max_outer_iterations = max_iter;
    return cfg;
  }

  void write_trace(const LearnResult& r) const {
    if (!trace.empty()) write_file(trace, format_trace(r.trace));
  }
};

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void report(const LearnResult& r) {
  const char* why = r.stop == StopReason::AbsoluteBound   ? "absolute bound"
                    : r.stop == StopReason::RelativeBound ? "relative bound"
                                                          : "iteration limit";
  std::cerr << "objective " << number(r.best) << " after " << r.iterations << " iterations (" << why << ", "
            << r.components << " components)\n";
}

std::vector<Formula> read_formulas(const std::string& path, const ProbabilisticDatabase& db) {
  std::vector<Formula> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#' || line[0] == '%') continue;
    try {
      out.push_back(parse_formula(line, &db));
    } catch (const tuplearn::ParseError& e) {
      throw tuplearn::ParseError(path + ": " + e.what(), line_no);
    }
  }
  return out;
}

ProbabilisticDatabase with_probabilities(ProbabilisticDatabase db, const ProbabilityVector& p) {
  for (VarId v = 0; v < db.size(); ++v) {
    if (is_known(p[v])) db.set_probability(v, p[v]);
  }
  return db;
}

// Incomplete rows are the ones containing a `?` argument.
IncompleteDatabase read_incomplete(const std::string& path, const std::string& relation) {
  IncompleteDatabase idb;
  idb.relation = relation;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::set<std::string>> domains;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#' || line[0] == '%') continue;
    std::vector<std::optional<std::string>> row;
    std::stringstream fields(line);
    std::string f;
    while (std::getline(fields, f, '\t')) {
      row.push_back(f == "?" ? std::nullopt : std::optional<std::string>(f));
    }
    if (idb.arity == 0) {
      idb.arity = row.size();
      domains.resize(row.size());
    }
    if (row.size() != idb.arity) throw tuplearn::ParseError(path + ": inconsistent number of columns", line_no);
    bool complete = true;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i]) {
        domains[i].insert(*row[i]);
      } else {
        complete = false;
      }
    }
    if (complete) {
      std::vector<std::string> full;
      for (auto& v : row) full.push_back(*v);
      idb.complete.push_back(std::move(full));
    } else {
      idb.incomplete.push_back(std::move(row));
    }
  }
  for (auto& d : domains) idb.domains.emplace_back(d.begin(), d.end());
  return idb;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic database grounding, inference and tuple-probability learning"};
  app.require_subcommand(1);

  std::string tuples, rules, labels, out, constraints_path;

  // ground
  auto* ground_cmd = app.add_subcommand("ground", "ground rules and print the lineage of every derived tuple");
  ground_cmd->add_option("--tuples", tuples, "tuples.tsv")->required()->check(CLI::ExistingFile);
  ground_cmd->add_option("--rules", rules, "rules file")->required()->check(CLI::ExistingFile);
  ground_cmd->add_option("--out", out, "output file (default stdout)");

  // prob
  std::string formula_text;
  bool brute = false;
  auto* prob_cmd = app.add_subcommand("prob", "marginal probability of a lineage formula");
  prob_cmd->add_option("formula", formula_text, "formula text")->required();
  prob_cmd->add_option("--tuples", tuples, "tuples.tsv")->required()->check(CLI::ExistingFile);
  prob_cmd->add_flag("--brute-force", brute, "enumerate possible worlds instead");

  // learn
  LearnerFlags lf;
  double prior_weight = 1.0;
  auto* learn_cmd = app.add_subcommand("learn", "learn unknown tuple probabilities from labels");
  learn_cmd->add_option("--tuples", tuples, "tuples.tsv")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--rules", rules, "rules file")->check(CLI::ExistingFile);
  learn_cmd->add_option("--labels", labels, "labels.tsv")->check(CLI::ExistingFile);
  learn_cmd->add_option("--out", out, "learned probabilities TSV (default stdout)");
  learn_cmd->add_option("--prior-weight", prior_weight,
                        "weight c of the labels against a prior at the current probabilities (0.5 for unknown tuples); 1 disables")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  lf.add_to(learn_cmd);

  // condition
  auto* cond_cmd = app.add_subcommand("condition", "re-learn probabilities so that constraints hold");
  cond_cmd->add_option("--tuples", tuples, "tuples.tsv")->required()->check(CLI::ExistingFile);
  cond_cmd->add_option("--constraints", constraints_path, "one formula per line")->required()->check(CLI::ExistingFile);
  cond_cmd->add_option("--out", out, "conditioned tuples.tsv (default stdout)");
  lf.add_to(cond_cmd);

  // clean
  double zero_tol = 1e-3, one_tol = 1e-3;
  auto* clean_cmd = app.add_subcommand("clean", "update with new labels under a prior and report deletions");
  clean_cmd->add_option("--tuples", tuples, "tuples.tsv")->required()->check(CLI::ExistingFile);
  clean_cmd->add_option("--rules", rules, "rules file")->check(CLI::ExistingFile);
  clean_cmd->add_option("--labels", labels, "labels.tsv")->required()->check(CLI::ExistingFile);
  clean_cmd->add_option("--out", out, "updated tuples.tsv (default stdout)");
  clean_cmd->add_option("--prior-weight", prior_weight, "weight c of the labels against the prior")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  clean_cmd->add_option("--zero-tol", zero_tol, "delete tuples at or below this probability")->capture_default_str();
  clean_cmd->add_option("--one-tol", one_tol, "mark tuples within this distance of 1 certain")->capture_default_str();
  lf.add_to(clean_cmd);

  // bench
  std::size_t n_labels = 100, n_tuples = 100, blocks = 1, repeats = 1;
  bool consistent = false;
  std::vector<std::string> optimizers{"sgd-per-tuple", "sgd-single", "gd"};
  std::vector<std::string> objectives{"mse"};
  std::vector<unsigned> thread_counts{1};
  auto* bench_cmd = app.add_subcommand("bench", "run optimizer/objective cells on synthetic instances, CSV out");
  bench_cmd->add_option("--labels", n_labels, "labels per instance")->capture_default_str();
  bench_cmd->add_option("--tuples", n_tuples, "tuples per instance")->capture_default_str();
  bench_cmd->add_option("--blocks", blocks, "independent tuple blocks")->capture_default_str();
  bench_cmd->add_option("--repeats", repeats, "instances (seeds seed..seed+repeats-1)")->capture_default_str();
  bench_cmd->add_flag("--consistent", consistent, "labels from a planted world");
  bench_cmd->add_option("--optimizers", optimizers, "optimizers to run")->delimiter(',');
  bench_cmd->add_option("--objectives", objectives, "objectives to run")->delimiter(',');
  bench_cmd->add_option("--thread-counts", thread_counts, "thread counts to run")->delimiter(',');
  bench_cmd->add_option("--out", out, "CSV output (default stdout)");
  lf.add_to(bench_cmd);

  // gen
  std::string tuples_out, labels_out, rules_out;
  std::size_t sat_vars = 8, sat_clauses = 15;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen", "generate synthetic instances");
  gen_cmd->require_subcommand(1);
  auto* gen_srl = gen_cmd->add_subcommand("srl", "random two-rule lineage labels over T(0..n-1)");
  gen_srl->add_option("--labels", n_labels, "number of labels")->capture_default_str();
  gen_srl->add_option("--tuples", n_tuples, "number of tuples")->capture_default_str();
  gen_srl->add_option("--blocks", blocks, "independent tuple blocks")->capture_default_str();
  gen_srl->add_flag("--consistent", consistent, "labels from a planted world");
  gen_srl->add_option("--rules-out", rules_out, "also write the instance as rules");
  auto* gen_sat = gen_cmd->add_subcommand("3sat", "planted random 3-CNF encoded as a learning instance");
  gen_sat->add_option("--vars", sat_vars, "variables")->capture_default_str();
  gen_sat->add_option("--clauses", sat_clauses, "clauses")->capture_default_str();
  for (auto* g : {gen_srl, gen_sat}) {
    g->add_option("--seed", gen_seed, "random seed")->capture_default_str();
    g->add_option("--tuples-out", tuples_out, "tuples.tsv to write")->required();
    g->add_option("--labels-out", labels_out, "labels.tsv to write")->required();
  }

  // incomplete
  std::string relation = "R", out_dir;
  std::vector<std::size_t> anchor_list;
  auto* inc_cmd = app.add_subcommand("incomplete", "build the completion instance for rows with '?' values");
  inc_cmd->add_option("--input", tuples, "TSV rows, '?' marks a missing value")->required()->check(CLI::ExistingFile);
  inc_cmd->add_option("--relation", relation, "relation name")->capture_default_str();
  inc_cmd->add_option("--anchors", anchor_list, "anchor attribute positions (0-based)")->delimiter(',');
  inc_cmd->add_option("--out-dir", out_dir, "directory for tuples.tsv, rules.dl, labels.tsv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ground_cmd) {
      const Instance inst = load_instance({tuples, rules, {}});
      std::string text;
      for (const DerivedTuple& d : inst.derived) text += tuple_text(d.tuple) + "\t" + to_string(d.lineage, &inst.db) + "\n";
      emit(out, text);
      return kOk;
    }

    if (*prob_cmd) {
      const ProbabilisticDatabase db = parse_tuples(read_file(tuples));
      const Formula f = parse_formula(formula_text, &db);
      const double p = brute ? prob_bruteforce(f, db.probabilities()) : prob_exact(f, db.probabilities());
      std::cout << number(p) << "\n";
      return kOk;
    }

    if (*learn_cmd) {
      const Instance inst = load_instance({tuples, rules, labels});
      LearningProblem problem = inst.problem();
      if (prior_weight < 1.0) {
        Prior prior;
        prior.c = prior_weight;
        for (VarId t : problem.learnable) {
          const auto v = inst.db.probability(t);
          prior.values.push_back(v ? *v : 0.5);
        }
        problem.prior = std::move(prior);
      }
      const LearnResult r = learn(problem, lf.config());
      lf.write_trace(r);
      report(r);
      emit(out, format_learned(inst.db, r.p, problem.learnable));
      return r.converged() ? kOk : kNotConverged;
    }

    if (*cond_cmd) {
      const ProbabilisticDatabase db = parse_tuples(read_file(tuples));
      const ConditionResult r = condition(db, read_formulas(constraints_path, db), lf.config());
      lf.write_trace(r.learn);
      report(r.learn);
      std::cerr << "P(constraints) = " << number(r.constraint_probability) << "\n";
      emit(out, format_tuples(with_probabilities(db, r.p)));
      if (!r.satisfied) {
        std::cerr << "constraints not reached; they may be unsatisfiable\n";
        return kNotConverged;
      }
      return kOk;
    }

    if (*clean_cmd) {
      const Instance inst = load_instance({tuples, rules, labels});
      CleanOptions opts;
      opts.prior_weight = prior_weight;
      opts.zero_tol = zero_tol;
      opts.one_tol = one_tol;
      const CleanResult r = update_clean(inst.db, inst.labels, opts, lf.config());
      lf.write_trace(r.learn);
      report(r.learn);
      for (VarId t : r.deletions) std::cerr << "delete\t" << tuple_text(inst.db.tuple(t)) << "\n";
      for (VarId t : r.certain) std::cerr << "certain\t" << tuple_text(inst.db.tuple(t)) << "\n";
      emit(out, format_tuples(with_probabilities(inst.db, r.p)));
      return r.learn.converged() ? kOk : kNotConverged;
    }

    if (*bench_cmd) {
      std::vector<BenchCell> cells;
      for (const auto& o : optimizers) {
        for (const auto& j : objectives) {
          for (unsigned th : thread_counts) cells.push_back({parse_optimizer(o), parse_objective(j), th});
        }
      }
      std::vector<BenchRow> rows;
      for (std::size_t r = 0; r < repeats; ++r) {
        SrlOptions o{n_labels, lf.seed + r, n_tuples, blocks, consistent};
        const LearningProblem problem = gen_synthetic_srl(o);
        const std::string name = "srl-l" + std::to_string(n_labels) + "-t" + std::to_string(n_tuples) + "-b" +
                                 std::to_string(blocks) + "-s" + std::to_string(o.seed);
        auto part = run_bench(name, problem, cells, lf.config());
        rows.insert(rows.end(), part.begin(), part.end());
      }
      emit(out, format_bench_csv(rows));
      return kOk;
    }

    if (*gen_srl) {
      SrlOptions o{n_labels, gen_seed, n_tuples, blocks, consistent};
      const LearningProblem problem = gen_synthetic_srl(o);
      write_file(tuples_out, format_tuples(problem.db));
      write_file(labels_out, format_labels(problem.labels, problem.db));
      if (!rules_out.empty()) write_file(rules_out, srl_rules(o));
      return kOk;
    }

    if (*gen_sat) {
      const Cnf cnf = random_planted_3cnf(sat_vars, sat_clauses, gen_seed);
      const SatEncoding enc = encode_3sat(cnf);
      write_file(tuples_out, format_tuples(enc.problem.db));
      write_file(labels_out, format_labels(enc.problem.labels, enc.problem.db));
      return kOk;
    }

    if (*inc_cmd) {
      const IncompleteDatabase idb = read_incomplete(tuples, relation);
      std::optional<std::vector<std::size_t>> anchors;
      if (!anchor_list.empty()) anchors = anchor_list;
      const IncompleteReduction red = derive_from_incomplete(idb, anchors);
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      write_file(dir / "tuples.tsv", format_tuples(red.problem.db));
      write_file(dir / "rules.dl", to_string(red.program));
      write_file(dir / "labels.tsv", format_labels(red.problem.labels, red.problem.db));
      return kOk;
    }
  } catch (const InconsistencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInconsistent;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}
