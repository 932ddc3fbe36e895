#include "tuplearn/bench.hpp"

#include <chrono>
#include <random>
#include <sstream>

#include "tuplearn/errors.hpp"

namespace tuplearn {

std::vector<SrlDraw> srl_draws(const SrlOptions& o) {
  if (o.n_labels == 0) throw InvalidArgumentError("synthetic instance needs at least one label");
  if (o.blocks == 0 || o.n_tuples < o.blocks) throw InvalidArgumentError("need 1 <= blocks <= n_tuples");

  std::mt19937_64 rng(o.seed);
  std::vector<bool> world(o.n_tuples);
  for (std::size_t i = 0; i < o.n_tuples; ++i) world[i] = rng() & 1;

  const std::size_t width = o.n_tuples / o.blocks;
  std::vector<SrlDraw> out(o.n_labels);
  for (std::size_t i = 0; i < o.n_labels; ++i) {
    SrlDraw& d = out[i];
    const std::size_t block = i % o.blocks;
    const std::size_t lo = block * width;
    const std::size_t hi = block + 1 == o.blocks ? o.n_tuples : lo + width;
    for (std::size_t& t : d.tuples) t = lo + rng() % (hi - lo);
    for (std::size_t k = 0; k < 4; ++k) d.negated[k] = rng() & 1;
    if (o.consistent) {
      auto lit = [&](std::size_t pos, int neg) { return neg < 0 ? world[d.tuples[pos]] : world[d.tuples[pos]] != d.negated[neg]; };
      const bool value = (lit(0, -1) && lit(1, 0) && lit(2, 1)) || (lit(3, -1) && lit(4, 2) && lit(5, 3));
      d.target = value ? 1.0 : 0.0;
    } else {
      d.target = (rng() & 1) ? 1.0 : 0.0;
    }
  }
  return out;
}

LearningProblem gen_synthetic_srl(const SrlOptions& o) {
  const std::vector<SrlDraw> draws = srl_draws(o);
  LearningProblem problem;
  for (std::size_t i = 0; i < o.n_tuples; ++i) problem.db.add_tuple("T", {std::to_string(i)}, std::nullopt);
  problem.learnable = problem.db.learnable_tuples();
  for (const SrlDraw& d : draws) {
    auto t = [&](std::size_t pos) { return Formula::var(static_cast<VarId>(d.tuples[pos])); };
    auto maybe_not = [&](std::size_t pos, std::size_t neg) { return d.negated[neg] ? !t(pos) : t(pos); };
    const Formula f = (t(0) & maybe_not(1, 0) & maybe_not(2, 1)) | (t(3) & maybe_not(4, 2) & maybe_not(5, 3));
    problem.labels.push_back({f, d.target, std::nullopt});
  }
  return problem;
}

std::string srl_rules(const SrlOptions& o) {
  const std::vector<SrlDraw> draws = srl_draws(o);
  std::ostringstream os;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const SrlDraw& d = draws[i];
    for (std::size_t half = 0; half < 2; ++half) {
      const std::size_t base = 3 * half;
      os << "Head(" << i << ") :- T(" << d.tuples[base] << ")";
      for (std::size_t k = 1; k < 3; ++k) {
        os << ", " << (d.negated[2 * half + k - 1] ? "!" : "") << "T(" << d.tuples[base + k] << ")";
      }
      os << ".\n";
    }
  }
  return os.str();
}

std::vector<BenchRow> run_bench(const std::string& instance, const LearningProblem& problem,
                                const std::vector<BenchCell>& cells, const LearnerConfig& base) {
  std::vector<BenchRow> rows;
  for (const BenchCell& cell : cells) {
    BenchRow row;
    row.instance = instance;
    row.cell = cell;
    LearnerConfig cfg = base;
    cfg.optimizer = cell.optimizer;
    cfg.objective = cell.objective;
    cfg.threads = cell.threads;
    const auto start = std::chrono::steady_clock::now();
    try {
      const LearnResult r = learn(problem, cfg);
      row.ok = true;
      row.converged = r.converged();
      row.final_objective = r.best;
      row.iterations = r.iterations;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    row.ms_per_iteration = row.iterations ? row.wall_ms / static_cast<double>(row.iterations) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "instance,optimizer,objective,threads,ok,converged,final_objective,iterations,wall_ms,ms_per_iteration,error\n";
  for (const BenchRow& r : rows) {
    std::string err = r.error;
    for (char& c : err) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    os << r.instance << ',' << to_string(r.cell.optimizer) << ',' << to_string(r.cell.objective) << ','
       << r.cell.threads << ',' << r.ok << ',' << r.converged << ',' << r.final_objective << ',' << r.iterations
       << ',' << r.wall_ms << ',' << r.ms_per_iteration << ',' << err << '\n';
  }
  return os.str();
}

}  // namespace tuplearn
