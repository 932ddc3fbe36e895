// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "properties.hpp"
#include "tuplearn/applications.hpp"
#include "tuplearn/bench.hpp"
#include "tuplearn/datalog.hpp"
#include "tuplearn/inference.hpp"
#include "tuplearn/io.hpp"
#include "tuplearn/learning.hpp"

using namespace tuplearn;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Formula t(VarId i) { return Formula::var(i); }

ProbabilisticDatabase unknown_db(std::size_t n) {
  ProbabilisticDatabase db;
  for (std::size_t i = 0; i < n; ++i) db.add_tuple("T", {std::to_string(i)}, std::nullopt);
  return db;
}

Verdict golden_marginal() {
  ProbabilityVector p = ProbabilityVector::Constant(9, 0.5);
  p[1] = 0.6;
  p[2] = 0.3;
  p[5] = 0.5;
  p[6] = 0.6;
  p[8] = 0.8;
  const Formula f = (t(1) & t(5) & t(8)) | (t(2) & t(6) & t(8));
  const auto start = Clock::now();
  const double value = prob_exact(f, p);
  const double ms = seconds_since(start) * 1e3;
  return {std::abs(value - 0.3408) <= 1e-12 && ms < 1.0, fmt("P = %.17g, %.3f ms", value, ms)};
}

Verdict oracle_equivalence() {
  oracle::Rng rng(2);
  double worst = 0.0;
  const auto start = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + oracle::below(rng, 12);
    const oracle::Raw raw = oracle::random_raw(rng, n, 5);
    const Formula f = oracle::build(raw);
    const std::vector<double> p = oracle::random_probabilities(rng, n);
    const ProbabilityVector v = oracle::to_vector(p);
    const double exact = prob_exact(f, v);
    worst = std::max({worst, std::abs(exact - prob_bruteforce(f, v)), std::abs(exact - oracle::prob(raw, n, p))});
  }
  const double s = seconds_since(start);
  return {worst <= 1e-9 && s < 10.0, fmt("200 formulas, max error %.3g, %.2f s", worst, s)};
}

Verdict gradient_check() {
  oracle::Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + oracle::below(rng, 8);
    std::vector<double> p(n);
    for (double& x : p) x = oracle::uniform(rng, 0.01, 0.99);
    const VarId v = static_cast<VarId>(oracle::below(rng, n));
    auto moved = [&](double x) {
      ProbabilityVector q = oracle::to_vector(p);
      q[v] = x;
      return q;
    };

    const Formula f = oracle::build(oracle::random_raw(rng, n, 4));
    const double d = derivative(f, v, oracle::to_vector(p));
    const double fd = oracle::central_difference([&](double x) { return prob_bruteforce(f, moved(x)); }, p[v]);
    worst = std::max(worst, std::abs(d - fd));

    std::vector<Label> labels;
    for (std::size_t k = 0, m = 1 + oracle::below(rng, 4); k < m; ++k)
      labels.push_back({oracle::build(oracle::random_raw(rng, n, 3)), oracle::uniform(rng), std::nullopt});
    const double g = mse_gradient(labels, oracle::to_vector(p), v);
    const double gfd = oracle::central_difference(
        [&](double x) {
          std::vector<double> q = p;
          q[v] = x;
          return oracle::mse(labels, n, q);
        },
        p[v]);
    worst = std::max(worst, std::abs(g - gfd));
  }

  ProbabilityVector p = ProbabilityVector::Constant(2, 0.5);
  p[0] = 0.6;
  const double d7 = derivative(t(0) | t(1), 1, p);
  const std::vector<Label> labels{{t(0) | t(1), 1.0, std::nullopt}, {t(0), 0.0, std::nullopt}};
  const ProbabilityVector half = ProbabilityVector::Constant(2, 0.5);
  const double g0 = mse_gradient(labels, half, 0), g1 = mse_gradient(labels, half, 1);
  const bool golden = std::abs(d7 - 0.4) <= 1e-12 && std::abs(g0 - 0.375) <= 1e-12 && std::abs(g1 + 0.125) <= 1e-12;
  return {worst <= 1e-6 && golden,
          fmt("max difference %.3g over 100 instances; golden %.17g, (%.17g, %.17g)", worst, d7, g0, g1)};
}

Verdict grounding_golden() {
  const std::string dir = std::string(TUPLEARN_DATA_DIR) + "/example/";
  const Instance in = load_instance({dir + "tuples.tsv", dir + "rules.dl", ""});
  // t1..t9 of the example are VarIds 0..8.
  const std::vector<std::pair<std::string, Formula>> want{
      {"BornIn(Spielberg,Cinncinati)", t(2) & t(6) & t(7)},
      {"BornIn(Spielberg,LosAngeles)", t(3) & t(6) & t(8)},
      {"WonPrize(Spielberg,AcademyAward)", (t(0) & t(4) & t(7)) | (t(1) & t(5) & t(7))},
  };
  bool ok = in.derived.size() == want.size();
  for (std::size_t i = 0; ok && i < want.size(); ++i)
    ok = tuple_text(in.derived[i].tuple) == want[i].first && in.derived[i].lineage == want[i].second;
  return {ok, fmt("%zu derived tuples", in.derived.size())};
}

Verdict unique_optimum() {
  const auto start = Clock::now();
  LearnerConfig cfg;
  cfg.eps_abs = 1e-10;

  const LearningProblem a =
      LearningProblem::from_database(unknown_db(2), {{t(0), 0.4, std::nullopt}, {t(1), 0.7, std::nullopt}});
  double worst_a = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const LearnResult r = learn(a, cfg);
    worst_a = std::max({worst_a, std::abs(r.p[0] - 0.4), std::abs(r.p[1] - 0.7)});
  }

  const LearningProblem b =
      LearningProblem::from_database(unknown_db(2), {{t(0) & t(1), 0.1, std::nullopt}, {t(0) | t(1), 0.6, std::nullopt}});
  int first = 0, second = 0, neither = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    cfg.seed = seed;
    const LearnResult r = learn(b, cfg);
    if (std::abs(r.p[0] - 0.2) <= 1e-3 && std::abs(r.p[1] - 0.5) <= 1e-3)
      ++first;
    else if (std::abs(r.p[0] - 0.5) <= 1e-3 && std::abs(r.p[1] - 0.2) <= 1e-3)
      ++second;
    else
      ++neither;
  }
  const double s = seconds_since(start);
  return {worst_a <= 1e-3 && neither == 0 && first > 0 && second > 0 && s < 5.0,
          fmt("single root max error %.3g; two roots hit %d/%d, missed %d; %.2f s", worst_a, first, second, neither, s)};
}

Verdict inconsistent_optimum() {
  const std::vector<Label> labels{{t(0), 0.2, std::nullopt}, {t(1), 0.3, std::nullopt}, {t(0) & t(1), 0.9, std::nullopt}};
  const auto grid = oracle::grid_min([&](double x, double y) { return oracle::mse(labels, 2, {x, y}); });
  const LearningProblem problem = LearningProblem::from_database(unknown_db(2), labels);
  int near = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    LearnerConfig cfg;
    cfg.seed = seed;
    near += std::abs(learn(problem, cfg).best - grid.value) <= 1e-3;
  }
  return {near >= 70, fmt("%d/100 restarts within 1e-3 of grid minimum %.17g", near, grid.value)};
}

Verdict sat_solving() {
  const auto start = Clock::now();
  int solved = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Cnf cnf = random_planted_3cnf(8, 15, 1000 + k);
    if (!oracle::solve(cnf)) continue;
    const SatEncoding enc = encode_3sat(cnf);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      LearnerConfig cfg;
      cfg.seed = seed;
      const LearnResult r = learn(enc.problem, cfg);
      if (r.best <= 1e-6 && satisfies(cnf, decode_assignment(enc, r.p))) {
        ++solved;
        break;
      }
    }
  }
  const double s = seconds_since(start);
  return {solved == 20 && s < 60.0, fmt("%d/20 formulas solved, %.2f s", solved, s)};
}

Verdict conditioning() {
  oracle::Rng rng(8);
  const std::size_t n = 6;
  int good = 0;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    ProbabilisticDatabase db;
    for (std::size_t i = 0; i < n; ++i) db.add_tuple("T", {std::to_string(i)}, oracle::uniform(rng, 0.05, 0.95));
    oracle::Raw raw;
    do {
      raw = oracle::random_raw(rng, n, 3);
    } while (oracle::prob(raw, n, std::vector<double>(n, 0.5)) == 0.0);
    LearnerConfig cfg;
    cfg.eps_abs = 1e-5;
    cfg.seed = k;
    const ConditionResult r = condition(db, {oracle::build(raw)}, cfg);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = r.p[static_cast<Eigen::Index>(i)];
    bool ok = oracle::prob(raw, n, p) >= 1.0 - 1e-5;
    for (int j = 0; j < 20; ++j) {
      const oracle::Raw psi = oracle::random_raw(rng, n, 2);
      const double joint =
          oracle::enumerate(n, p, [&](std::uint64_t w) { return oracle::eval(psi, w) && oracle::eval(raw, w); });
      const double diff = std::abs(joint - oracle::prob(psi, n, p));
      worst = std::max(worst, diff);
      ok = ok && diff <= 1e-5;
    }
    good += ok;
  }
  return {good == 10, fmt("%d/10 databases, max |P(psi & phi) - P(psi)| = %.3g", good, worst)};
}

Verdict scale() {
  SrlOptions small;
  small.n_labels = 100;
  LearnerConfig cfg;
  auto start = Clock::now();
  const LearnResult r100 = learn(gen_synthetic_srl(small), cfg);
  const double s100 = seconds_since(start);

  SrlOptions large;
  large.n_labels = 10000;
  large.n_tuples = 1000;
  start = Clock::now();
  const LearnResult r10k = learn(gen_synthetic_srl(large), cfg);
  const double s10k = seconds_since(start);

  SrlOptions blocked = large;
  blocked.blocks = 8;
  const LearningProblem bp = gen_synthetic_srl(blocked);
  start = Clock::now();
  const LearnResult b1 = learn(bp, cfg);
  const double t1 = seconds_since(start);
  LearnerConfig four = cfg;
  four.threads = 4;
  start = Clock::now();
  const LearnResult b4 = learn(bp, four);
  const double t4 = seconds_since(start);
  const double speedup = t1 / t4;

  const bool ok = r100.converged() && s100 < 10.0 && r10k.converged() && s10k < 300.0 && b1.components >= 4 &&
                  std::abs(b1.best - b4.best) <= cfg.eps_abs && speedup >= 1.5;
  return {ok, fmt("100 labels %.3f s (converged %d); 10k labels %.2f s (converged %d); %zu components: "
                  "1 thread %.2f s, 4 threads %.2f s, speedup %.2fx on %u hardware threads",
                  s100, r100.converged(), s10k, r10k.converged(), b1.components, t1, t4, speedup,
                  std::thread::hardware_concurrency())};
}

Verdict objectives() {
  double mse_ms = 0.0, logical_ms = 0.0;
  std::size_t mse_it = 0, logical_it = 0;
  for (std::size_t n = 1; n <= 15; ++n) {
    SrlOptions o;
    o.n_labels = n;
    o.consistent = true;
    o.seed = n;
    const LearningProblem p = gen_synthetic_srl(o);
    LearnerConfig cfg;
    cfg.seed = n;
    const auto rows = run_bench("srl", p, {{Optimizer::SgdPerTuple, Objective::Mse, 1},
                                           {Optimizer::SgdPerTuple, Objective::Logical, 1}}, cfg);
    mse_ms += rows[0].wall_ms;
    mse_it += rows[0].iterations;
    logical_ms += rows[1].wall_ms;
    logical_it += rows[1].iterations;
  }
  const double mse_per = mse_ms / static_cast<double>(std::max<std::size_t>(mse_it, 1));
  const double logical_per = logical_ms / static_cast<double>(std::max<std::size_t>(logical_it, 1));

  const LearningProblem hand = LearningProblem::from_database(
      unknown_db(3), {{t(0) | t(1), 1.0, std::nullopt}, {t(0), 0.0, std::nullopt}, {t(1) & !t(2), 1.0, std::nullopt}});
  LearnerConfig cfg;
  const double mse_best = learn(hand, cfg).best;
  cfg.objective = Objective::Logical;
  const double logical_best = learn(hand, cfg).best;

  return {logical_per > mse_per && logical_best >= 1.0 - 1e-6 && mse_best <= 1e-6,
          fmt("ms/iteration logical %.4f vs mse %.4f; hand-built instance logical %.9f, mse %.3g", logical_per, mse_per,
              logical_best, mse_best)};
}

Verdict properties() {
  std::size_t total = 0, failed = 0;
  std::string first;
  for (const props::PropertyOutcome& o : props::run_all_properties(7, 100)) {
    ++total;
    if (!o.ok()) {
      ++failed;
      if (first.empty()) first = "; " + o.name + ": " + o.first_failure;
    }
  }
  return {failed == 0, fmt("%zu/%zu properties green", total - failed, total) + first};
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria{golden_marginal, oracle_equivalence, gradient_check,
                                                       grounding_golden, unique_optimum,     inconsistent_optimum,
                                                       sat_solving,      conditioning,       scale,
                                                       objectives,       properties};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s criterion %zu: %s\n", v.pass ? "PASS" : "FAIL", i + 1, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
