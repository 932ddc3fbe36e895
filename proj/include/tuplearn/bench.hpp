#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tuplearn/learning.hpp"

namespace tuplearn {

struct SrlOptions {
  std::size_t n_labels = 10;
  std::uint64_t seed = 0;
  std::size_t n_tuples = 100;
  // Tuples are split into this many contiguous ranges; label i draws only
  // from range i % blocks, which gives at least `blocks` components.
  std::size_t blocks = 1;
  // Labels are read off a random planted world instead of drawn at random,
  // so the instance has an exact solution.
  bool consistent = false;
};

// One synthetic label (t_a & !t_b & !t_c) | (t_d & !t_e & !t_f), where each
// displayed negation is present with probability 0.5.
struct SrlDraw {
  std::array<std::size_t, 6> tuples{};
  std::array<bool, 4> negated{};  // positions b, c, e, f
  double target = 0.0;
};

std::vector<SrlDraw> srl_draws(const SrlOptions& options);

// Tuples T(0) .. T(n_tuples-1), all learnable.
LearningProblem gen_synthetic_srl(const SrlOptions& options);

// The same instance as rule pairs `Head(c) :- T(a), !T(b), !T(c).`; label
// c belongs to the derived tuple Head(c).
std::string srl_rules(const SrlOptions& options);

struct BenchCell {
  Optimizer optimizer = Optimizer::SgdPerTuple;
  Objective objective = Objective::Mse;
  unsigned threads = 1;
};

struct BenchRow {
  std::string instance;
  BenchCell cell;
  bool ok = false;
  std::string error;
  bool converged = false;
  double final_objective = 0.0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  double ms_per_iteration = 0.0;
};

// Runs every cell on the instance; a failing cell is recorded and the run
// continues.
std::vector<BenchRow> run_bench(const std::string& instance, const LearningProblem& problem,
                                const std::vector<BenchCell>& cells, const LearnerConfig& base = {});

std::string format_bench_csv(const std::vector<BenchRow>& rows);

}  // namespace tuplearn
