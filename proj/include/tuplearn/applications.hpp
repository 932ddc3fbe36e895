#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tuplearn/database.hpp"
#include "tuplearn/datalog.hpp"
#include "tuplearn/formula.hpp"
#include "tuplearn/learning.hpp"

namespace tuplearn {

// ---- conditioning

// Learning instance with labels (phi_i, 1.0) over the given learnable tuples.
LearningProblem conditioning_problem(const ProbabilisticDatabase& db, const std::vector<Formula>& constraints,
                                     std::vector<VarId> learnable);

struct ConditionResult {
  ProbabilityVector p;
  double constraint_probability = 0.0;  // P(conjunction of constraints) under p
  bool satisfied = false;               // constraint_probability >= 1 - eps_abs
  LearnResult learn;
};

// Re-learns every tuple so that the constraints hold with probability
// 1 - eps_abs, starting from the current probabilities. Throws
// InconsistencyError when the constraints are unsatisfiable and small
// enough to check.
ConditionResult condition(const ProbabilisticDatabase& db, const std::vector<Formula>& constraints,
                          const LearnerConfig& cfg = {});

// Missing-tuple completion: the database's learnable tuples are T_m, the
// constraints become labels (phi_i, 1.0).
LearningProblem derive_missing_tuples(const ProbabilisticDatabase& db, const std::vector<Formula>& constraints);

// ---- updating and cleaning

struct CleanOptions {
  double prior_weight = 0.5;  // c: weight of the new labels against the prior
  double zero_tol = 1e-3;
  double one_tol = 1e-3;
  std::optional<std::vector<VarId>> learnable;  // default: every tuple
};

struct CleanResult {
  ProbabilityVector p;
  std::vector<VarId> deletions;  // p'(t) <= zero_tol
  std::vector<VarId> certain;    // p'(t) >= 1 - one_tol
  LearnResult learn;
};

CleanResult update_clean(const ProbabilisticDatabase& db, const std::vector<Label>& labels,
                         const CleanOptions& options = {}, const LearnerConfig& cfg = {});

// ---- incomplete databases

struct IncompleteDatabase {
  std::string relation;
  std::size_t arity = 0;
  std::vector<std::vector<std::string>> complete;                  // multiset
  std::vector<std::vector<std::optional<std::string>>> incomplete;  // nullopt marks a missing value
  std::vector<std::vector<std::string>> domains;                   // one per attribute
};

struct IncompleteReduction {
  struct Block {
    std::vector<std::optional<std::string>> row;  // the incomplete tuple
    std::vector<std::size_t> labels;              // indices into problem.labels
    std::vector<std::size_t> counts;              // completion counts, parallel to labels
    std::size_t total = 0;
  };

  std::string candidate_relation;  // one learnable tuple per completion
  std::string completed_relation;  // derived by the block rules
  DeductionProgram program;
  LearningProblem problem;
  std::vector<Block> blocks;
};

// Builds the block-independent learning instance for the incomplete rows.
// `anchors` are attribute positions that a complete row must share with
// the incomplete row to count as evidence; by default all known positions.
// Identical incomplete rows are merged. Throws NoEvidenceError when no
// complete row supports any completion of some incomplete row.
IncompleteReduction derive_from_incomplete(const IncompleteDatabase& idb,
                                           const std::optional<std::vector<std::size_t>>& anchors = std::nullopt);

// ---- 3SAT

// Clauses hold DIMACS-style literals: +k for X_k, -k for !X_k, k >= 1.
struct Cnf {
  std::size_t num_vars = 0;
  std::vector<std::vector<int>> clauses;
};

struct SatEncoding {
  LearningProblem problem;
  std::vector<VarId> primary;  // t_i
  std::vector<VarId> shadow;   // t'_i
};

SatEncoding encode_3sat(const Cnf& cnf);

// Rounds p(t_i) at 0.5.
std::vector<bool> decode_assignment(const SatEncoding& enc, const ProbabilityVector& p);

bool satisfies(const Cnf& cnf, const std::vector<bool>& assignment);

// Random 3-CNF with a planted satisfying assignment; clauses use three
// distinct variables.
Cnf random_planted_3cnf(std::size_t num_vars, std::size_t num_clauses, std::uint64_t seed);

}  // namespace tuplearn
