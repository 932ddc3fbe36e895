#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tuplearn/database.hpp"
#include "tuplearn/formula.hpp"
#include "tuplearn/inference.hpp"

namespace tuplearn {

// ln(1e9): expit(kDefaultWeightCap) = 1 - 1e-9 (approximately).
inline const double kDefaultWeightCap = std::log(1e9);

// Logit transform with weights clamped to [-cap, cap]; p = 0 and p = 1 map
// to the clamps.
inline double logit(double p, double cap = kDefaultWeightCap) {
  const double w = std::log(p / (1.0 - p));
  return w < -cap ? -cap : (w > cap ? cap : w);
}

inline double expit(double w) { return 1.0 / (1.0 + std::exp(-w)); }

template <typename Derived>
auto logit(const Eigen::ArrayBase<Derived>& p, double cap = kDefaultWeightCap) {
  return (p / (1.0 - p)).log().cwiseMax(-cap).cwiseMin(cap);
}

template <typename Derived>
auto expit(const Eigen::ArrayBase<Derived>& w) {
  return (1.0 + (-w).exp()).inverse();
}

// Target marginal for a lineage formula. Without an explicit weight a label
// contributes with weight 1/|L| to the squared-error objective.
struct Label {
  Formula formula;
  double target = 0.0;
  std::optional<double> weight;
};

struct Prior {
  std::vector<double> values;  // aligned with LearningProblem::learnable
  double c = 1.0;              // weight of the data labels
};

struct LearningProblem {
  ProbabilisticDatabase db;
  std::vector<VarId> learnable;  // T_l
  std::vector<Label> labels;
  std::optional<Prior> prior;

  // T_l taken from the tuples the database marks as learnable.
  static LearningProblem from_database(ProbabilisticDatabase db, std::vector<Label> labels);

  void validate() const;
};

enum class Objective { Mse, Logical };
enum class Optimizer { SgdPerTuple, SgdSingle, Gd };

Objective parse_objective(const std::string& name);
Optimizer parse_optimizer(const std::string& name);
std::string to_string(Objective o);
std::string to_string(Optimizer o);

struct LearnerConfig {
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  std::uint64_t seed = 0;
  Objective objective = Objective::Mse;
  Optimizer optimizer = Optimizer::SgdPerTuple;
  std::size_t max_outer_iterations = 10000;
  double weight_cap = kDefaultWeightCap;
  double eta_min = 1e-12;
  double eta_max = 1e12;
  double eta_initial = 1.0;
  unsigned threads = 1;
  // The relative criterion compares the current best with the best from
  // this many outer passes earlier.
  std::size_t rel_window = 3;
  // Start from the database's known probabilities instead of random ones;
  // only unknown tuples are drawn at random.
  bool warm_start = false;
  InferenceConfig inference;

  void validate() const;
};

enum class StopReason { AbsoluteBound, RelativeBound, IterationLimit };

struct TracePoint {
  std::size_t outer_iter = 0;
  double objective = 0.0;
  double elapsed_ms = 0.0;
};

struct LearnResult {
  ProbabilityVector p;  // full database vector, learned entries filled in
  double best = 0.0;    // MSE, or P(conjunction) for the logical objective
  std::vector<TracePoint> trace;
  StopReason stop = StopReason::IterationLimit;
  std::size_t iterations = 0;
  std::size_t components = 0;

  bool converged() const { return stop != StopReason::IterationLimit; }
};

// Effective per-label weights: explicit weight or 1/|L|.
std::vector<double> label_weights(const std::vector<Label>& labels);

// Weighted sum of squared residuals. With default weights this is
// (1/|L|) * sum (P(phi_i) - l_i)^2.
double mse(const std::vector<Label>& labels, const ProbabilityVector& p, const InferenceConfig& cfg = {});

// d mse / d p(t).
double mse_gradient(const std::vector<Label>& labels, const ProbabilityVector& p, VarId t,
                    const InferenceConfig& cfg = {});

// Conjunction of phi_i for l_i = 1 and !phi_i for l_i = 0. Throws
// ObjectiveInapplicableError for any other target.
Formula logical_formula(const std::vector<Label>& labels);
double logical_objective(const std::vector<Label>& labels, const ProbabilityVector& p,
                         const InferenceConfig& cfg = {});

// Labels realizing the prior-weighted objective: data labels weighted
// c/|L|, one label (t, prior(t)) per learnable tuple weighted (1-c)/|T_l|.
std::vector<Label> prior_augment(const LearningProblem& problem);

// Connected components of learnable tuples linked through shared labels.
// Tuples that occur in no label are left out. Each component is sorted and
// components are ordered by their smallest tuple.
std::vector<std::vector<VarId>> learnable_components(const LearningProblem& problem);

LearnResult learn(const LearningProblem& problem, const LearnerConfig& cfg = {});

}  // namespace tuplearn
