#pragma once

// Reference implementations used to check the library. They share no code
// with the engine beyond the Formula constructors.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tuplearn/applications.hpp"
#include "tuplearn/database.hpp"
#include "tuplearn/datalog.hpp"
#include "tuplearn/formula.hpp"
#include "tuplearn/learning.hpp"

namespace oracle {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);
std::size_t below(Rng& rng, std::size_t n);

// Unsimplified formula tree, kept exactly as generated.
struct Raw {
  tuplearn::NodeKind kind = tuplearn::NodeKind::False;
  tuplearn::VarId var = 0;
  std::vector<Raw> kids;
};

// Random tree over variables 0..num_vars-1; leaves are variables or, rarely,
// constants.
Raw random_raw(Rng& rng, std::size_t num_vars, int depth);
tuplearn::Formula build(const Raw& r);

bool eval(const Raw& r, std::uint64_t world);
bool eval(const tuplearn::Formula& f, std::uint64_t world);

// Sum of world weights over all 2^num_vars worlds on which pred holds.
double enumerate(std::size_t num_vars, const std::vector<double>& p, const std::function<bool(std::uint64_t)>& pred);
double prob(const Raw& r, std::size_t num_vars, const std::vector<double>& p);
double prob(const tuplearn::Formula& f, std::size_t num_vars, const std::vector<double>& p);

tuplearn::ProbabilityVector to_vector(const std::vector<double>& p);
std::vector<double> random_probabilities(Rng& rng, std::size_t n);

// Central difference (f(x+h) - f(x-h)) / 2h.
double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6);

// Squared-error objective from first principles over world enumeration.
double mse(const std::vector<tuplearn::Label>& labels, std::size_t num_vars, const std::vector<double>& p);

// Minimum of f over the grid {0, step, ..., 1}^2.
struct GridMin {
  double value;
  double x;
  double y;
};
GridMin grid_min(const std::function<double(double, double)>& f, double step = 1e-3);

// Satisfying assignment by exhaustive search.
std::optional<std::vector<bool>> solve(const tuplearn::Cnf& cnf);

// Naive Datalog evaluation on a deterministic database: world holds the
// present base tuples. Rules are evaluated by enumerating assignments over
// the active domain. Returns all derived facts "Rel(a,b)".
std::vector<std::string> derive(const tuplearn::DeductionProgram& program, const tuplearn::ProbabilisticDatabase& db,
                                std::uint64_t world);

}  // namespace oracle
