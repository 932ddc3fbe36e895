#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "tuplearn/database.hpp"
#include "tuplearn/formula.hpp"

namespace tuplearn {

struct InferenceConfig {
  // Maximum nesting depth of Shannon expansions along any recursion path.
  int shannon_budget = 32;
  // Largest |T(phi)| the possible-worlds enumeration accepts.
  int brute_force_cutoff = 20;

  void validate() const;
};

// Sum of P(V, T(phi)) over the subsets V of T(phi) that satisfy phi.
double prob_bruteforce(const Formula& f, const ProbabilityVector& p, const InferenceConfig& cfg = {});

// Exact marginal via independent-and/or, disjoint-or and negation, with
// Shannon expansion on the most shared tuple where those rules are blocked.
double prob_exact(const Formula& f, const ProbabilityVector& p, const InferenceConfig& cfg = {});

// dP(phi)/dp(t) = P(phi[t->true]) - P(phi[t->false]); p(t) itself may be
// unknown.
double derivative(const Formula& f, VarId t, const ProbabilityVector& p, const InferenceConfig& cfg = {});

// Logically equivalent formula on which prob_exact needs no Shannon
// expansion (best effort once the budget runs out).
Formula flatten(const Formula& f, const InferenceConfig& cfg = {});

// Some satisfying world of phi if |T(phi)| is within the cutoff; nullopt
// when the formula is larger. An unsatisfiable formula yields an engaged
// optional holding false.
std::optional<bool> satisfiable(const Formula& f, const InferenceConfig& cfg = {});

// Arithmetic circuit for P(phi), compiled once and evaluated many times for
// different probability vectors. Evaluation is linear in the circuit size.
class Circuit {
 public:
  static constexpr VarId kNoOverride = std::numeric_limits<VarId>::max();

  static Circuit compile(const Formula& f, const InferenceConfig& cfg = {});

  // P(phi) under p, with p(forced) replaced by `forced_value`. `scratch` is
  // resized as needed and can be reused across calls.
  double evaluate(const ProbabilityVector& p, std::vector<double>& scratch,
                  VarId forced = kNoOverride, double forced_value = 0.0) const;
  double evaluate(const ProbabilityVector& p) const;

  std::size_t size() const { return ops_.size(); }
  std::span<const VarId> vars() const { return vars_; }

 private:
  enum class Op : std::uint8_t { Const, Var, Not, Product, IndependentOr, Sum, Shannon, Enumerate };
  struct Instr {
    Op op;
    VarId var = 0;
    double value = 0.0;
    std::uint32_t first = 0;  // operand range in args_, or hi/lo for Shannon
    std::uint32_t count = 0;
  };

  friend class CircuitBuilder;

  std::vector<Instr> ops_;
  std::vector<std::uint32_t> args_;
  std::vector<Formula> enumerated_;
  std::vector<VarId> vars_;
  InferenceConfig cfg_;
};

}  // namespace tuplearn
