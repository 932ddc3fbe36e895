#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tuplearn/formula.hpp"

namespace tuplearn {

// External name of a base tuple: relation plus argument constants.
struct TupleId {
  std::string relation;
  std::vector<std::string> args;

  friend bool operator==(const TupleId&, const TupleId&) = default;
  friend auto operator<=>(const TupleId&, const TupleId&) = default;
};

struct TupleIdHash {
  std::size_t operator()(const TupleId& t) const;
};

// Probability of each tuple indexed by VarId; NaN marks an unknown value.
using ProbabilityVector = Eigen::VectorXd;

bool is_known(double p);

// Tuple-independent probabilistic database (T, p) with a designated set of
// learnable tuples T_l. Tuples get dense VarIds in insertion order.
class ProbabilisticDatabase {
 public:
  struct Relation {
    std::size_t arity = 0;
    std::vector<VarId> tuples;
  };

  // `p == nullopt` adds the tuple to T_l with an unknown probability.
  // Re-adding an existing tuple is an error.
  VarId add_tuple(const std::string& relation, std::vector<std::string> args,
                  std::optional<double> p);
  VarId add_tuple(const TupleId& id, std::optional<double> p) { return add_tuple(id.relation, id.args, p); }

  // Declares a relation without tuples; arity must agree with later tuples.
  void declare_relation(const std::string& relation, std::size_t arity);

  std::size_t size() const { return tuples_.size(); }
  const TupleId& tuple(VarId id) const { return tuples_.at(id); }
  std::optional<VarId> find(const TupleId& id) const;
  VarId at(const TupleId& id) const;

  const std::map<std::string, Relation>& relations() const { return relations_; }
  const Relation* relation(const std::string& name) const;

  const ProbabilityVector& probabilities() const { return p_; }
  std::optional<double> probability(VarId id) const;
  void set_probability(VarId id, double p);
  void set_probabilities(const ProbabilityVector& p);

  bool learnable(VarId id) const { return learnable_.at(id); }
  void set_learnable(VarId id, bool value);
  std::vector<VarId> learnable_tuples() const;

  // Throws unless every non-learnable tuple has a probability in [0,1].
  void validate() const;

  friend bool operator==(const ProbabilisticDatabase& a, const ProbabilisticDatabase& b);

 private:
  std::vector<TupleId> tuples_;
  std::unordered_map<TupleId, VarId, TupleIdHash> index_;
  std::map<std::string, Relation> relations_;
  ProbabilityVector p_;
  std::vector<bool> learnable_;
};

// Textual name `rel(a,b)` of a tuple, quoting arguments where needed.
std::string tuple_text(const TupleId& id);

}  // namespace tuplearn
