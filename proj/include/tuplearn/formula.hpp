#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <set>
#include <span>
#include <vector>

namespace tuplearn {

// Dense index of a base tuple inside a ProbabilisticDatabase.
using VarId = std::uint32_t;

enum class NodeKind : std::uint8_t { False, True, Var, Not, And, Or };

// Immutable Boolean lineage formula over base tuples.
//
// Formulas are canonical by construction: nested conjunctions and
// disjunctions are flattened, children are sorted and deduplicated, and
// constants are folded eagerly. Two formulas built from equivalent
// constructor calls therefore compare structurally equal. Nodes are shared
// between formulas and are safe to read from several threads.
class Formula {
 public:
  Formula();  // False

  static Formula constant(bool value);
  static Formula var(VarId id);
  static Formula negation(const Formula& child);
  static Formula conjunction(std::vector<Formula> children);
  static Formula disjunction(std::vector<Formula> children);

  NodeKind kind() const;
  bool is_constant() const { return kind() == NodeKind::False || kind() == NodeKind::True; }
  bool is_false() const { return kind() == NodeKind::False; }
  bool is_true() const { return kind() == NodeKind::True; }

  // Only meaningful for Var nodes.
  VarId var_id() const;
  std::span<const Formula> children() const;

  // T(phi): sorted, without duplicates.
  std::span<const VarId> vars() const;
  bool mentions(VarId id) const;

  std::size_t hash() const;
  // Number of nodes in the tree (shared subtrees counted once per use).
  std::size_t size() const;

  const void* identity() const { return node_.get(); }

  friend bool operator==(const Formula& a, const Formula& b);
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Formula make(NodeKind kind, std::vector<Formula> children);
  static Formula junction(NodeKind kind, std::vector<Formula> children);

  std::shared_ptr<const Node> node_;
};

// Total structural order used for canonical child ordering.
int compare(const Formula& a, const Formula& b);

inline bool operator<(const Formula& a, const Formula& b) { return compare(a, b) < 0; }

inline Formula operator!(const Formula& f) { return Formula::negation(f); }
inline Formula operator&(const Formula& a, const Formula& b) { return Formula::conjunction({a, b}); }
inline Formula operator|(const Formula& a, const Formula& b) { return Formula::disjunction({a, b}); }

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

std::vector<VarId> tuples_of(const Formula& f);

// Standard Boolean semantics; `in_world(v)` decides whether tuple v is true.
bool evaluate(const Formula& f, const std::function<bool(VarId)>& in_world);
bool evaluate(const Formula& f, const std::set<VarId>& world);

// phi[t -> value], constant-folded.
Formula substitute(const Formula& f, VarId t, bool value);

// True iff the tuple sets of the given formulas are pairwise disjoint.
bool independent_partition(std::span<const Formula> children);
bool independent_partition(std::initializer_list<Formula> children);

// Groups `children` into connected components of the "shares a tuple"
// relation. Components and their members keep the input order.
std::vector<std::vector<std::size_t>> tuple_components(std::span<const Formula> children);

// Literals at the top conjunction level: a literal itself, or the Var/Not(Var)
// children of a conjunction.
struct TopLiterals {
  std::vector<VarId> positive;
  std::vector<VarId> negative;
};
TopLiterals top_literals(const Formula& f);

// Syntactic disjointness: one side has literal t, the other has !t, both at
// the top conjunction level.
bool syntactically_disjoint(const Formula& a, const Formula& b);

}  // namespace tuplearn
