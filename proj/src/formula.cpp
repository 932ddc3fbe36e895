#include "tuplearn/formula.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "tuplearn/errors.hpp"

namespace tuplearn {

struct Formula::Node {
  NodeKind kind = NodeKind::False;
  VarId var = 0;
  std::vector<Formula> children;
  std::vector<VarId> vars;
  std::size_t hash = 0;
  std::size_t size = 1;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t value) {
  return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

Formula Formula::make(NodeKind kind, std::vector<Formula> children) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->hash = mix(0, static_cast<std::size_t>(kind));
  for (const Formula& c : children) {
    node->hash = mix(node->hash, c.hash());
    node->size += c.size();
  }
  if (children.size() == 1) {
    node->vars = children.front().node_->vars;
  } else {
    for (const Formula& c : children) {
      std::vector<VarId> merged;
      merged.reserve(node->vars.size() + c.vars().size());
      std::set_union(node->vars.begin(), node->vars.end(), c.vars().begin(), c.vars().end(),
                     std::back_inserter(merged));
      node->vars = std::move(merged);
    }
  }
  node->children = std::move(children);
  return Formula(std::move(node));
}

Formula::Formula() : Formula(constant(false)) {}

Formula Formula::constant(bool value) {
  static const Formula kFalse = [] {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::False;
    n->hash = mix(0, static_cast<std::size_t>(NodeKind::False));
    return Formula(std::move(n));
  }();
  static const Formula kTrue = [] {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::True;
    n->hash = mix(0, static_cast<std::size_t>(NodeKind::True));
    return Formula(std::move(n));
  }();
  return value ? kTrue : kFalse;
}

Formula Formula::var(VarId id) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Var;
  n->var = id;
  n->vars = {id};
  n->hash = mix(mix(0, static_cast<std::size_t>(NodeKind::Var)), id);
  return Formula(std::move(n));
}

Formula Formula::negation(const Formula& child) {
  switch (child.kind()) {
    case NodeKind::False:
      return constant(true);
    case NodeKind::True:
      return constant(false);
    case NodeKind::Not:
      return child.children().front();
    default:
      return make(NodeKind::Not, {child});
  }
}

Formula Formula::junction(NodeKind kind, std::vector<Formula> children) {
  const NodeKind absorbing = kind == NodeKind::And ? NodeKind::False : NodeKind::True;
  const NodeKind neutral = kind == NodeKind::And ? NodeKind::True : NodeKind::False;

  std::vector<Formula> flat;
  flat.reserve(children.size());
  for (Formula& c : children) {
    if (c.kind() == absorbing) return constant(absorbing == NodeKind::True);
    if (c.kind() == neutral) continue;
    if (c.kind() == kind) {
      for (const Formula& g : c.children()) flat.push_back(g);
    } else {
      flat.push_back(std::move(c));
    }
  }
  std::sort(flat.begin(), flat.end(), [](const Formula& a, const Formula& b) { return compare(a, b) < 0; });
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());

  if (flat.empty()) return constant(neutral == NodeKind::True);
  if (flat.size() == 1) return flat.front();
  return make(kind, std::move(flat));
}

Formula Formula::conjunction(std::vector<Formula> children) {
  return junction(NodeKind::And, std::move(children));
}

Formula Formula::disjunction(std::vector<Formula> children) {
  return junction(NodeKind::Or, std::move(children));
}

NodeKind Formula::kind() const { return node_->kind; }
VarId Formula::var_id() const { return node_->var; }
std::span<const Formula> Formula::children() const { return node_->children; }
std::span<const VarId> Formula::vars() const { return node_->vars; }
std::size_t Formula::hash() const { return node_->hash; }
std::size_t Formula::size() const { return node_->size; }

bool Formula::mentions(VarId id) const {
  return std::binary_search(node_->vars.begin(), node_->vars.end(), id);
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash()) return false;
  return compare(a, b) == 0;
}

int compare(const Formula& a, const Formula& b) {
  if (a.identity() == b.identity()) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case NodeKind::False:
    case NodeKind::True:
      return 0;
    case NodeKind::Var:
      return a.var_id() == b.var_id() ? 0 : (a.var_id() < b.var_id() ? -1 : 1);
    default:
      break;
  }
  auto ca = a.children();
  auto cb = b.children();
  const std::size_t n = std::min(ca.size(), cb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(ca[i], cb[i]); c != 0) return c;
  }
  if (ca.size() != cb.size()) return ca.size() < cb.size() ? -1 : 1;
  return 0;
}

std::vector<VarId> tuples_of(const Formula& f) {
  return {f.vars().begin(), f.vars().end()};
}

bool evaluate(const Formula& f, const std::function<bool(VarId)>& in_world) {
  switch (f.kind()) {
    case NodeKind::False:
      return false;
    case NodeKind::True:
      return true;
    case NodeKind::Var:
      return in_world(f.var_id());
    case NodeKind::Not:
      return !evaluate(f.children().front(), in_world);
    case NodeKind::And:
      for (const Formula& c : f.children()) {
        if (!evaluate(c, in_world)) return false;
      }
      return true;
    case NodeKind::Or:
      for (const Formula& c : f.children()) {
        if (evaluate(c, in_world)) return true;
      }
      return false;
  }
  return false;
}

bool evaluate(const Formula& f, const std::set<VarId>& world) {
  return evaluate(f, [&world](VarId v) { return world.count(v) > 0; });
}

namespace {

Formula substitute_rec(const Formula& f, VarId t, bool value,
                       std::unordered_map<const void*, Formula>& memo) {
  if (!f.mentions(t)) return f;
  if (f.kind() == NodeKind::Var) return Formula::constant(value);
  if (auto it = memo.find(f.identity()); it != memo.end()) return it->second;

  Formula result;
  if (f.kind() == NodeKind::Not) {
    result = Formula::negation(substitute_rec(f.children().front(), t, value, memo));
  } else {
    std::vector<Formula> kids;
    kids.reserve(f.children().size());
    for (const Formula& c : f.children()) kids.push_back(substitute_rec(c, t, value, memo));
    result = f.kind() == NodeKind::And ? Formula::conjunction(std::move(kids))
                                       : Formula::disjunction(std::move(kids));
  }
  memo.emplace(f.identity(), result);
  return result;
}

}  // namespace

Formula substitute(const Formula& f, VarId t, bool value) {
  std::unordered_map<const void*, Formula> memo;
  return substitute_rec(f, t, value, memo);
}

bool independent_partition(std::span<const Formula> children) {
  std::vector<VarId> seen;
  for (const Formula& c : children) {
    for (VarId v : c.vars()) seen.push_back(v);
  }
  std::sort(seen.begin(), seen.end());
  return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
}

bool independent_partition(std::initializer_list<Formula> children) {
  return independent_partition(std::span<const Formula>(children.begin(), children.size()));
}

std::vector<std::vector<std::size_t>> tuple_components(std::span<const Formula> children) {
  const std::size_t n = children.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  std::unordered_map<VarId, std::size_t> owner;
  for (std::size_t i = 0; i < n; ++i) {
    for (VarId v : children[i].vars()) {
      auto [it, inserted] = owner.emplace(v, i);
      if (!inserted) {
        std::size_t a = find(i), b = find(it->second);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  std::vector<std::vector<std::size_t>> groups;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = find(i);
    auto [it, inserted] = slot.emplace(root, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

TopLiterals top_literals(const Formula& f) {
  TopLiterals out;
  auto add = [&out](const Formula& lit) {
    if (lit.kind() == NodeKind::Var) {
      out.positive.push_back(lit.var_id());
    } else if (lit.kind() == NodeKind::Not && lit.children().front().kind() == NodeKind::Var) {
      out.negative.push_back(lit.children().front().var_id());
    }
  };
  if (f.kind() == NodeKind::And) {
    for (const Formula& c : f.children()) add(c);
  } else {
    add(f);
  }
  std::sort(out.positive.begin(), out.positive.end());
  std::sort(out.negative.begin(), out.negative.end());
  return out;
}

namespace {

bool intersects(const std::vector<VarId>& a, const std::vector<VarId>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

}  // namespace

bool syntactically_disjoint(const Formula& a, const Formula& b) {
  TopLiterals la = top_literals(a);
  TopLiterals lb = top_literals(b);
  return intersects(la.positive, lb.negative) || intersects(la.negative, lb.positive);
}

}  // namespace tuplearn
