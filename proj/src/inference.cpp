#include "tuplearn/inference.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "tuplearn/errors.hpp"

namespace tuplearn {

void InferenceConfig::validate() const {
  if (shannon_budget < 0) throw InvalidArgumentError("shannon_budget must be >= 0");
  if (brute_force_cutoff < 1) throw InvalidArgumentError("brute_force_cutoff must be >= 1");
}

namespace {

double known(const ProbabilityVector& p, VarId v) {
  if (static_cast<Eigen::Index>(v) >= p.size() || !is_known(p[v])) {
    throw UnknownTupleError("probability of tuple #" + std::to_string(v) + " is unknown");
  }
  return p[v];
}

template <class Prob>
double enumerate_worlds(const Formula& f, const InferenceConfig& cfg, Prob&& prob) {
  if (f.is_constant()) return f.is_true() ? 1.0 : 0.0;
  const auto vars = f.vars();
  const std::size_t n = vars.size();
  if (n > static_cast<std::size_t>(cfg.brute_force_cutoff)) {
    throw OracleSizeError("enumeration over " + std::to_string(n) + " tuples exceeds cutoff " +
                          std::to_string(cfg.brute_force_cutoff));
  }
  std::vector<double> pv(n);
  for (std::size_t i = 0; i < n; ++i) pv[i] = prob(vars[i]);

  std::uint64_t mask = 0;
  auto in_world = [&](VarId v) {
    auto i = static_cast<std::size_t>(std::lower_bound(vars.begin(), vars.end(), v) - vars.begin());
    return ((mask >> i) & 1U) != 0;
  };
  double total = 0.0;
  const std::uint64_t worlds = std::uint64_t{1} << n;
  for (mask = 0; mask < worlds; ++mask) {
    if (!evaluate(f, in_world)) continue;
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= ((mask >> i) & 1U) ? pv[i] : 1.0 - pv[i];
    total += w;
  }
  return total;
}

// Most shared tuple among the given siblings; ties go to the smallest id.
VarId shannon_variable(std::span<const Formula> members) {
  std::map<VarId, int> counts;
  for (const Formula& m : members) {
    for (VarId v : m.vars()) ++counts[v];
  }
  VarId best = counts.begin()->first;
  int best_count = 0;
  for (const auto& [v, c] : counts) {
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  }
  return best;
}

bool pairwise_disjoint(std::span<const Formula> members) {
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (!syntactically_disjoint(members[i], members[j])) return false;
    }
  }
  return true;
}

std::vector<Formula> pick(std::span<const Formula> children, const std::vector<std::size_t>& idx) {
  std::vector<Formula> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(children[i]);
  return out;
}

std::span<const Formula> members_of(const Formula& g) {
  if (g.kind() == NodeKind::And || g.kind() == NodeKind::Or) return g.children();
  return {&g, 1};
}

class ExactEvaluator {
 public:
  ExactEvaluator(const ProbabilityVector& p, const InferenceConfig& cfg) : p_(p), cfg_(cfg) {}

  double eval(const Formula& f, int depth) {
    switch (f.kind()) {
      case NodeKind::False:
        return 0.0;
      case NodeKind::True:
        return 1.0;
      case NodeKind::Var:
        return known(p_, f.var_id());
      case NodeKind::Not:
        return 1.0 - eval(f.children().front(), depth);
      default:
        break;
    }
    if (auto it = memo_.find(f); it != memo_.end()) return it->second;

    const auto children = f.children();
    const auto comps = tuple_components(children);
    const bool conj = f.kind() == NodeKind::And;
    double acc = 1.0;
    for (const auto& comp : comps) {
      double v;
      if (comp.size() == 1) {
        v = eval(children[comp.front()], depth);
      } else {
        std::vector<Formula> members = pick(children, comp);
        if (!conj && pairwise_disjoint(members)) {
          v = 0.0;
          for (const Formula& m : members) v += eval(m, depth);
        } else {
          Formula g = comps.size() == 1 ? f
                                        : (conj ? Formula::conjunction(std::move(members))
                                                : Formula::disjunction(std::move(members)));
          v = blocked(g, depth);
        }
      }
      acc *= conj ? v : 1.0 - v;
    }
    const double result = conj ? acc : 1.0 - acc;
    memo_.emplace(f, result);
    return result;
  }

 private:
  double blocked(const Formula& g, int depth) {
    if (auto it = memo_.find(g); it != memo_.end()) return it->second;
    double result;
    if (depth < cfg_.shannon_budget) {
      const VarId v = shannon_variable(members_of(g));
      const double pv = known(p_, v);
      const double hi = eval(substitute(g, v, true), depth + 1);
      const double lo = eval(substitute(g, v, false), depth + 1);
      result = pv * hi + (1.0 - pv) * lo;
    } else if (g.vars().size() <= static_cast<std::size_t>(cfg_.brute_force_cutoff)) {
      result = enumerate_worlds(g, cfg_, [this](VarId v) { return known(p_, v); });
    } else {
      throw IntractableError("formula over " + std::to_string(g.vars().size()) +
                             " tuples exceeds the Shannon budget and the enumeration cutoff");
    }
    memo_.emplace(g, result);
    return result;
  }

  const ProbabilityVector& p_;
  const InferenceConfig& cfg_;
  std::unordered_map<Formula, double, FormulaHash> memo_;
};

class Flattener {
 public:
  explicit Flattener(const InferenceConfig& cfg) : cfg_(cfg) {}

  Formula flat(const Formula& f, int depth) {
    switch (f.kind()) {
      case NodeKind::False:
      case NodeKind::True:
      case NodeKind::Var:
        return f;
      case NodeKind::Not:
        return Formula::negation(flat(f.children().front(), depth));
      default:
        break;
    }
    if (auto it = memo_.find(f); it != memo_.end()) return it->second;

    const auto children = f.children();
    const auto comps = tuple_components(children);
    const bool conj = f.kind() == NodeKind::And;
    std::vector<Formula> parts;
    for (const auto& comp : comps) {
      if (comp.size() == 1) {
        parts.push_back(flat(children[comp.front()], depth));
        continue;
      }
      std::vector<Formula> members = pick(children, comp);
      if (!conj && pairwise_disjoint(members)) {
        std::vector<Formula> kids;
        for (const Formula& m : members) kids.push_back(flat(m, depth));
        if (pairwise_disjoint(kids)) {
          for (Formula& k : kids) parts.push_back(std::move(k));
          continue;
        }
      }
      Formula g = conj ? Formula::conjunction(std::move(members)) : Formula::disjunction(std::move(members));
      parts.push_back(blocked(g, depth));
    }
    Formula result = conj ? Formula::conjunction(std::move(parts)) : Formula::disjunction(std::move(parts));
    memo_.emplace(f, result);
    return result;
  }

 private:
  Formula blocked(const Formula& g, int depth) {
    if (depth >= cfg_.shannon_budget) return g;
    const VarId v = shannon_variable(members_of(g));
    Formula hi = flat(substitute(g, v, true), depth + 1);
    Formula lo = flat(substitute(g, v, false), depth + 1);
    if (hi == lo) return hi;
    const Formula t = Formula::var(v);
    return Formula::disjunction({Formula::conjunction({t, hi}), Formula::conjunction({Formula::negation(t), lo})});
  }

  const InferenceConfig& cfg_;
  std::unordered_map<Formula, Formula, FormulaHash> memo_;
};

}  // namespace

double prob_bruteforce(const Formula& f, const ProbabilityVector& p, const InferenceConfig& cfg) {
  cfg.validate();
  return enumerate_worlds(f, cfg, [&p](VarId v) { return known(p, v); });
}

double prob_exact(const Formula& f, const ProbabilityVector& p, const InferenceConfig& cfg) {
  cfg.validate();
  ExactEvaluator ev(p, cfg);
  return std::clamp(ev.eval(f, 0), 0.0, 1.0);
}

double derivative(const Formula& f, VarId t, const ProbabilityVector& p, const InferenceConfig& cfg) {
  if (!f.mentions(t)) return 0.0;
  return prob_exact(substitute(f, t, true), p, cfg) - prob_exact(substitute(f, t, false), p, cfg);
}

Formula flatten(const Formula& f, const InferenceConfig& cfg) {
  cfg.validate();
  return Flattener(cfg).flat(f, 0);
}

std::optional<bool> satisfiable(const Formula& f, const InferenceConfig& cfg) {
  if (f.is_constant()) return f.is_true();
  const auto vars = f.vars();
  const std::size_t n = vars.size();
  if (n > static_cast<std::size_t>(cfg.brute_force_cutoff)) return std::nullopt;
  std::uint64_t mask = 0;
  auto in_world = [&](VarId v) {
    auto i = static_cast<std::size_t>(std::lower_bound(vars.begin(), vars.end(), v) - vars.begin());
    return ((mask >> i) & 1U) != 0;
  };
  for (mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (evaluate(f, in_world)) return true;
  }
  return false;
}

class CircuitBuilder {
 public:
  CircuitBuilder(Circuit& c, const InferenceConfig& cfg) : c_(c), cfg_(cfg) {}

  std::uint32_t node(const Formula& f, int depth) {
    switch (f.kind()) {
      case NodeKind::False:
      case NodeKind::True:
        return emit({Circuit::Op::Const, 0, f.is_true() ? 1.0 : 0.0});
      case NodeKind::Var:
        return emit({Circuit::Op::Var, f.var_id()});
      case NodeKind::Not: {
        const std::uint32_t child = node(f.children().front(), depth);
        return emit({Circuit::Op::Not, 0, 0.0, child, 1});
      }
      default:
        break;
    }
    if (auto it = memo_.find(f); it != memo_.end()) return it->second;

    const auto children = f.children();
    const auto comps = tuple_components(children);
    const bool conj = f.kind() == NodeKind::And;
    std::vector<std::uint32_t> parts;
    for (const auto& comp : comps) {
      if (comp.size() == 1) {
        parts.push_back(node(children[comp.front()], depth));
        continue;
      }
      std::vector<Formula> members = pick(children, comp);
      if (!conj && pairwise_disjoint(members)) {
        std::vector<std::uint32_t> terms;
        for (const Formula& m : members) terms.push_back(node(m, depth));
        parts.push_back(group(Circuit::Op::Sum, terms));
        continue;
      }
      Formula g = comps.size() == 1 ? f
                                    : (conj ? Formula::conjunction(std::move(members))
                                            : Formula::disjunction(std::move(members)));
      parts.push_back(blocked(g, depth));
    }
    const std::uint32_t out =
        parts.size() == 1 ? parts.front() : group(conj ? Circuit::Op::Product : Circuit::Op::IndependentOr, parts);
    memo_.emplace(f, out);
    return out;
  }

 private:
  std::uint32_t emit(Circuit::Instr in) {
    c_.ops_.push_back(in);
    return static_cast<std::uint32_t>(c_.ops_.size() - 1);
  }

  std::uint32_t group(Circuit::Op op, const std::vector<std::uint32_t>& operands) {
    const auto first = static_cast<std::uint32_t>(c_.args_.size());
    c_.args_.insert(c_.args_.end(), operands.begin(), operands.end());
    return emit({op, 0, 0.0, first, static_cast<std::uint32_t>(operands.size())});
  }

  std::uint32_t blocked(const Formula& g, int depth) {
    if (auto it = memo_.find(g); it != memo_.end()) return it->second;
    std::uint32_t out;
    if (depth < cfg_.shannon_budget) {
      const VarId v = shannon_variable(members_of(g));
      const std::uint32_t hi = node(substitute(g, v, true), depth + 1);
      const std::uint32_t lo = node(substitute(g, v, false), depth + 1);
      out = emit({Circuit::Op::Shannon, v, 0.0, hi, lo});
    } else if (g.vars().size() <= static_cast<std::size_t>(cfg_.brute_force_cutoff)) {
      c_.enumerated_.push_back(g);
      out = emit({Circuit::Op::Enumerate, 0, 0.0, static_cast<std::uint32_t>(c_.enumerated_.size() - 1), 0});
    } else {
      throw IntractableError("formula over " + std::to_string(g.vars().size()) +
                             " tuples exceeds the Shannon budget and the enumeration cutoff");
    }
    memo_.emplace(g, out);
    return out;
  }

  Circuit& c_;
  const InferenceConfig& cfg_;
  std::unordered_map<Formula, std::uint32_t, FormulaHash> memo_;
};

Circuit Circuit::compile(const Formula& f, const InferenceConfig& cfg) {
  cfg.validate();
  Circuit c;
  c.cfg_ = cfg;
  c.vars_.assign(f.vars().begin(), f.vars().end());
  CircuitBuilder builder(c, cfg);
  const std::uint32_t root = builder.node(f, 0);
  if (root != c.ops_.size() - 1) {
    // Root was memoized earlier in the stream; copy it to the end so the
    // result is always the last slot.
    c.ops_.push_back({Op::Sum, 0, 0.0, static_cast<std::uint32_t>(c.args_.size()), 1});
    c.args_.push_back(root);
  }
  return c;
}

double Circuit::evaluate(const ProbabilityVector& p, std::vector<double>& s, VarId forced,
                         double forced_value) const {
  s.resize(ops_.size());
  auto prob = [&](VarId v) { return v == forced ? forced_value : p[v]; };
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Instr& in = ops_[i];
    double v = 0.0;
    switch (in.op) {
      case Op::Const:
        v = in.value;
        break;
      case Op::Var:
        v = prob(in.var);
        break;
      case Op::Not:
        v = 1.0 - s[in.first];
        break;
      case Op::Product:
        v = 1.0;
        for (std::uint32_t k = 0; k < in.count; ++k) v *= s[args_[in.first + k]];
        break;
      case Op::IndependentOr:
        v = 1.0;
        for (std::uint32_t k = 0; k < in.count; ++k) v *= 1.0 - s[args_[in.first + k]];
        v = 1.0 - v;
        break;
      case Op::Sum:
        for (std::uint32_t k = 0; k < in.count; ++k) v += s[args_[in.first + k]];
        break;
      case Op::Shannon: {
        const double pv = prob(in.var);
        v = pv * s[in.first] + (1.0 - pv) * s[in.count];
        break;
      }
      case Op::Enumerate:
        v = enumerate_worlds(enumerated_[in.first], cfg_, prob);
        break;
    }
    s[i] = v;
  }
  return s.empty() ? 0.0 : s.back();
}

double Circuit::evaluate(const ProbabilityVector& p) const {
  std::vector<double> scratch;
  return evaluate(p, scratch);
}

}  // namespace tuplearn
