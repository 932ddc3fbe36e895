#include "tuplearn/database.hpp"

#include <cmath>
#include <limits>

#include "tuplearn/errors.hpp"
#include "tuplearn/formula_io.hpp"

namespace tuplearn {

std::size_t TupleIdHash::operator()(const TupleId& t) const {
  std::size_t h = std::hash<std::string>{}(t.relation);
  for (const std::string& a : t.args) {
    h ^= std::hash<std::string>{}(a) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

bool is_known(double p) { return !std::isnan(p); }

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgumentError("probability " + std::to_string(p) + " outside [0,1]");
  }
}

}  // namespace

void ProbabilisticDatabase::declare_relation(const std::string& relation, std::size_t arity) {
  auto [it, inserted] = relations_.try_emplace(relation);
  if (inserted) {
    it->second.arity = arity;
  } else if (it->second.arity != arity) {
    throw ArityError("relation " + relation + " has arity " + std::to_string(it->second.arity) +
                     ", not " + std::to_string(arity));
  }
}

VarId ProbabilisticDatabase::add_tuple(const std::string& relation, std::vector<std::string> args,
                                       std::optional<double> p) {
  if (p) check_probability(*p);
  declare_relation(relation, args.size());
  TupleId id{relation, std::move(args)};
  if (index_.count(id)) throw InvalidArgumentError("duplicate tuple " + tuple_text(id));

  const auto var = static_cast<VarId>(tuples_.size());
  index_.emplace(id, var);
  relations_[relation].tuples.push_back(var);
  tuples_.push_back(std::move(id));

  p_.conservativeResize(static_cast<Eigen::Index>(tuples_.size()));
  p_[var] = p ? *p : std::numeric_limits<double>::quiet_NaN();
  learnable_.push_back(!p.has_value());
  return var;
}

std::optional<VarId> ProbabilisticDatabase::find(const TupleId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VarId ProbabilisticDatabase::at(const TupleId& id) const {
  if (auto v = find(id)) return *v;
  throw UnknownTupleError("no tuple " + tuple_text(id));
}

const ProbabilisticDatabase::Relation* ProbabilisticDatabase::relation(const std::string& name) const {
  auto it = relations_.find(name);
  return it == relations_.end() ? nullptr : &it->second;
}

std::optional<double> ProbabilisticDatabase::probability(VarId id) const {
  double p = p_[id];
  if (!is_known(p)) return std::nullopt;
  return p;
}

void ProbabilisticDatabase::set_probability(VarId id, double p) {
  check_probability(p);
  p_[id] = p;
}

void ProbabilisticDatabase::set_probabilities(const ProbabilityVector& p) {
  if (p.size() != p_.size()) throw InvalidArgumentError("probability vector has wrong size");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (is_known(p[i])) check_probability(p[i]);
  }
  p_ = p;
}

void ProbabilisticDatabase::set_learnable(VarId id, bool value) {
  if (!value && !is_known(p_[id])) {
    throw InvalidArgumentError("tuple " + tuple_text(tuples_.at(id)) +
                               " has no probability and must stay learnable");
  }
  learnable_.at(id) = value;
}

std::vector<VarId> ProbabilisticDatabase::learnable_tuples() const {
  std::vector<VarId> out;
  for (std::size_t i = 0; i < learnable_.size(); ++i) {
    if (learnable_[i]) out.push_back(static_cast<VarId>(i));
  }
  return out;
}

void ProbabilisticDatabase::validate() const {
  for (std::size_t i = 0; i < tuples_.size(); ++i) {
    if (!learnable_[i] && !is_known(p_[static_cast<Eigen::Index>(i)])) {
      throw UnknownTupleError("fixed tuple " + tuple_text(tuples_[i]) + " has no probability");
    }
  }
}

bool operator==(const ProbabilisticDatabase& a, const ProbabilisticDatabase& b) {
  if (a.tuples_ != b.tuples_ || a.learnable_ != b.learnable_) return false;
  for (Eigen::Index i = 0; i < a.p_.size(); ++i) {
    const double x = a.p_[i], y = b.p_[i];
    if (is_known(x) != is_known(y)) return false;
    if (is_known(x) && x != y) return false;
  }
  if (a.relations_.size() != b.relations_.size()) return false;
  for (const auto& [name, rel] : a.relations_) {
    const auto* other = b.relation(name);
    if (!other || other->arity != rel.arity || other->tuples != rel.tuples) return false;
  }
  return true;
}

std::string tuple_text(const TupleId& id) {
  std::string out = id.relation + "(";
  for (std::size_t i = 0; i < id.args.size(); ++i) {
    if (i) out += ",";
    out += quote_constant(id.args[i]);
  }
  return out + ")";
}

}  // namespace tuplearn
