#include "tuplearn/applications.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "tuplearn/errors.hpp"
#include "tuplearn/inference.hpp"

namespace tuplearn {

LearningProblem conditioning_problem(const ProbabilisticDatabase& db, const std::vector<Formula>& constraints,
                                     std::vector<VarId> learnable) {
  LearningProblem problem;
  problem.db = db;
  problem.learnable = std::move(learnable);
  for (const Formula& f : constraints) problem.labels.push_back({f, 1.0, std::nullopt});
  return problem;
}

ConditionResult condition(const ProbabilisticDatabase& db, const std::vector<Formula>& constraints,
                          const LearnerConfig& cfg) {
  cfg.validate();
  const Formula all = Formula::conjunction(constraints);
  if (satisfiable(all, cfg.inference) == std::optional<bool>(false)) {
    throw InconsistencyError("constraints are unsatisfiable");
  }

  std::vector<VarId> every(db.size());
  std::iota(every.begin(), every.end(), VarId{0});
  LearningProblem problem = conditioning_problem(db, constraints, std::move(every));

  // MSE <= e implies P(conjunction) >= 1 - n * sqrt(n * e) for n labels.
  LearnerConfig inner = cfg;
  inner.warm_start = true;
  const double n = std::max<double>(1.0, static_cast<double>(constraints.size()));
  inner.eps_abs = std::min(cfg.eps_abs, cfg.eps_abs * cfg.eps_abs / (n * n * n));

  ConditionResult out;
  out.learn = learn(problem, inner);
  out.p = out.learn.p;
  out.constraint_probability = prob_exact(all, out.p, cfg.inference);
  out.satisfied = out.constraint_probability >= 1.0 - cfg.eps_abs;
  return out;
}

LearningProblem derive_missing_tuples(const ProbabilisticDatabase& db, const std::vector<Formula>& constraints) {
  return conditioning_problem(db, constraints, db.learnable_tuples());
}

CleanResult update_clean(const ProbabilisticDatabase& db, const std::vector<Label>& labels, const CleanOptions& options,
                         const LearnerConfig& cfg) {
  if (!(options.zero_tol > 0.0 && options.zero_tol < 0.5) || !(options.one_tol > 0.0 && options.one_tol < 0.5)) {
    throw InvalidArgumentError("cleaning tolerances must lie in (0, 0.5)");
  }
  if (!(options.prior_weight >= 0.0 && options.prior_weight <= 1.0)) {
    throw InvalidArgumentError("prior weight c must lie in [0,1]");
  }

  LearningProblem problem;
  problem.db = db;
  problem.labels = labels;
  if (options.learnable) {
    problem.learnable = *options.learnable;
  } else {
    problem.learnable.resize(db.size());
    std::iota(problem.learnable.begin(), problem.learnable.end(), VarId{0});
  }
  if (options.prior_weight < 1.0) {
    Prior prior;
    prior.c = options.prior_weight;
    for (VarId t : problem.learnable) {
      const std::optional<double> v = db.probability(t);
      if (!v) throw UnknownTupleError("tuple " + tuple_text(db.tuple(t)) + " has no probability to use as a prior");
      prior.values.push_back(*v);
    }
    problem.prior = std::move(prior);
  }

  LearnerConfig inner = cfg;
  inner.warm_start = true;
  CleanResult out;
  out.learn = learn(problem, inner);
  out.p = out.learn.p;
  std::vector<VarId> order = problem.learnable;
  std::sort(order.begin(), order.end());
  for (VarId t : order) {
    if (out.p[t] <= options.zero_tol) out.deletions.push_back(t);
    if (out.p[t] >= 1.0 - options.one_tol) out.certain.push_back(t);
  }
  return out;
}

namespace {

std::string row_text(const std::vector<std::optional<std::string>>& row) {
  std::string out = "(";
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ",";
    out += row[i] ? *row[i] : "?";
  }
  return out + ")";
}

}  // namespace

IncompleteReduction derive_from_incomplete(const IncompleteDatabase& idb,
                                           const std::optional<std::vector<std::size_t>>& anchors) {
  const std::size_t k = idb.arity;
  if (idb.domains.size() != k) throw InvalidArgumentError("need one domain per attribute");
  for (const auto& d : idb.domains) {
    if (d.empty()) throw InvalidArgumentError("attribute domains must be nonempty");
  }
  for (const auto& row : idb.complete) {
    if (row.size() != k) throw ArityError("complete row of wrong arity in " + idb.relation);
  }
  if (anchors) {
    for (std::size_t a : *anchors) {
      if (a >= k) throw InvalidArgumentError("anchor position out of range");
    }
  }

  IncompleteReduction out;
  out.candidate_relation = idb.relation + "Candidate";
  out.completed_relation = idb.relation + "Completed";

  std::vector<std::vector<std::optional<std::string>>> rows;
  for (const auto& row : idb.incomplete) {
    if (row.size() != k) throw ArityError("incomplete row of wrong arity in " + idb.relation);
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
  }

  ProbabilisticDatabase& db = out.problem.db;
  db.declare_relation(out.candidate_relation, k + 1);
  for (const auto& row : idb.complete) {
    if (!db.find({idb.relation, row})) db.add_tuple(idb.relation, row, 1.0);
  }

  struct Pending {
    std::vector<std::string> key;  // block id followed by the completed values
    std::size_t count;
  };
  std::vector<std::vector<Pending>> pending(rows.size());

  for (std::size_t b = 0; b < rows.size(); ++b) {
    const auto& row = rows[b];
    std::vector<std::size_t> missing, anchor_pos;
    for (std::size_t i = 0; i < k; ++i) {
      if (!row[i]) missing.push_back(i);
    }
    if (anchors) {
      for (std::size_t a : *anchors) {
        if (!row[a]) throw InvalidArgumentError("anchor attribute " + std::to_string(a) + " is missing in " +
                                                idb.relation + row_text(row));
        anchor_pos.push_back(a);
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        if (row[i]) anchor_pos.push_back(i);
      }
    }

    // Enumerate completions over the domains of the missing attributes.
    std::vector<std::size_t> digit(missing.size(), 0);
    std::size_t total = 0;
    while (true) {
      std::vector<std::string> full(k);
      for (std::size_t i = 0; i < k; ++i) {
        if (row[i]) full[i] = *row[i];
      }
      for (std::size_t m = 0; m < missing.size(); ++m) full[missing[m]] = idb.domains[missing[m]][digit[m]];

      std::size_t count = 0;
      for (const auto& c : idb.complete) {
        bool match = true;
        for (std::size_t a : anchor_pos) match = match && c[a] == full[a];
        for (std::size_t m : missing) match = match && c[m] == full[m];
        count += match;
      }
      total += count;
      std::vector<std::string> key{std::to_string(b)};
      key.insert(key.end(), full.begin(), full.end());
      pending[b].push_back({std::move(key), count});

      std::size_t pos = 0;
      while (pos < digit.size() && ++digit[pos] == idb.domains[missing[pos]].size()) digit[pos++] = 0;
      if (pos == digit.size()) break;
    }
    if (total == 0) throw NoEvidenceError("no complete tuple supports a completion of " + idb.relation + row_text(row));

    IncompleteReduction::Block block;
    block.row = row;
    block.total = total;
    out.blocks.push_back(std::move(block));
  }

  for (const auto& block : pending) {
    for (const Pending& c : block) db.add_tuple(out.candidate_relation, c.key, std::nullopt);
  }

  for (const auto& block : pending) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      DeductionRule rule;
      auto atom = [](const std::string& rel, const std::vector<std::string>& key) {
        Atom a{rel, {}};
        for (const std::string& v : key) a.args.push_back(Term::constant(v));
        return a;
      };
      rule.head = atom(out.completed_relation, block[i].key);
      rule.positive.push_back(atom(out.candidate_relation, block[i].key));
      for (std::size_t j = 0; j < block.size(); ++j) {
        if (j != i) rule.negative.push_back(atom(out.candidate_relation, block[j].key));
      }
      out.program.rules.push_back(std::move(rule));
    }
  }
  validate(out.program);

  std::map<TupleId, Formula> lineage;
  for (DerivedTuple& d : ground(out.program, db)) lineage.emplace(std::move(d.tuple), std::move(d.lineage));

  out.problem.learnable = db.learnable_tuples();
  for (std::size_t b = 0; b < pending.size(); ++b) {
    IncompleteReduction::Block& block = out.blocks[b];
    for (const Pending& c : pending[b]) {
      auto it = lineage.find({out.completed_relation, c.key});
      const Formula f = it == lineage.end() ? Formula::constant(false) : it->second;
      block.labels.push_back(out.problem.labels.size());
      block.counts.push_back(c.count);
      out.problem.labels.push_back(
          {f, static_cast<double>(c.count) / static_cast<double>(block.total), std::nullopt});
    }
  }
  return out;
}

SatEncoding encode_3sat(const Cnf& cnf) {
  SatEncoding enc;
  ProbabilisticDatabase& db = enc.problem.db;
  for (std::size_t i = 1; i <= cnf.num_vars; ++i) enc.primary.push_back(db.add_tuple("X", {std::to_string(i)}, std::nullopt));
  for (std::size_t i = 1; i <= cnf.num_vars; ++i) enc.shadow.push_back(db.add_tuple("Y", {std::to_string(i)}, std::nullopt));
  enc.problem.learnable = db.learnable_tuples();

  auto& labels = enc.problem.labels;
  for (std::size_t i = 0; i < cnf.num_vars; ++i) {
    const Formula t = Formula::var(enc.primary[i]), s = Formula::var(enc.shadow[i]);
    labels.push_back({(t & s) | ((!t) & (!s)), 1.0, std::nullopt});
  }
  for (const auto& clause : cnf.clauses) {
    std::vector<Formula> lits;
    for (int lit : clause) {
      const std::size_t v = static_cast<std::size_t>(std::abs(lit));
      if (lit == 0 || v > cnf.num_vars) throw InvalidArgumentError("literal " + std::to_string(lit) + " out of range");
      const Formula t = Formula::var(enc.primary[v - 1]);
      lits.push_back(lit > 0 ? t : !t);
    }
    labels.push_back({Formula::disjunction(std::move(lits)), 1.0, std::nullopt});
  }
  return enc;
}

std::vector<bool> decode_assignment(const SatEncoding& enc, const ProbabilityVector& p) {
  std::vector<bool> out;
  out.reserve(enc.primary.size());
  for (VarId t : enc.primary) out.push_back(p[t] >= 0.5);
  return out;
}

bool satisfies(const Cnf& cnf, const std::vector<bool>& assignment) {
  for (const auto& clause : cnf.clauses) {
    bool sat = false;
    for (int lit : clause) {
      const bool value = assignment.at(static_cast<std::size_t>(std::abs(lit)) - 1);
      sat = sat || (lit > 0) == value;
    }
    if (!sat) return false;
  }
  return true;
}

Cnf random_planted_3cnf(std::size_t num_vars, std::size_t num_clauses, std::uint64_t seed) {
  if (num_vars < 3) throw InvalidArgumentError("a 3-CNF needs at least three variables");
  std::mt19937_64 rng(seed);
  std::vector<bool> planted(num_vars);
  for (std::size_t i = 0; i < num_vars; ++i) planted[i] = rng() & 1;

  Cnf cnf;
  cnf.num_vars = num_vars;
  while (cnf.clauses.size() < num_clauses) {
    std::vector<int> clause;
    while (clause.size() < 3) {
      const int v = static_cast<int>(rng() % num_vars) + 1;
      if (std::none_of(clause.begin(), clause.end(), [&](int l) { return std::abs(l) == v; })) {
        clause.push_back((rng() & 1) ? v : -v);
      }
    }
    if (satisfies(Cnf{num_vars, {clause}}, planted)) cnf.clauses.push_back(std::move(clause));
  }
  return cnf;
}

}  // namespace tuplearn
