#include "tuplearn/learning.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "tuplearn/errors.hpp"

namespace tuplearn {

LearningProblem LearningProblem::from_database(ProbabilisticDatabase db, std::vector<Label> labels) {
  LearningProblem out;
  out.learnable = db.learnable_tuples();
  out.db = std::move(db);
  out.labels = std::move(labels);
  return out;
}

void LearningProblem::validate() const {
  std::vector<bool> seen(db.size(), false);
  for (VarId t : learnable) {
    if (t >= db.size()) throw DanglingReferenceError("learnable tuple #" + std::to_string(t) + " is not in the database");
    if (seen[t]) throw InvalidArgumentError("learnable tuple #" + std::to_string(t) + " listed twice");
    seen[t] = true;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label& l = labels[i];
    if (!(l.target >= 0.0 && l.target <= 1.0)) {
      throw InvalidArgumentError("label " + std::to_string(i) + " has target outside [0,1]");
    }
    if (l.weight && !(*l.weight >= 0.0 && std::isfinite(*l.weight))) {
      throw InvalidArgumentError("label " + std::to_string(i) + " has an invalid weight");
    }
    const auto vars = l.formula.vars();
    if (!vars.empty() && vars.back() >= db.size()) {
      throw DanglingReferenceError("label " + std::to_string(i) + " references tuple #" +
                                   std::to_string(vars.back()) + " outside the database");
    }
  }
  if (prior) {
    if (!(prior->c >= 0.0 && prior->c <= 1.0)) throw InvalidArgumentError("prior weight c must lie in [0,1]");
    if (prior->values.size() != learnable.size()) {
      throw InvalidArgumentError("prior must give one value per learnable tuple");
    }
    for (double v : prior->values) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgumentError("prior value outside [0,1]");
    }
  }
}

Objective parse_objective(const std::string& name) {
  if (name == "mse") return Objective::Mse;
  if (name == "logical") return Objective::Logical;
  throw InvalidArgumentError("unknown objective '" + name + "'");
}

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd-per-tuple") return Optimizer::SgdPerTuple;
  if (name == "sgd-single") return Optimizer::SgdSingle;
  if (name == "gd") return Optimizer::Gd;
  throw InvalidArgumentError("unknown optimizer '" + name + "'");
}

std::string to_string(Objective o) { return o == Objective::Mse ? "mse" : "logical"; }

std::string to_string(Optimizer o) {
  switch (o) {
    case Optimizer::SgdPerTuple: return "sgd-per-tuple";
    case Optimizer::SgdSingle: return "sgd-single";
    case Optimizer::Gd: return "gd";
  }
  return "";
}

void LearnerConfig::validate() const {
  if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) throw InvalidArgumentError("eps_abs and eps_rel must be positive");
  if (!(weight_cap > 0.0)) throw InvalidArgumentError("weight cap must be positive");
  if (!(eta_min > 0.0 && eta_min <= eta_initial && eta_initial <= eta_max)) {
    throw InvalidArgumentError("learning rates must satisfy 0 < eta_min <= eta_initial <= eta_max");
  }
  if (threads == 0) throw InvalidArgumentError("threads must be at least 1");
  if (rel_window == 0) throw InvalidArgumentError("rel_window must be at least 1");
  inference.validate();
}

std::vector<double> label_weights(const std::vector<Label>& labels) {
  std::vector<double> w(labels.size());
  const double fallback = labels.empty() ? 0.0 : 1.0 / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i].weight.value_or(fallback);
  return w;
}

namespace {

[[noreturn]] void rethrow_for_label(std::size_t i, const IntractableError& e) {
  throw IntractableError("label " + std::to_string(i) + ": " + e.what());
}

}  // namespace

double mse(const std::vector<Label>& labels, const ProbabilityVector& p, const InferenceConfig& cfg) {
  const std::vector<double> w = label_weights(labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    try {
      const double r = prob_exact(labels[i].formula, p, cfg) - labels[i].target;
      sum += w[i] * r * r;
    } catch (const IntractableError& e) {
      rethrow_for_label(i, e);
    }
  }
  return sum;
}

double mse_gradient(const std::vector<Label>& labels, const ProbabilityVector& p, VarId t,
                    const InferenceConfig& cfg) {
  const std::vector<double> w = label_weights(labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].formula.mentions(t)) continue;
    try {
      const double r = prob_exact(labels[i].formula, p, cfg) - labels[i].target;
      sum += w[i] * 2.0 * r * derivative(labels[i].formula, t, p, cfg);
    } catch (const IntractableError& e) {
      rethrow_for_label(i, e);
    }
  }
  return sum;
}

Formula logical_formula(const std::vector<Label>& labels) {
  std::vector<Formula> parts;
  parts.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label& l = labels[i];
    if (l.target == 1.0) {
      parts.push_back(l.formula);
    } else if (l.target == 0.0) {
      parts.push_back(Formula::negation(l.formula));
    } else {
      throw ObjectiveInapplicableError("logical objective needs Boolean labels; label " + std::to_string(i) +
                                       " has target " + std::to_string(l.target));
    }
  }
  return Formula::conjunction(std::move(parts));
}

double logical_objective(const std::vector<Label>& labels, const ProbabilityVector& p, const InferenceConfig& cfg) {
  return prob_exact(logical_formula(labels), p, cfg);
}

std::vector<Label> prior_augment(const LearningProblem& problem) {
  if (!problem.prior) return problem.labels;
  const Prior& prior = *problem.prior;
  if (!(prior.c >= 0.0 && prior.c <= 1.0)) throw InvalidArgumentError("prior weight c must lie in [0,1]");
  if (prior.values.size() != problem.learnable.size()) {
    throw InvalidArgumentError("prior must give one value per learnable tuple");
  }
  std::vector<Label> out;
  out.reserve(problem.labels.size() + problem.learnable.size());
  const std::vector<double> base = label_weights(problem.labels);
  for (std::size_t i = 0; i < problem.labels.size(); ++i) {
    Label l = problem.labels[i];
    l.weight = prior.c * base[i];
    out.push_back(std::move(l));
  }
  const double wp = problem.learnable.empty() ? 0.0 : (1.0 - prior.c) / static_cast<double>(problem.learnable.size());
  for (std::size_t k = 0; k < problem.learnable.size(); ++k) {
    out.push_back({Formula::var(problem.learnable[k]), prior.values[k], wp});
  }
  return out;
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

std::vector<std::vector<VarId>> components_of(std::size_t n, const std::vector<bool>& learnable,
                                              const std::vector<std::span<const VarId>>& scopes) {
  UnionFind uf(n);
  std::vector<bool> used(n, false);
  for (const auto& vars : scopes) {
    std::size_t first = n;
    for (VarId v : vars) {
      if (!learnable[v]) continue;
      used[v] = true;
      if (first == n) {
        first = v;
      } else {
        uf.unite(first, v);
      }
    }
  }
  std::vector<std::vector<VarId>> out;
  std::vector<std::size_t> slot(n, n);
  for (VarId v = 0; v < n; ++v) {
    if (!used[v]) continue;
    const std::size_t root = uf.find(v);
    if (slot[root] == n) {
      slot[root] = out.size();
      out.emplace_back();
    }
    out[slot[root]].push_back(v);
  }
  return out;
}

std::vector<bool> learnable_mask(const LearningProblem& problem) {
  std::vector<bool> mask(problem.db.size(), false);
  for (VarId t : problem.learnable) mask.at(t) = true;
  return mask;
}

}  // namespace

std::vector<std::vector<VarId>> learnable_components(const LearningProblem& problem) {
  const std::vector<Label> labels = prior_augment(problem);
  std::vector<std::span<const VarId>> scopes;
  for (const Label& l : labels) scopes.push_back(l.formula.vars());
  return components_of(problem.db.size(), learnable_mask(problem), scopes);
}

namespace {

// SplitMix64; fixed across platforms so seeded runs reproduce everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform on the open interval (0,1).
  double open01() {
    while (true) {
      const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t s_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng r(seed ^ (stream * 0xd1b54a32d192ed03ULL));
  return r.next();
}

// One objective term: a label for MSE, or the whole conjunction for the
// logical objective, where the loss is 1 - P.
struct Term {
  Circuit circuit;
  double target = 0.0;
  double weight = 0.0;
  bool linear = false;
  double value = 0.0;  // cached P under the current probabilities

  double loss(double P) const {
    if (linear) return weight * (target - P);
    const double r = P - target;
    return weight * r * r;
  }
  double dloss(double P) const { return linear ? -weight : 2.0 * weight * (P - target); }
};

struct Component {
  std::vector<VarId> vars;
  std::vector<std::vector<std::uint32_t>> incident;  // per local tuple
  std::vector<std::uint32_t> terms;
  std::vector<double> w;
  std::vector<double> eta;
  // Last outer pass in which each rate slot settled: a step was accepted,
  // could not move the weight, or the rate sits at eta_min. A slot whose
  // steps have never been rejected is still growing its rate and does not
  // count as settled until it reaches eta_max.
  std::vector<std::size_t> settled_at;
  std::vector<char> scaled;
  std::vector<signed char> direction;  // last rate change: +1 doubled, -1 halved
  std::vector<std::uint32_t> run;      // consecutive changes in the same direction
  std::vector<std::size_t> searching_at;  // last pass with run >= 2
  double best = 0.0;
  Rng rng{0};
  std::vector<double> scratch;
  std::vector<std::uint32_t> order;
  std::vector<double> hi, lo;
};

struct Shared {
  ProbabilityVector& p;
  std::vector<Term>& terms;
  const LearnerConfig& cfg;
  std::size_t iter = 0;
};

double clamp_weight(double w, double cap) { return std::clamp(w, -cap, cap); }

// Doubles or halves the rate of a slot. A slot settles when its rate changes
// direction, cannot move the weight, or sits at a clamp. A run of changes in
// one direction means the rate is still searching for its scale.
void adjust_rate(Component& c, std::size_t slot, bool grow, bool stuck, const LearnerConfig& cfg, std::size_t iter) {
  double& eta = c.eta[slot];
  eta = grow ? std::min(eta * 2.0, cfg.eta_max) : std::max(eta * 0.5, cfg.eta_min);
  const signed char dir = grow ? 1 : -1;
  const bool reversed = c.direction[slot] != 0 && c.direction[slot] != dir;
  if (!grow || eta == cfg.eta_max) c.scaled[slot] = 1;
  if (reversed || stuck || eta == cfg.eta_min || eta == cfg.eta_max) c.settled_at[slot] = iter;
  c.run[slot] = reversed || stuck || eta == cfg.eta_min || eta == cfg.eta_max ? 0 : c.run[slot] + 1;
  if (c.run[slot] >= 2) c.searching_at[slot] = iter;
  c.direction[slot] = dir;
}

void sgd_pass(Component& c, Shared& s, bool single_rate) {
  const LearnerConfig& cfg = s.cfg;
  c.order.resize(c.vars.size());
  std::iota(c.order.begin(), c.order.end(), 0u);
  c.rng.shuffle(c.order);

  for (std::uint32_t li : c.order) {
    const VarId t = c.vars[li];
    const auto& inc = c.incident[li];
    c.hi.resize(inc.size());
    c.lo.resize(inc.size());
    double g = 0.0;
    for (std::size_t k = 0; k < inc.size(); ++k) {
      const Term& term = s.terms[inc[k]];
      c.hi[k] = term.circuit.evaluate(s.p, c.scratch, t, 1.0);
      c.lo[k] = term.circuit.evaluate(s.p, c.scratch, t, 0.0);
      g += term.dloss(term.value) * (c.hi[k] - c.lo[k]);
    }
    const std::size_t slot = single_rate ? 0 : li;
    if (g == 0.0) {
      c.settled_at[slot] = s.iter;
      c.scaled[slot] = 1;
      c.run[slot] = 0;
      continue;
    }

    double& eta = c.eta[slot];
    const double pt = s.p[t];
    const double w_new = clamp_weight(c.w[li] - eta * g * pt * (1.0 - pt), cfg.weight_cap);
    const double p_new = expit(w_new);
    double delta = 0.0;
    for (std::size_t k = 0; k < inc.size(); ++k) {
      const Term& term = s.terms[inc[k]];
      delta += term.loss(c.lo[k] + p_new * (c.hi[k] - c.lo[k])) - term.loss(term.value);
    }
    if (delta < 0.0) {
      c.w[li] = w_new;
      s.p[t] = p_new;
      for (std::size_t k = 0; k < inc.size(); ++k) {
        Term& term = s.terms[inc[k]];
        term.value = c.lo[k] + p_new * (c.hi[k] - c.lo[k]);
      }
      c.best += delta;
      // An accepted step that crossed the minimum along t is not grown.
      double g_new = 0.0;
      for (std::size_t k = 0; k < inc.size(); ++k) {
        const Term& term = s.terms[inc[k]];
        g_new += term.dloss(term.value) * (c.hi[k] - c.lo[k]);
      }
      const bool crossed = g_new != 0.0 && (g_new > 0.0) != (g > 0.0);
      adjust_rate(c, slot, !crossed, false, cfg, s.iter);
    } else if (delta == 0.0 && p_new == pt && w_new != c.w[li]) {
      // The step is below the resolution of p, typically at a saturated weight.
      adjust_rate(c, slot, true, false, cfg, s.iter);
    } else {
      adjust_rate(c, slot, false, w_new == c.w[li], cfg, s.iter);
    }
  }
}

void gd_pass(Component& c, Shared& s) {
  const LearnerConfig& cfg = s.cfg;
  const std::size_t n = c.vars.size();
  std::vector<double> grad(n, 0.0);
  bool any = false;
  for (std::size_t li = 0; li < n; ++li) {
    const VarId t = c.vars[li];
    for (std::uint32_t ti : c.incident[li]) {
      const Term& term = s.terms[ti];
      const double b = term.circuit.evaluate(s.p, c.scratch, t, 1.0) - term.circuit.evaluate(s.p, c.scratch, t, 0.0);
      grad[li] += term.dloss(term.value) * b;
    }
    any = any || grad[li] != 0.0;
  }
  if (!any) {
    c.settled_at[0] = s.iter;
    c.scaled[0] = 1;
    c.run[0] = 0;
    return;
  }

  double& eta = c.eta[0];
  bool moved = false;
  std::vector<double> w_new(n), p_old(n);
  for (std::size_t li = 0; li < n; ++li) {
    const VarId t = c.vars[li];
    p_old[li] = s.p[t];
    w_new[li] = clamp_weight(c.w[li] - eta * grad[li] * p_old[li] * (1.0 - p_old[li]), cfg.weight_cap);
    moved = moved || w_new[li] != c.w[li];
    s.p[t] = expit(w_new[li]);
  }
  std::vector<double> values(c.terms.size());
  double total = 0.0;
  for (std::size_t k = 0; k < c.terms.size(); ++k) {
    const Term& term = s.terms[c.terms[k]];
    values[k] = term.circuit.evaluate(s.p, c.scratch);
    total += term.loss(values[k]);
  }
  if (total < c.best) {
    c.w = std::move(w_new);
    for (std::size_t k = 0; k < c.terms.size(); ++k) s.terms[c.terms[k]].value = values[k];
    c.best = total;
    adjust_rate(c, 0, true, false, cfg, s.iter);
  } else {
    for (std::size_t li = 0; li < n; ++li) s.p[c.vars[li]] = p_old[li];
    adjust_rate(c, 0, false, !moved, cfg, s.iter);
  }
}

// Runs jobs 0..n-1 on a fixed set of worker threads; the calling thread
// takes part. Jobs are claimed from a shared counter.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned threads) {
    for (unsigned i = 1; i < threads; ++i) workers_.emplace_back([this] { loop(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    wake_.notify_all();
    for (std::thread& t : workers_) t.join();
  }

  void run(std::size_t n, const std::function<void(std::size_t)>& job) {
    if (workers_.empty() || n <= 1) {
      for (std::size_t i = 0; i < n; ++i) job(i);
      return;
    }
    {
      std::lock_guard lock(mu_);
      job_ = &job;
      n_ = n;
      next_.store(0);
      active_ = workers_.size();
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    work();
    std::unique_lock lock(mu_);
    done_.wait(lock, [this] { return active_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void work() {
    for (std::size_t i = next_.fetch_add(1); i < n_; i = next_.fetch_add(1)) {
      try {
        (*job_)(i);
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
      }
    }
  }

  void loop() {
    std::size_t seen = 0;
    while (true) {
      {
        std::unique_lock lock(mu_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      work();
      {
        std::lock_guard lock(mu_);
        --active_;
      }
      done_.notify_one();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable wake_, done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t n_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t active_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace

LearnResult learn(const LearningProblem& problem, const LearnerConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - start).count(); };

  cfg.validate();
  problem.validate();
  const std::vector<Label> labels = prior_augment(problem);
  const bool logical = cfg.objective == Objective::Logical;
  const std::vector<bool> learnable = learnable_mask(problem);

  LearnResult result;
  ProbabilityVector& p = result.p;
  p = problem.db.probabilities();

  std::vector<VarId> order = problem.learnable;
  std::sort(order.begin(), order.end());
  std::vector<double> weight_of(problem.db.size(), 0.0);
  Rng init(cfg.seed);
  for (VarId t : order) {
    const double u = init.open01();
    const double start_p = cfg.warm_start && is_known(p[t]) ? p[t] : u;
    weight_of[t] = logit(start_p, cfg.weight_cap);
    p[t] = expit(weight_of[t]);
  }

  std::vector<Term> terms;
  auto add_term = [&](const Formula& f, double target, double weight, bool linear, std::size_t label_index) {
    Term term;
    try {
      term.circuit = Circuit::compile(flatten(f, cfg.inference), cfg.inference);
    } catch (const IntractableError& e) {
      if (linear) throw;
      rethrow_for_label(label_index, e);
    }
    for (VarId v : term.circuit.vars()) {
      if (!learnable[v] && !is_known(p[v])) {
        throw UnknownTupleError("tuple " + tuple_text(problem.db.tuple(v)) +
                                " has no probability and is not learnable");
      }
    }
    term.target = target;
    term.weight = weight;
    term.linear = linear;
    term.value = term.circuit.evaluate(p);
    terms.push_back(std::move(term));
  };
  if (logical) {
    add_term(logical_formula(labels), 1.0, 1.0, true, 0);
  } else {
    const std::vector<double> w = label_weights(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) add_term(labels[i].formula, labels[i].target, w[i], false, i);
  }

  std::vector<std::span<const VarId>> scopes;
  for (const Term& t : terms) scopes.push_back(t.circuit.vars());
  std::vector<std::vector<VarId>> groups = components_of(problem.db.size(), learnable, scopes);
  if (cfg.optimizer != Optimizer::SgdPerTuple && groups.size() > 1) {
    std::vector<VarId> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    std::sort(all.begin(), all.end());
    groups = {std::move(all)};
  }

  std::vector<std::size_t> comp_of(problem.db.size(), groups.size());
  std::vector<std::size_t> local_of(problem.db.size(), 0);
  std::vector<Component> comps(groups.size());
  for (std::size_t ci = 0; ci < groups.size(); ++ci) {
    Component& c = comps[ci];
    c.vars = std::move(groups[ci]);
    c.incident.resize(c.vars.size());
    c.w.resize(c.vars.size());
    for (std::size_t li = 0; li < c.vars.size(); ++li) {
      comp_of[c.vars[li]] = ci;
      local_of[c.vars[li]] = li;
      c.w[li] = weight_of[c.vars[li]];
    }
    c.eta.assign(cfg.optimizer == Optimizer::SgdPerTuple ? c.vars.size() : 1, cfg.eta_initial);
    c.settled_at.assign(c.eta.size(), 0);
    c.scaled.assign(c.eta.size(), 0);
    c.direction.assign(c.eta.size(), 0);
    c.run.assign(c.eta.size(), 0);
    c.searching_at.assign(c.eta.size(), 0);
    c.rng = Rng(mix_seed(cfg.seed, ci + 1));
  }

  double fixed_loss = 0.0;
  for (std::uint32_t ti = 0; ti < terms.size(); ++ti) {
    const Term& term = terms[ti];
    std::size_t ci = groups.size();
    for (VarId v : term.circuit.vars()) {
      if (!learnable[v]) continue;
      ci = comp_of[v];
      comps[ci].incident[local_of[v]].push_back(ti);
    }
    if (ci == groups.size()) {
      fixed_loss += term.loss(term.value);
    } else {
      comps[ci].terms.push_back(ti);
      comps[ci].best += term.loss(term.value);
    }
  }
  result.components = comps.size();

  auto total_loss = [&] {
    double sum = fixed_loss;
    for (const Component& c : comps) sum += c.best;
    return sum;
  };
  auto reported = [&](double loss) { return logical ? 1.0 - loss : loss; };

  Shared shared{p, terms, cfg};
  WorkerPool pool(std::min<std::size_t>(cfg.threads, std::max<std::size_t>(comps.size(), 1)));
  const std::function<void(std::size_t)> job = [&](std::size_t ci) {
    if (cfg.optimizer == Optimizer::Gd) {
      gd_pass(comps[ci], shared);
    } else {
      sgd_pass(comps[ci], shared, cfg.optimizer == Optimizer::SgdSingle);
    }
  };

  std::vector<double> history{total_loss()};
  result.trace.push_back({0, reported(history.back()), elapsed_ms()});
  result.stop = StopReason::IterationLimit;
  if (history.back() <= cfg.eps_abs) result.stop = StopReason::AbsoluteBound;

  std::size_t iter = 0;
  while (result.stop == StopReason::IterationLimit && iter < cfg.max_outer_iterations) {
    ++iter;
    shared.iter = iter;
    pool.run(comps.size(), job);
    const double loss = total_loss();
    history.push_back(loss);
    result.trace.push_back({iter, reported(loss), elapsed_ms()});
    if (loss <= cfg.eps_abs) {
      result.stop = StopReason::AbsoluteBound;
    } else if (iter >= cfg.rel_window) {
      const double before = history[iter - cfg.rel_window];
      bool settled = true;
      for (const Component& c : comps) {
        for (std::size_t k = 0; k < c.settled_at.size(); ++k) {
          settled = settled && c.scaled[k] && iter - c.settled_at[k] < cfg.rel_window && iter - c.searching_at[k] >= cfg.rel_window;
        }
      }
      if (settled && before - loss < cfg.eps_rel * before) result.stop = StopReason::RelativeBound;
    }
  }
  result.iterations = iter;

  double final_loss = 0.0;
  for (const Term& term : terms) final_loss += term.loss(term.circuit.evaluate(p));
  result.best = logical ? (terms.empty() ? 1.0 : terms.front().circuit.evaluate(p)) : final_loss;
  return result;
}

}  // namespace tuplearn
