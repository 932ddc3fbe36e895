#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tuplearn/errors.hpp"
#include "tuplearn/learning.hpp"

using namespace tuplearn;

namespace {

Formula t(VarId i) { return Formula::var(i); }

ProbabilisticDatabase unknown_db(std::size_t n) {
  ProbabilisticDatabase db;
  for (std::size_t i = 0; i < n; ++i) db.add_tuple("T", {std::to_string(i)}, std::nullopt);
  return db;
}

ProbabilityVector vec(std::initializer_list<double> xs) {
  return oracle::to_vector(std::vector<double>(xs));
}

const std::vector<Label> kExample9{{t(0) | t(1), 1.0, std::nullopt}, {t(0), 0.0, std::nullopt}};

}  // namespace

TEST_SUITE("learning") {
  TEST_CASE("mse golden value") {
    CHECK(std::abs(mse(kExample9, vec({0.7, 0.5})) - 0.25625) <= 1e-12);
    CHECK(mse({{t(0), 0.3, std::nullopt}}, vec({0.3})) == 0.0);
  }

  TEST_CASE("mse gradient golden value") {
    const ProbabilityVector p = vec({0.5, 0.5, 0.5});
    CHECK(std::abs(mse_gradient(kExample9, p, 0) - 0.375) <= 1e-12);
    CHECK(std::abs(mse_gradient(kExample9, p, 1) + 0.125) <= 1e-12);
    CHECK(mse_gradient(kExample9, p, 2) == 0.0);
  }

  TEST_CASE("inconsistent instance has a positive minimum") {
    const std::vector<Label> labels{{t(0), 0.2, std::nullopt}, {t(1), 0.3, std::nullopt}, {t(0) & t(1), 0.9, std::nullopt}};
    const auto g = oracle::grid_min([&](double x, double y) { return oracle::mse(labels, 2, {x, y}); });
    CHECK(g.value > 0.0);
    CHECK(std::abs(mse(labels, vec({g.x, g.y})) - g.value) <= 1e-12);
  }

  TEST_CASE("logical objective") {
    CHECK(logical_formula(kExample9) == ((t(0) | t(1)) & (!t(0))));
    CHECK(std::abs(logical_objective(kExample9, vec({0.0, 1.0})) - 1.0) <= 1e-12);
    CHECK(std::abs(logical_objective(kExample9, vec({0.5, 0.5})) - 0.25) <= 1e-12);
    const std::vector<Label> contradictory{{t(0) | t(1), 1.0, std::nullopt}, {t(0) | t(1), 0.0, std::nullopt}};
    CHECK(logical_objective(contradictory, vec({0.3, 0.9})) == 0.0);
    CHECK_THROWS_AS(logical_objective({{t(0), 0.5, std::nullopt}}, vec({0.5})), ObjectiveInapplicableError);
  }

  TEST_CASE("logit and expit") {
    CHECK(logit(0.5) == 0.0);
    CHECK(logit(1.0) == kDefaultWeightCap);
    CHECK(logit(0.0) == -kDefaultWeightCap);
    CHECK(std::abs(expit(logit(0.3)) - 0.3) <= 1e-12);
    const Eigen::ArrayXd p = Eigen::ArrayXd::LinSpaced(5, 0.1, 0.9);
    const Eigen::ArrayXd back = expit(logit(p));
    CHECK((back - p).abs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("prior augmentation") {
    LearningProblem problem = LearningProblem::from_database(unknown_db(1), {{t(0), 0.2, std::nullopt}});
    problem.prior = Prior{{0.8}, 0.5};
    const std::vector<Label> aug = prior_augment(problem);
    REQUIRE(aug.size() == 2);
    CHECK(*aug[0].weight == doctest::Approx(0.5));
    CHECK(*aug[1].weight == doctest::Approx(0.5));
    LearnerConfig cfg;
    cfg.eps_abs = 1e-12;
    cfg.eps_rel = 1e-12;
    const LearnResult r = learn(problem, cfg);
    CHECK(std::abs(r.p[0] - 0.5) <= 1e-3);

    problem.prior->c = 0.0;
    CHECK(std::abs(learn(problem, cfg).p[0] - 0.8) <= 1e-3);
    problem.prior->c = 1.0;
    const std::vector<Label> plain = prior_augment(problem);
    CHECK(std::abs(mse(plain, vec({0.6})) - mse(problem.labels, vec({0.6}))) <= 1e-15);
    problem.prior->c = 1.5;
    CHECK_THROWS_AS(prior_augment(problem), InvalidArgumentError);
  }

  TEST_CASE("doubled label through weights") {
    // One label counted twice with the original normalization kept.
    std::vector<Label> labels{{t(0), 0.2, 2.0 / 3.0}, {t(0) & t(1), 0.5, 1.0 / 3.0}};
    std::vector<Label> replicated{{t(0), 0.2, std::nullopt}, {t(0), 0.2, std::nullopt}, {t(0) & t(1), 0.5, std::nullopt}};
    const ProbabilityVector p = vec({0.35, 0.8});
    CHECK(std::abs(mse(labels, p) - mse(replicated, p)) <= 1e-15);
    CHECK(std::abs(mse_gradient(labels, p, 1) - mse_gradient(replicated, p, 1)) <= 1e-15);
  }

  TEST_CASE("unique optimum for every optimizer") {
    const LearningProblem problem =
        LearningProblem::from_database(unknown_db(2), {{t(0), 0.4, std::nullopt}, {t(1), 0.7, std::nullopt}});
    for (Optimizer o : {Optimizer::SgdPerTuple, Optimizer::SgdSingle, Optimizer::Gd}) {
      LearnerConfig cfg;
      cfg.optimizer = o;
      cfg.eps_abs = 1e-10;
      cfg.seed = 3;
      const LearnResult r = learn(problem, cfg);
      CAPTURE(to_string(o));
      CHECK(r.converged());
      CHECK(std::abs(r.p[0] - 0.4) <= 1e-3);
      CHECK(std::abs(r.p[1] - 0.7) <= 1e-3);
    }
  }

  TEST_CASE("gradient descent on disjoint labels matches the closed form") {
    const LearningProblem problem = LearningProblem::from_database(
        unknown_db(3), {{t(0), 0.25, std::nullopt}, {t(1) | t(2), 0.75, std::nullopt}, {t(1), 0.5, std::nullopt}});
    LearnerConfig cfg;
    cfg.optimizer = Optimizer::Gd;
    cfg.eps_abs = 1e-10;
    const LearnResult r = learn(problem, cfg);
    CHECK(r.converged());
    CHECK(std::abs(r.p[0] - 0.25) <= 1e-3);
    CHECK(std::abs(r.p[1] - 0.5) <= 1e-3);
    CHECK(std::abs(r.p[2] - 0.5) <= 1e-3);
  }

  TEST_CASE("logical objective learning reaches one") {
    const LearningProblem problem = LearningProblem::from_database(unknown_db(2), kExample9);
    LearnerConfig cfg;
    cfg.objective = Objective::Logical;
    const LearnResult r = learn(problem, cfg);
    CHECK(r.best >= 1.0 - 1e-6);
    CHECK(r.p[0] < 1e-3);
    CHECK(r.p[1] > 1.0 - 1e-3);
  }

  TEST_CASE("trace and stop reason") {
    const LearningProblem problem = LearningProblem::from_database(unknown_db(2), kExample9);
    LearnerConfig cfg;
    cfg.seed = 11;
    const LearnResult r = learn(problem, cfg);
    REQUIRE(!r.trace.empty());
    CHECK(r.trace.front().outer_iter == 0);
    CHECK(r.trace.back().objective == doctest::Approx(r.best).epsilon(1e-9));
    CHECK(r.stop == StopReason::AbsoluteBound);
    CHECK(r.iterations + 1 == r.trace.size());

    cfg.max_outer_iterations = 1;
    cfg.eps_abs = 1e-300;
    const LearnResult capped = learn(problem, cfg);
    CHECK_FALSE(capped.converged());
    CHECK(capped.iterations == 1);
  }

  TEST_CASE("components") {
    const LearningProblem problem = LearningProblem::from_database(
        unknown_db(5), {{t(0) & t(1), 0.3, std::nullopt}, {t(2), 0.4, std::nullopt}, {t(1) | t(3), 0.9, std::nullopt}});
    const auto comps = learnable_components(problem);
    // Tuple 4 appears in no label and forms no component.
    REQUIRE(comps.size() == 2);
    CHECK(comps[0] == std::vector<VarId>{0, 1, 3});
    CHECK(comps[1] == std::vector<VarId>{2});
  }

  TEST_CASE("validation errors") {
    LearningProblem problem = LearningProblem::from_database(unknown_db(1), {{t(0), 1.5, std::nullopt}});
    CHECK_THROWS_AS(learn(problem), InvalidArgumentError);
    problem.labels[0].target = 0.5;
    LearnerConfig cfg;
    cfg.eps_abs = 0.0;
    CHECK_THROWS_AS(learn(problem, cfg), InvalidArgumentError);
    cfg = {};
    cfg.objective = Objective::Logical;
    CHECK_THROWS_AS(learn(problem, cfg), ObjectiveInapplicableError);
    CHECK_THROWS_AS(parse_optimizer("adam"), InvalidArgumentError);
    CHECK(parse_optimizer("sgd-single") == Optimizer::SgdSingle);
    CHECK(parse_objective("logical") == Objective::Logical);
  }
}
