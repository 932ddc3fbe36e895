#include <doctest.h>

#include <filesystem>

#include "tuplearn/errors.hpp"
#include "tuplearn/formula_io.hpp"
#include "tuplearn/inference.hpp"
#include "tuplearn/io.hpp"

using namespace tuplearn;

namespace {

const std::filesystem::path kData = TUPLEARN_DATA_DIR;

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("tuple file parsing") {
    const ProbabilisticDatabase db = parse_tuples(
        "# comment\n"
        "R\ta\tb\t0.25\n"
        "\n"
        "R\tc\td\t?\n"
        "S\tBob Smith\t1\n");
    REQUIRE(db.size() == 3);
    CHECK(db.tuple(0) == TupleId{"R", {"a", "b"}});
    CHECK(*db.probability(0) == 0.25);
    CHECK_FALSE(db.probability(1).has_value());
    CHECK(db.learnable(1));
    CHECK(db.tuple(2).args[0] == "Bob Smith");
    CHECK(parse_tuples(format_tuples(db)) == db);
  }

  TEST_CASE("tuple file errors carry line numbers") {
    try {
      parse_tuples("R\ta\t0.5\nR\tb\tnope\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_tuples("R\ta\t1.5\n"), ParseError);
    CHECK_THROWS_AS(parse_tuples("R\ta\t0.5\nR\ta\tb\t0.5\n"), ParseError);
  }

  TEST_CASE("label files resolve derived tuples and formulas") {
    const Instance in = load_instance({kData / "example" / "tuples.tsv", kData / "example" / "rules.dl",
                                       kData / "example" / "labels.tsv"});
    REQUIRE(in.labels.size() == 2);
    CHECK(in.labels[0].target == 0.7);
    CHECK(in.labels[1].target == 0.0);
    CHECK(to_string(in.labels[1].formula, &in.db) ==
          "BornInExtraction(Spielberg,LosAngeles,3,2) & UsingPattern(3,Born) & FromDomain(2,Imdb.com)");
    const LearningProblem problem = in.problem();
    CHECK(problem.learnable.size() == 5);

    const std::vector<Label> direct = parse_labels("F\tUsingPattern(1,Received) | UsingPattern(2,Won)\t0.5\t2\n", in.db, {});
    REQUIRE(direct.size() == 1);
    CHECK(*direct[0].weight == 2.0);
    CHECK_THROWS_AS(parse_labels("Q\tWonPrize(Nobody,Nothing)\t0.5\n", in.db, in.derived), DanglingReferenceError);
    CHECK_THROWS_AS(parse_labels("X\tfoo\t0.5\n", in.db, in.derived), ParseError);
  }

  TEST_CASE("learned and trace output") {
    ProbabilisticDatabase db;
    db.add_tuple("R", {"a", "b"}, std::nullopt);
    ProbabilityVector p(1);
    p[0] = 0.125;
    CHECK(format_learned(db, p, {0}) == "R\ta\tb\t0.125\n");
    CHECK(format_trace({{0, 0.5, 1.0}, {1, 0.25, 2.0}}) == "outer_iter,objective,elapsed_ms\n0,0.5,1\n1,0.25,2\n");
  }

  TEST_CASE("missing files") {
    CHECK_THROWS_AS(read_file("/nonexistent/file.tsv"), Error);
  }
}
