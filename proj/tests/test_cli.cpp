#include <doctest.h>

#include <sys/wait.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "tuplearn/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(TUPLEARN_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tuplearn_cli_" + name + "_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

const std::string kExample = std::string(TUPLEARN_DATA_DIR) + "/example/";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("prob") {
    const fs::path dir = scratch_dir("prob");
    tuplearn::write_file(dir / "t.tsv", "T\t1\t0.6\nT\t2\t0.3\nT\t5\t0.5\nT\t6\t0.6\nT\t8\t0.8\n");
    const std::string tuples = " --tuples " + (dir / "t.tsv").string();
    const Run r = cli("prob '(T(1) & T(5) & T(8)) | (T(2) & T(6) & T(8))'" + tuples);
    CHECK(r.code == 0);
    CHECK(std::abs(std::stod(r.out) - 0.3408) <= 1e-12);
    CHECK(cli("prob --brute-force 'T(1) | T(2)'" + tuples).code == 0);
    CHECK(cli("prob 'T(1) |'" + tuples).code == 1);
    CHECK(cli("prob 'T(99)'" + tuples).code == 1);
    fs::remove_all(dir);
  }

  TEST_CASE("usage errors") {
    CHECK(cli("").code == 1);
    CHECK(cli("frobnicate").code == 1);
    CHECK(cli("learn").code == 1);
    CHECK(cli("--help").code == 0);
  }

  TEST_CASE("ground") {
    const Run r = cli("ground --tuples " + kExample + "tuples.tsv --rules " + kExample + "rules.dl");
    CHECK(r.code == 0);
    CHECK(r.out.find("WonPrize(Spielberg,AcademyAward)") != std::string::npos);
    CHECK(r.out.find("BornIn(Spielberg,LosAngeles)") != std::string::npos);
  }

  TEST_CASE("learn writes probabilities and a trace") {
    const fs::path dir = scratch_dir("learn");
    const Run r = cli("learn --tuples " + kExample + "tuples.tsv --rules " + kExample + "rules.dl --labels " + kExample +
                      "labels.tsv --seed 2 --trace " + (dir / "trace.csv").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("UsingPattern\t1\tReceived\t") != std::string::npos);
    const std::string trace = tuplearn::read_file(dir / "trace.csv");
    CHECK(trace.rfind("outer_iter,objective,elapsed_ms\n", 0) == 0);

    const Run capped = cli("learn --tuples " + kExample + "tuples.tsv --rules " + kExample + "rules.dl --labels " +
                           kExample + "labels.tsv --max-iter 1 --eps-abs 1e-300 --eps-rel 1e-300");
    CHECK(capped.code == 2);
    CHECK(cli("learn --tuples " + kExample + "tuples.tsv --optimizer adam").code == 1);
    fs::remove_all(dir);
  }

  TEST_CASE("condition and inconsistency") {
    const fs::path dir = scratch_dir("condition");
    tuplearn::write_file(dir / "t.tsv", "T\t1\t0.5\nT\t2\t0.5\n");
    tuplearn::write_file(dir / "ok.txt", "T(1) | T(2)\n");
    tuplearn::write_file(dir / "bad.txt", "T(1)\n!T(1)\n");
    const std::string tuples = " --tuples " + (dir / "t.tsv").string();
    const Run ok = cli("condition" + tuples + " --constraints " + (dir / "ok.txt").string());
    CHECK(ok.code == 0);
    CHECK(ok.out.find("T\t1\t") != std::string::npos);
    CHECK(cli("condition" + tuples + " --constraints " + (dir / "bad.txt").string()).code == 3);
    fs::remove_all(dir);
  }

  TEST_CASE("clean") {
    const fs::path dir = scratch_dir("clean");
    tuplearn::write_file(dir / "t.tsv", "T\t1\t0.5\nT\t2\t0.5\n");
    tuplearn::write_file(dir / "l.tsv", "F\tT(1)\t0\nF\tT(2)\t1\n");
    const Run r = cli("clean --tuples " + (dir / "t.tsv").string() + " --labels " + (dir / "l.tsv").string() +
                      " --prior-weight 1");
    CHECK(r.code == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("gen and bench") {
    const fs::path dir = scratch_dir("gen");
    const std::string t = (dir / "t.tsv").string(), l = (dir / "l.tsv").string();
    CHECK(cli("gen srl --labels 10 --tuples 30 --seed 3 --tuples-out " + t + " --labels-out " + l).code == 0);
    CHECK(cli("learn --tuples " + t + " --labels " + l + " --max-iter 2000").code != 1);
    CHECK(cli("gen 3sat --vars 5 --clauses 8 --seed 1 --tuples-out " + t + " --labels-out " + l).code == 0);
    CHECK(tuplearn::read_file(l).find("F\t") != std::string::npos);
    const Run bench = cli("bench --labels 5 --tuples 20 --optimizers sgd-per-tuple,gd");
    CHECK(bench.code == 0);
    CHECK(bench.out.rfind("instance,optimizer", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("incomplete") {
    const fs::path dir = scratch_dir("incomplete");
    tuplearn::write_file(dir / "r.tsv", "a\tx\na\tx\na\ty\na\t?\n");
    CHECK(cli("incomplete --input " + (dir / "r.tsv").string() + " --out-dir " + (dir / "out").string()).code == 0);
    CHECK(fs::exists(dir / "out" / "labels.tsv"));
    fs::remove_all(dir);
  }
}
