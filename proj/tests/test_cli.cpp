#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qoe/cli.hpp"
#include "qoe/data_model.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = qoe::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qoe_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("generate, augment, correlate") {
  TempDir dir;
  REQUIRE(run({"generate", "--n", "450", "--seed", "42", "--out", dir / "base.csv"}).code == 0);
  REQUIRE(run({"augment", "--in", dir / "base.csv", "--seed", "7", "--out", dir / "aug.csv"}).code == 0);
  CHECK(lines(slurp(dir / "base.csv")) == 451);
  CHECK(lines(slurp(dir / "aug.csv")) == 2701);
  const auto r = run({"correlate", "--in", dir / "aug.csv", "--feature", "stall_duration_s", "--out",
                      dir / "corr.csv"});
  CHECK(r.code == 0);
  const std::string corr = slurp(dir / "corr.csv");
  CHECK(lines(corr) == 7);
  CHECK(corr.rfind("demographic,n,plcc\n", 0) == 0);
}

TEST_CASE("generate writes to stdout and honours the seed") {
  const auto a = run({"generate", "--n", "5", "--seed", "1"});
  const auto b = run({"generate", "--n", "5", "--seed", "1"});
  const auto c = run({"generate", "--n", "5", "--seed", "2"});
  CHECK(a.code == 0);
  CHECK(lines(a.out) == 6);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("split, train, evaluate") {
  TempDir dir;
  REQUIRE(run({"generate", "--n", "80", "--seed", "3", "--out", dir / "base.csv"}).code == 0);
  REQUIRE(run({"augment", "--in", dir / "base.csv", "--out", dir / "aug.csv"}).code == 0);
  REQUIRE(run({"split", "--in", dir / "aug.csv", "--seed", "3", "--out", dir / "parts"}).code == 0);
  CHECK(lines(slurp(dir / "parts/test.csv")) == 16 * 6 + 1);
  CHECK(lines(slurp(dir / "parts/train.csv")) == 64 * 6 + 1);
  REQUIRE(run({"train", "--in", dir / "parts/train.csv", "--model", "decision_tree", "--out",
               dir / "tree.json"})
              .code == 0);
  const auto e = run({"evaluate", "--in", dir / "parts/test.csv", "--pipeline", dir / "tree.json",
                      "--predictions", dir / "pred.csv"});
  CHECK(e.code == 0);
  CHECK(e.out.find("\"rmse\"") != std::string::npos);
  CHECK(lines(slurp(dir / "pred.csv")) == 16 * 6 + 1);

  REQUIRE(run({"train", "--in", dir / "parts/train.csv", "--model", "knn", "--exclude-demographic-feature",
               "--out", dir / "knn.json"})
              .code == 0);
  CHECK(slurp(dir / "knn.json").find("\"demographic\"") != std::string::npos);  // still in the schema echo
}

TEST_CASE("compare twice gives identical bytes") {
  TempDir dir;
  {
    std::ofstream cfg(dir / "exp.cfg");
    cfg << "[experiment]\nseed = 5\nroster = linear_regression, decision_tree, knn\n"
           "[data]\nn = 60\n";
  }
  const auto a = run({"compare", "--config", dir / "exp.cfg", "--out", dir / "r1.json", "--csv", dir / "t.csv"});
  const auto b = run({"compare", "--config", dir / "exp.cfg", "--out", dir / "r2.json"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "r1.json") == slurp(dir / "r2.json"));
  CHECK(lines(slurp(dir / "t.csv")) == 4);
}

TEST_CASE("scatter subcommand") {
  const auto r = run({"scatter", "--model", "knn", "--n", "40", "--seed", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("mos_true,mos_pred\n", 0) == 0);
  CHECK(lines(r.out) == 8 * 6 + 1);
  CHECK(run({"scatter", "--model", "svr", "--n", "40"}).code == 1);
}

TEST_CASE("exit codes") {
  SUBCASE("unknown flag prints usage and exits 1") {
    const auto r = run({"generate", "--bogus"});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
  }
  SUBCASE("no subcommand") { CHECK(run({}).code == 1); }
  SUBCASE("help is success") { CHECK(run({"--help"}).code == 0); }
  SUBCASE("missing input file is an io error") {
    const auto r = run({"augment", "--in", "/nonexistent/base.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("io") != std::string::npos);
  }
  SUBCASE("validation error") { CHECK(run({"generate", "--n", "0"}).code == 1); }
  SUBCASE("bad config key") {
    TempDir dir;
    std::ofstream(dir / "bad.cfg") << "knn.neighbours = 3\n";
    CHECK(run({"compare", "--config", dir / "bad.cfg"}).code == 1);
  }
  SUBCASE("unwritable output") {
    CHECK(run({"generate", "--n", "5", "--out", "/proc/nope/x.csv"}).code == 2);
  }
  SUBCASE("augmenting augmented data") {
    TempDir dir;
    REQUIRE(run({"generate", "--n", "10", "--out", dir / "b.csv"}).code == 0);
    REQUIRE(run({"augment", "--in", dir / "b.csv", "--out", dir / "a.csv"}).code == 0);
    CHECK(run({"augment", "--in", dir / "a.csv"}).code == 1);
  }
}
