#include <doctest.h>
#include <algorithm>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include "polyfactor/cli.hpp"
#include "polyfactor/model_io.hpp"

namespace fs = std::filesystem;
using namespace polyfactor;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "polyfactor");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("polyfactor-cli-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Three well-separated classes in 4 features.
std::string write_svmlight(const TempDir& dir, int n = 60) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::ostringstream s;
  for (int i = 0; i < n; ++i) {
    const int y = i % 3;
    s << y + 1;
    for (int j = 0; j < 4; ++j) s << ' ' << j + 1 << ':' << (j == y ? 2.0 : 0.0) + noise(rng);
    s << '\n';
  }
  const std::string path = dir / "train.svm";
  std::ofstream(path) << s.str();
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2") {
    TempDir dir;
    CHECK(cli({"train"}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({}).code == 2);
    const std::string data = write_svmlight(dir);
    CHECK(cli({"train", "--data", data, "--mcrank", "--format", "movielens", "--loss", "logistic"}).code == 2);
    CHECK(cli({"train", "--data", data, "--penalty", "l3"}).code == 2);
    CHECK(cli({"train", "--data", data, "--k-max", "0"}).code == 2);
    CHECK(cli({"--help"}).code == 0);
  }

  TEST_CASE("missing input is a runtime failure") {
    TempDir dir;
    const Run r = cli({"train", "--data", dir / "absent.svm"});
    CHECK(r.code == 1);
    CHECK(r.err.find("error") != std::string::npos);
  }

  TEST_CASE("train, eval and predict") {
    TempDir dir;
    const std::string data = write_svmlight(dir);
    const std::string model = dir / "model.json";
    const Run t = cli({"train", "--data", data, "--k-max", "5", "--out", model, "--trace", dir / "trace.csv"});
    REQUIRE(t.code == 0);
    CHECK(t.out.find("objective ") == 0);
    const Model m = load_model(model);
    CHECK(m.k() <= 5);
    CHECK(m.k() >= 1);
    CHECK(slurp(dir / "trace.csv").rfind("t,objective,score,k,seconds\n", 0) == 0);

    const Run e = cli({"eval", "--model-file", model, "--data", data});
    REQUIRE(e.code == 0);
    const auto report = nlohmann::json::parse(e.out);
    CHECK(report["accuracy"].get<double>() >= 1.0 / 3.0);
    CHECK(report["k"].get<int>() == m.k());

    std::ofstream(dir / "three.svm") << "1 1:2\n2 2:2\n3 3:2 4:0.1\n";
    const Run p = cli({"predict", "--model-file", model, "--data", dir / "three.svm"});
    REQUIRE(p.code == 0);
    CHECK(std::count(p.out.begin(), p.out.end(), '\n') == 3);
  }

  TEST_CASE("dimension mismatch") {
    TempDir dir;
    const std::string data = write_svmlight(dir);
    const std::string model = dir / "model.json";
    REQUIRE(cli({"train", "--data", data, "--k-max", "2", "--out", model}).code == 0);
    std::ofstream(dir / "wide.svm") << "1 1:1 9:1\n";
    CHECK(cli({"predict", "--model-file", model, "--data", dir / "wide.svm"}).code == 1);
    std::ofstream(dir / "unseen.svm") << "7 1:1\n";
    CHECK(cli({"eval", "--model-file", model, "--data", dir / "unseen.svm"}).code == 1);
  }

  TEST_CASE("single-lambda path matches train on the same split") {
    TempDir dir;
    const std::string data = write_svmlight(dir, 90);
    const Run t = cli({"train", "--data", data, "--part", "train", "--lambda", "0.5", "--k-max", "4", "--seed", "3"});
    REQUIRE(t.code == 0);
    const Run p = cli({"path", "--data", data, "--lambdas", "0.5", "--k-max", "4", "--seed", "3", "--report",
                       dir / "report.json"});
    REQUIRE(p.code == 0);
    const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    REQUIRE(rep.size() == 1);
    std::ostringstream k;
    k << "k " << rep[0]["k_final"].get<int>() << "\n";
    CHECK(t.out.find(k.str()) != std::string::npos);
    CHECK(t.out.find("iterations " + std::to_string(rep[0]["iterations"].get<int>()) + " ") != std::string::npos);
    CHECK(cli({"path", "--data", data, "--part", "train"}).code == 2);
  }

  TEST_CASE("oracle-compare") {
    TempDir dir;
    const Run ok = cli({"oracle-compare", "--instances", "3", "--m-max", "3", "--out", dir / "o.csv"});
    REQUIRE(ok.code == 0);
    const std::string csv = slurp(dir / "o.csv");
    CHECK(csv.rfind("instance,m,d,method,f1,nu\n", 0) == 0);
    CHECK(csv.find(",exact,") != std::string::npos);
    CHECK(cli({"oracle-compare", "--instances", "1", "--m-min", "14", "--m-max", "14", "--oracle-limit", "12"}).code ==
          1);
  }

  TEST_CASE("manifest replay reproduces the trace") {
    TempDir dir;
    const std::string data = write_svmlight(dir);
    REQUIRE(cli({"train", "--data", data, "--k-max", "4", "--seed", "9", "--trace", dir / "a.csv", "--out",
                 dir / "a.json", "--manifest", dir / "run.json"})
                .code == 0);
    const auto manifest = nlohmann::json::parse(slurp(dir / "run.json"));
    CHECK(manifest["seed"].get<int>() == 9);
    CHECK(manifest["data"]["fingerprint"].get<std::string>().size() == 16);
    CHECK(manifest["config"].contains("lambda"));
    REQUIRE(cli({"train", "--replay", dir / "run.json", "--trace", dir / "b.csv", "--out", dir / "b.json"}).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

    std::ofstream(data, std::ios::app) << "1 1:5\n";
    CHECK(cli({"train", "--replay", dir / "run.json", "--trace", dir / "c.csv"}).code != 0);
  }
}
