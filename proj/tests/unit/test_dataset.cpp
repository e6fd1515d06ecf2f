#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "polyfactor/dataset.hpp"
#include "polyfactor/solver.hpp"

using namespace polyfactor;

namespace {

Dataset parse(const std::string& text, SvmlightOptions opts = {}) {
  std::istringstream in(text);
  return parse_svmlight(in, opts);
}

Dataset parse_ml(const std::string& text, MovielensOptions opts = {}) {
  std::istringstream in(text);
  return parse_movielens(in, opts);
}

}  // namespace

TEST_SUITE("data-model") {
  TEST_CASE("svmlight row without augmentation") {
    const Dataset ds = parse("3 1:0.5 4:2.0\n");
    REQUIRE(ds.rows() == 1);
    REQUIRE(ds.cols() == 4);
    const Eigen::MatrixXd X(ds.X);
    CHECK(X(0, 0) == 0.5);
    CHECK(X(0, 1) == 0.0);
    CHECK(X(0, 2) == 0.0);
    CHECK(X(0, 3) == 2.0);
    CHECK(ds.label_map == std::vector<double>{3.0});
    CHECK(ds.labels[0] == 0);
  }

  TEST_CASE("svmlight augmentation puts the constant feature first") {
    SvmlightOptions opts;
    opts.augment_bias = true;
    const Dataset ds = parse("1 2:1.0\n", opts);
    REQUIRE(ds.cols() == 3);
    const Eigen::MatrixXd X(ds.X);
    CHECK(X(0, 0) == 1.0);
    CHECK(X(0, 1) == 0.0);
    CHECK(X(0, 2) == 1.0);
    CHECK(ds.bias_augmented);
  }

  TEST_CASE("labels are remapped to contiguous indices in sorted order") {
    const Dataset ds = parse("7 1:1\n-2 1:1\n7 2:1\n3 1:1\n");
    CHECK(ds.label_map == std::vector<double>{-2.0, 3.0, 7.0});
    CHECK(ds.labels == std::vector<int>{2, 0, 2, 1});
    CHECK_NOTHROW(ds.validate());
  }

  TEST_CASE("empty svmlight input gives an empty dataset that cannot be trained") {
    const Dataset ds = parse("");
    CHECK(ds.rows() == 0);
    CHECK_THROWS(fit(ds, SolverConfig{}));
  }

  TEST_CASE("malformed svmlight lines report their line number") {
    auto line_of = [](const std::string& text) -> std::size_t {
      try {
        parse(text);
      } catch (const ParseError& e) {
        return e.line();
      }
      return 0;
    };
    CHECK(line_of("1 1:1\n2 1:x\n") == 2);
    CHECK(line_of("1 1:1\n\n1 3:1 2:1\n") == 3);  // decreasing indices
    CHECK(line_of("1 0:1\n") == 1);               // indices are 1-based
    CHECK(line_of("1 1:nan\n") == 1);
    CHECK(line_of("1 1:inf\n") == 1);
    CHECK(line_of("abc 1:1\n") == 1);
  }

  TEST_CASE("svmlight round trip") {
    Dataset ds = oracle::random_dataset(12, 7, 3, 5);
    for (auto& v : ds.label_map) v = v * 10 - 3;  // non-contiguous raw labels
    SvmlightOptions opts;
    opts.augment_bias = true;
    std::ostringstream out;
    Dataset aug = ds;
    add_bias_column(aug);
    write_svmlight(out, aug);
    const Dataset back = parse(out.str(), opts);
    CHECK(back.label_map == ds.label_map);
    CHECK(back.labels == ds.labels);
    REQUIRE(back.cols() == aug.cols());
    CHECK((Eigen::MatrixXd(back.X) - Eigen::MatrixXd(aug.X)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("movielens one-hot layout puts users first") {
    // users 1..3, items 1..2; the probe record is user 2, item 1, rating 4
    const Dataset ds = parse_ml("1\t1\t5\t0\n3\t2\t1\t0\n2\t1\t4\t0\n");
    REQUIRE(ds.cols() == 5);
    const Eigen::MatrixXd X(ds.X);
    CHECK(X.row(2).sum() == 2.0);
    CHECK(X(2, 1) == 1.0);  // column 2 in 1-based terms
    CHECK(X(2, 3) == 1.0);  // column 4 in 1-based terms
    CHECK(ds.label_map[static_cast<std::size_t>(ds.labels[2])] == 4.0);
    CHECK(ds.num_classes() == 5);
    CHECK(ds.groups == std::vector<int>{0, 2, 1});
  }

  TEST_CASE("movielens separators and rating checks") {
    MovielensOptions colons;
    colons.separator = Separator::colons;
    CHECK(parse_ml("1::10::3::978300760\n2::10::5::978300761\n", colons).rows() == 2);
    CHECK(parse_separator("::") == Separator::colons);
    CHECK(parse_separator("tab") == Separator::tab);
    CHECK_THROWS_AS(parse_separator(";"), ParseError);

    MovielensOptions five;
    five.levels = 5;
    CHECK_THROWS_AS(parse_ml("1\t1\t6\n", five), ParseError);
    CHECK_THROWS_AS(parse_ml("1\t1\t0\n"), ParseError);
    CHECK_THROWS_AS(parse_ml("1\t1\t2.5\n"), ParseError);
    CHECK_THROWS_AS(parse_ml("1,1,3\n"), ParseError);  // wrong separator
  }

  TEST_CASE("MovieLens 100k counts") {
    const std::string path = std::string(POLYFACTOR_DATA_DIR) + "/ml-100k/u.data";
    if (!std::filesystem::exists(path)) {
      MESSAGE("skipped: " << path << " not present");
      return;
    }
    const Dataset ds = load_movielens(path);
    CHECK(ds.rows() == 100000);
    CHECK(ds.cols() == 2625);
    CHECK(ds.num_classes() == 5);
    bool two_ones = true;
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
      int nnz = 0;
      for (SparseMatrix::InnerIterator it(ds.X, i); it; ++it) {
        ++nnz;
        two_ones = two_ones && it.value() == 1.0;
      }
      two_ones = two_ones && nnz == 2;
    }
    CHECK(two_ones);
  }

  TEST_CASE("MovieLens 1M counts") {
    const std::string path = std::string(POLYFACTOR_DATA_DIR) + "/ml-1m/ratings.dat";
    if (!std::filesystem::exists(path)) {
      MESSAGE("skipped: " << path << " not present");
      return;
    }
    MovielensOptions opts;
    opts.separator = Separator::colons;
    const Dataset ds = load_movielens(path, opts);
    CHECK(ds.rows() == 1000209);
    CHECK(ds.num_classes() == 5);
  }

  TEST_CASE("split sizes") {
    CHECK(split_sizes(100, {}) == std::vector<Eigen::Index>{50, 25, 25});
    CHECK(split_sizes(4, {}) == std::vector<Eigen::Index>{2, 1, 1});
    for (Eigen::Index n = 4; n < 60; ++n) {
      const auto s = split_sizes(n, {});
      CHECK(s[0] + s[1] + s[2] == n);
      CHECK(std::abs(static_cast<double>(s[0]) - 0.5 * static_cast<double>(n)) <= 1.0);
      CHECK(std::abs(static_cast<double>(s[1]) - 0.25 * static_cast<double>(n)) <= 1.0);
    }
    SplitSpec bad;
    bad.test = 0.3;
    CHECK_THROWS_AS(split_sizes(10, bad), ConfigError);
  }

  TEST_CASE("split is a seeded partition") {
    Dataset ds = oracle::random_dataset(37, 3, 2, 1);
    // tag every row through its first feature so rows can be traced
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(37, 1);
    for (int i = 0; i < 37; ++i) X(i, 0) = i + 1;
    ds.X = X.sparseView();
    auto ids = [](const Dataset& part) {
      std::vector<int> v;
      const Eigen::MatrixXd D(part.X);
      for (Eigen::Index i = 0; i < D.rows(); ++i) v.push_back(static_cast<int>(D(i, 0)));
      return v;
    };
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
      SplitSpec spec;
      spec.seed = seed;
      const Splits a = split(ds, spec), b = split(ds, spec);
      CHECK(ids(a.train) == ids(b.train));
      CHECK(ids(a.test) == ids(b.test));
      std::set<int> all;
      for (const Dataset* p : {&a.train, &a.valid, &a.test})
        for (int v : ids(*p)) all.insert(v);
      CHECK(all.size() == 37);
      CHECK(a.train.rows() + a.valid.rows() + a.test.rows() == 37);
    }
    SplitSpec s1, s2;
    s2.seed = 1;
    CHECK(ids(split(ds, s1).train) != ids(split(ds, s2).train));
  }
}
