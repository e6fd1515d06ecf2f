#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "polyfactor/solver.hpp"

using namespace polyfactor;

namespace {

Dataset xor_data() {
  Dataset ds;
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, -1, -1, 1, -1, -1, 1;
  ds.X = X.sparseView();
  ds.label_map = {0, 1};
  ds.labels = {0, 0, 1, 1};
  return ds;
}

double accuracy(const Model& model, const Dataset& ds) {
  const Eigen::MatrixXd O = outputs(model, ds.X);
  int hits = 0;
  for (Eigen::Index i = 0; i < O.rows(); ++i) {
    Eigen::Index c;
    O.row(i).maxCoeff(&c);
    hits += c == ds.labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(O.rows());
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("xor is fitted exactly by a few quadratic units") {
    SolverConfig cfg;
    cfg.penalty = PenaltyKind::l1;
    cfg.lambda = 1e-3;
    cfg.k_max = 4;
    const Dataset ds = xor_data();
    const FitResult r = fit(ds, cfg);
    CHECK(r.model.k() <= 4);
    CHECK(r.model.k() >= 1);
    CHECK(accuracy(r.model, ds) == 1.0);
  }

  TEST_CASE("lambda above lambda_max leaves the model empty") {
    const Dataset ds = oracle::random_dataset(30, 5, 3, 1);
    SolverConfig cfg;
    for (PenaltyKind kind : {PenaltyKind::l1, PenaltyKind::l1l2, PenaltyKind::l1linf}) {
      cfg.penalty = kind;
      const double top = lambda_max(ds, cfg);
      cfg.lambda = 1.5 * top;
      const FitResult r = fit(ds, cfg);
      CHECK(r.model.k() == 0);
      CHECK(r.initial_objective == doctest::Approx(30 * std::log(3.0)));
      if (!r.trace.empty()) CHECK(r.trace.back().objective == doctest::Approx(30 * std::log(3.0)));
      cfg.lambda = 0.5 * top;
      CHECK(fit(ds, cfg).model.k() >= 1);
    }
  }

  TEST_CASE("trace is monotone and k never exceeds t") {
    for (ModelKind kind : {ModelKind::pn, ModelKind::fm}) {
      for (RefitMode refit : {RefitMode::output, RefitMode::full}) {
        const Dataset ds = oracle::random_dataset(40, 6, 3, 3);
        SolverConfig cfg;
        cfg.model = kind;
        cfg.refit = refit;
        cfg.lambda = 0.5;
        cfg.k_max = 8;
        const FitResult r = fit(ds, cfg);
        double prev = r.initial_objective;
        for (const TraceRecord& rec : r.trace) {
          CHECK(rec.objective <= prev + 1e-12 * std::abs(prev));
          CHECK(rec.k <= rec.t);
          prev = rec.objective;
        }
        CHECK(r.trace.size() == static_cast<std::size_t>(r.iterations));
        for (Eigen::Index row = 0; row < r.model.k(); ++row) CHECK(r.model.H.row(row).norm() <= 1.0 + 1e-9);
        const SupportReport s = support_check(r.model, ds, r.iterations);
        CHECK(s.within_bound);
      }
    }
  }

  TEST_CASE("support check") {
    const Dataset ds = oracle::random_dataset(5, 3, 2, 1);
    Model model(ModelKind::pn, 3, 2);
    model.penalty = PenaltyKind::l1;
    model.append(Eigen::Vector3d(1, 0, 0));
    model.append(Eigen::Vector3d(0, 1, 0));
    CHECK_THROWS_AS(support_check(model, ds, 1), std::logic_error);
    const SupportReport r = support_check(model, ds, 2);
    CHECK(r.bound == 6);
    model.penalty = PenaltyKind::l1l2;
    CHECK(support_check(model, ds, 2).bound == 11);
  }

  TEST_CASE("a repeated atom is not appended twice") {
    Dataset ds;
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, -1;
    ds.X = X.sparseView();
    ds.label_map = {0, 1};
    ds.labels = {0, 1, 0};
    SolverConfig cfg;
    cfg.lambda = 1e-3;
    cfg.k_max = 5;
    const FitResult r = fit(ds, cfg);
    CHECK(r.model.k() == 1);
    for (const TraceRecord& rec : r.trace) CHECK(rec.k == 1);
  }

  TEST_CASE("fits are deterministic") {
    const Dataset ds = oracle::random_dataset(30, 6, 3, 7);
    SolverConfig cfg;
    cfg.penalty = PenaltyKind::l1linf;
    cfg.lambda = 0.3;
    cfg.k_max = 6;
    cfg.seed = 11;
    const FitResult a = fit(ds, cfg), b = fit(ds, cfg);
    CHECK(a.model.H == b.model.H);
    CHECK(a.model.V == b.model.V);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t t = 0; t < a.trace.size(); ++t) CHECK(a.trace[t].objective == b.trace[t].objective);
  }

  TEST_CASE("lambda grid") {
    const Dataset ds = oracle::random_dataset(30, 5, 3, 9);
    SolverConfig cfg;
    const double top = lambda_max(ds, cfg);
    const std::vector<double> grid = default_lambda_grid(ds, cfg, 4, 1e-2);
    REQUIRE(grid.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(grid[i] == doctest::Approx(top * std::pow(1e-2, (i + 1) / 4.0)));
    CHECK_THROWS_AS(default_lambda_grid(ds, cfg, 0), ConfigError);
    cfg.lambdas = {1.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("single-lambda path replays a plain fit") {
    const Dataset train = oracle::random_dataset(40, 5, 3, 21);
    const Dataset valid = oracle::random_dataset(20, 5, 3, 22);
    SolverConfig cfg;
    cfg.lambda = 0.4;
    cfg.lambdas = {0.4};
    cfg.k_max = 6;
    std::vector<double> scores{evaluate(Model(ModelKind::pn, 5, 3), valid, Metric::accuracy)};
    std::vector<Model> models;
    const FitResult plain = fit(train, cfg, [&](const Model& m, const TraceRecord&) {
      scores.push_back(evaluate(m, valid, Metric::accuracy));
      models.push_back(m);
    });
    const PathResult path = fit_path(train, valid, cfg, Metric::accuracy);
    REQUIRE(path.points.size() == 1);
    CHECK(path.points[0].metric_by_t == scores);
    const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
    CHECK(path.best_t == best);
    CHECK(path.best_metric == scores[static_cast<std::size_t>(best)]);
    CHECK(path.points[0].fit.model.V == plain.model.V);
    if (best > 0) CHECK(path.best.V == models[static_cast<std::size_t>(best - 1)].V);
  }

  TEST_CASE("path selects the best validation point") {
    const Dataset train = oracle::random_dataset(40, 5, 3, 31);
    const Dataset valid = oracle::random_dataset(25, 5, 3, 32);
    SolverConfig cfg;
    cfg.lambdas = {2.0, 0.5, 0.1};
    cfg.k_max = 5;
    const PathResult path = fit_path(train, valid, cfg, Metric::accuracy);
    double best = -1.0;
    std::size_t j_best = 0;
    int t_best = 0;
    for (std::size_t j = 0; j < path.points.size(); ++j) {
      const auto& m = path.points[j].metric_by_t;
      for (std::size_t t = 0; t < m.size(); ++t)
        if (m[t] > best) {
          best = m[t];
          j_best = j;
          t_best = static_cast<int>(t);
        }
    }
    CHECK(path.best_metric == best);
    CHECK(path.best_lambda == cfg.lambdas[j_best]);
    CHECK(path.best_t == t_best);
    CHECK(evaluate(path.best, valid, Metric::accuracy) == best);
  }

  TEST_CASE("trace csv bytes") {
    std::vector<TraceRecord> trace(2);
    trace[0] = {1, 2.5, 0.125, 1, 3.0};
    trace[1] = {2, 0.1, 0.25, 2, 4.0};
    std::ostringstream a, b;
    write_trace_csv(a, trace);
    CHECK(a.str() == "t,objective,score,k,seconds\n1,2.5,0.125,1,0\n2,0.10000000000000001,0.25,2,0\n");
    write_trace_csv(b, trace, true);
    CHECK(b.str().find(",3\n") != std::string::npos);
  }

  TEST_CASE("input validation") {
    SolverConfig cfg;
    Dataset empty;
    empty.X.resize(0, 3);
    CHECK_THROWS(fit(empty, cfg));
    cfg.loss = LossKind::binary_logistic;
    CHECK_THROWS(fit(oracle::random_dataset(5, 3, 2, 1), cfg));
    cfg = {};
    cfg.k_max = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lambda = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("metric names") {
    CHECK(parse_metric("ndcg@1") == Metric::ndcg1);
    CHECK(parse_metric("ndcg5") == Metric::ndcg5);
    CHECK(to_string(Metric::rmse) == "rmse");
    CHECK_FALSE(higher_is_better(Metric::rmse));
    CHECK_THROWS_AS(parse_metric("auc"), ConfigError);
  }
}
