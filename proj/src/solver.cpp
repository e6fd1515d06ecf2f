#include "polyfactor/solver.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#include "polyfactor/grad_operator.hpp"
#include "polyfactor/mcrank.hpp"

namespace polyfactor {

namespace {

std::uint64_t iteration_seed(std::uint64_t seed, int t) {
  return seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(t) * 0xd1b54a32d192ed03ULL;
}

bool duplicate_atom(const Model& model, const Eigen::VectorXd& h) {
  const double hn = h.norm();
  for (Eigen::Index r = 0; r < model.k(); ++r) {
    const double rn = model.H.row(r).norm();
    if (rn == 0.0 || hn == 0.0) continue;
    if (std::abs(model.H.row(r).dot(h)) / (rn * hn) > 1.0 - 1e-8) return true;
  }
  return false;
}

void put_double(std::ostream& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.write(buf, res.ptr - buf);
}

int thread_budget(std::size_t tasks) {
  unsigned n = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("POLYFACTOR_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

}  // namespace

void SolverConfig::validate() const {
  if (k_max < 1) throw ConfigError("k_max must be at least 1");
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0)) throw ConfigError("lambda grid values must be positive");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) throw ConfigError("lambda grid must be strictly decreasing");
  }
  if (full_rounds < 1) throw ConfigError("full_rounds must be positive");
  if (!(stop_gap >= 0)) throw ConfigError("stop_gap must be non-negative");
  select.validate();
  fista.validate();
}

FitResult fit(const Dataset& ds, const SolverConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  if (ds.rows() < 1) throw std::invalid_argument("empty training set");
  if (is_multiclass(cfg.loss) && ds.num_classes() < 1) throw std::invalid_argument("dataset has no labels");
  if (cfg.loss == LossKind::binary_logistic && !ds.has_signs())
    throw std::invalid_argument("binary-logistic loss needs a {-1,+1} target matrix");

  FitResult res;
  Model& model = res.model;
  model = Model(cfg.model, ds.cols(), output_dim(cfg.loss, ds));
  model.loss = cfg.loss;
  model.penalty = cfg.penalty;
  model.lambda = cfg.lambda;
  model.label_map = ds.label_map;
  model.bias_augmented = ds.bias_augmented;

  const Penalty penalty{cfg.penalty, cfg.lambda};
  const SelectionNorm norm = selection_norm(cfg.penalty);
  GradientOperator op(ds, cfg.model, cfg.loss);
  double objective = penalized_objective(model, ds, cfg.loss, penalty);
  res.initial_objective = objective;
  const auto t0 = std::chrono::steady_clock::now();

  res.stop_reason = "k_max";
  for (int t = 1; t <= cfg.k_max; ++t) {
    op.refresh(model);
    SelectConfig sc = cfg.select;
    sc.seed = iteration_seed(cfg.seed, t);
    const SelectionResult sel = select_basis(op, norm, sc);
    if (sel.degenerate) {
      res.degenerate = t == 1;
      res.stop_reason = "degenerate";
      break;
    }
    if (sel.score <= cfg.stop_gap) {
      res.stop_reason = "gap";
      break;
    }
    if (sel.score <= cfg.lambda) {
      res.stop_reason = "optimal";
      break;
    }
    const Eigen::Index k_before = model.k();
    const bool appended = !duplicate_atom(model, sel.h);
    if (appended) model.append(sel.h);

    const RefitReport report = cfg.refit == RefitMode::full
                                   ? refit_full(model, ds, cfg.loss, penalty, cfg.fista, cfg.full_rounds)
                                   : refit_output(model, ds, cfg.loss, penalty, cfg.fista);
    prune(model);
    const double next = report.trace.back();
    ++res.iterations;

    TraceRecord rec;
    rec.t = t;
    rec.objective = next;
    rec.score = sel.score;
    rec.k = model.k();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.trace.push_back(rec);
    if (on_iteration) on_iteration(model, rec);

    const bool atom_rejected = !appended || model.k() <= k_before;
    if (atom_rejected && !(next < objective)) {
      res.stop_reason = "stalled";
      break;
    }
    objective = next;
  }
  return res;
}

double lambda_max(const Dataset& ds, const SolverConfig& cfg) {
  Model empty(cfg.model, ds.cols(), output_dim(cfg.loss, ds));
  GradientOperator op(ds, cfg.model, cfg.loss);
  op.refresh(empty);
  SelectConfig sc = cfg.select;
  sc.seed = iteration_seed(cfg.seed, 1);
  return select_basis(op, selection_norm(cfg.penalty), sc).score;
}

std::vector<double> default_lambda_grid(const Dataset& ds, const SolverConfig& cfg, int points, double ratio) {
  if (points < 1) throw ConfigError("grid needs at least one point");
  if (!(ratio > 0 && ratio < 1)) throw ConfigError("grid ratio must lie in (0, 1)");
  const double top = lambda_max(ds, cfg);
  if (!(top > 0)) throw std::runtime_error("zero gradient at the empty model; no lambda grid");
  std::vector<double> grid;
  for (int i = 1; i <= points; ++i) grid.push_back(top * std::pow(ratio, static_cast<double>(i) / points));
  return grid;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::accuracy: return "accuracy";
    case Metric::rmse: return "rmse";
    case Metric::ndcg1: return "ndcg@1";
    case Metric::ndcg5: return "ndcg@5";
  }
  return "";
}

Metric parse_metric(std::string_view name) {
  if (name == "accuracy") return Metric::accuracy;
  if (name == "rmse") return Metric::rmse;
  if (name == "ndcg@1" || name == "ndcg1") return Metric::ndcg1;
  if (name == "ndcg@5" || name == "ndcg5") return Metric::ndcg5;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

bool higher_is_better(Metric metric) { return metric != Metric::rmse; }

double evaluate(const Model& model, const Dataset& ds, Metric metric) {
  if (ds.rows() == 0) throw std::invalid_argument("cannot evaluate on an empty dataset");
  if (metric == Metric::accuracy) {
    if (!is_multiclass(model.loss)) throw ConfigError("accuracy needs a class-index loss");
    const RowMatrix O = outputs(model, ds.X);
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < O.rows(); ++i) {
      const std::span<const double> o(O.row(i).data(), static_cast<std::size_t>(O.cols()));
      hits += predict_class(o) == ds.labels[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(hits) / static_cast<double>(O.rows());
  }
  const std::vector<double> preds = predict_ratings(model, ds);
  const std::vector<double> truths = true_ratings(ds);
  if (metric == Metric::rmse) return rmse(preds, truths);
  if (ds.groups.empty()) throw ConfigError("nDCG needs ranking groups");
  return ndcg_at(ds.groups, preds, truths, metric == Metric::ndcg1 ? 1 : 5);
}

PathResult fit_path(const Dataset& train, const Dataset& valid, const SolverConfig& cfg, Metric metric) {
  cfg.validate();
  const std::vector<double> grid = cfg.lambdas.empty() ? default_lambda_grid(train, cfg) : cfg.lambdas;
  const bool up = higher_is_better(metric);
  auto better = [up](double a, double b) { return up ? a > b : a < b; };

  std::vector<PathPoint> points(grid.size());
  std::vector<Model> best_models(grid.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(grid.size());

  auto work = [&] {
    for (std::size_t j = next++; j < grid.size(); j = next++) {
      try {
        SolverConfig c = cfg;
        c.lambda = grid[j];
        PathPoint& pt = points[j];
        pt.lambda = grid[j];
        Model empty(c.model, train.cols(), output_dim(c.loss, train));
        empty.loss = c.loss;
        empty.penalty = c.penalty;
        empty.lambda = c.lambda;
        empty.label_map = train.label_map;
        empty.bias_augmented = train.bias_augmented;
        pt.metric_by_t.push_back(evaluate(empty, valid, metric));
        pt.best_metric = pt.metric_by_t[0];
        best_models[j] = empty;
        pt.fit = fit(train, c, [&](const Model& m, const TraceRecord& rec) {
          const double v = evaluate(m, valid, metric);
          pt.metric_by_t.push_back(v);
          if (better(v, pt.best_metric)) {
            pt.best_metric = v;
            pt.best_t = rec.t;
            best_models[j] = m;
          }
        });
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const int threads = thread_budget(grid.size());
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PathResult res;
  std::size_t best = 0;
  for (std::size_t j = 1; j < points.size(); ++j) {
    if (better(points[j].best_metric, points[best].best_metric)) best = j;
  }
  res.best = best_models[best];
  res.best_lambda = points[best].lambda;
  res.best_t = points[best].best_t;
  res.best_metric = points[best].best_metric;
  res.points = std::move(points);
  return res;
}

SupportReport support_check(const Model& model, const Dataset& ds, int iterations) {
  SupportReport r;
  r.k = model.k();
  r.iterations = iterations;
  if (r.k > iterations)
    throw std::logic_error("model has " + std::to_string(r.k) + " basis vectors after " +
                           std::to_string(iterations) + " iterations");
  const Eigen::Index nm1 = ds.rows() * model.m() + 1;
  r.bound = model.penalty == PenaltyKind::l1 ? std::min(nm1, model.d() * model.m()) : nm1;
  r.within_bound = r.k <= r.bound;
  return r;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool timing) {
  out << "t,objective,score,k,seconds\n";
  for (const TraceRecord& r : trace) {
    out << r.t << ',';
    put_double(out, r.objective);
    out << ',';
    put_double(out, r.score);
    out << ',' << r.k << ',';
    put_double(out, timing ? r.seconds : 0.0);
    out << '\n';
  }
}

}  // namespace polyfactor
