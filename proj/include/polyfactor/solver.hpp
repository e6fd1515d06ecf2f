#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "polyfactor/basis_select.hpp"
#include "polyfactor/dataset.hpp"
#include "polyfactor/fista.hpp"
#include "polyfactor/loss.hpp"
#include "polyfactor/model.hpp"
#include "polyfactor/penalty.hpp"
#include "polyfactor/refit.hpp"

namespace polyfactor {

struct SolverConfig {
  ModelKind model = ModelKind::pn;
  LossKind loss = LossKind::logistic;
  PenaltyKind penalty = PenaltyKind::l1l2;
  double lambda = 1.0;
  std::vector<double> lambdas;  // path grid, strictly decreasing; empty = default grid
  int k_max = 30;
  RefitMode refit = RefitMode::output;
  int full_rounds = 10;
  SelectConfig select;
  FistaConfig fista;
  double stop_gap = 1e-7;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceRecord {
  int t = 0;
  double objective = 0.0;  // penalized, after refit and prune
  double score = 0.0;      // selection score of the atom tried at t
  Eigen::Index k = 0;
  double seconds = 0.0;    // since the start of fit()
};

struct FitResult {
  Model model;
  std::vector<TraceRecord> trace;
  double initial_objective = 0.0;
  int iterations = 0;
  bool degenerate = false;  // zero gradient operator at t = 1
  std::string stop_reason;  // "k_max", "gap", "optimal", "stalled", "degenerate"
};

/// Called after every iteration with the current (pruned) model.
using IterationCallback = std::function<void(const Model&, const TraceRecord&)>;

/// Greedy conditional-gradient loop: select an atom for the current
/// gradient, append it with a zero output row, refit, prune. Stops once the
/// selected atom scores at most lambda, since its weight would stay zero.
FitResult fit(const Dataset& ds, const SolverConfig& cfg, const IterationCallback& on_iteration = {});

/// Selection score of the best atom at V = 0. Under the penalized objective
/// no atom enters once lambda reaches it.
double lambda_max(const Dataset& ds, const SolverConfig& cfg);

/// `points` values log-spaced from lambda_max * ratio^(1/points) down to
/// lambda_max * ratio.
std::vector<double> default_lambda_grid(const Dataset& ds, const SolverConfig& cfg, int points = 10,
                                        double ratio = 1e-3);

enum class Metric { accuracy, rmse, ndcg1, ndcg5 };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);
bool higher_is_better(Metric metric);

/// Accuracy for class-index losses; RMSE / nDCG on predicted ratings.
double evaluate(const Model& model, const Dataset& ds, Metric metric);

struct PathPoint {
  double lambda = 0.0;
  int best_t = 0;
  double best_metric = 0.0;
  std::vector<double> metric_by_t;  // index t; entry 0 is the empty model
  FitResult fit;
};

struct PathResult {
  Model best;
  double best_lambda = 0.0;
  int best_t = 0;
  double best_metric = 0.0;
  std::vector<PathPoint> points;
};

/// One independent fit per lambda, validated after every iteration. Ties
/// go to the earlier lambda, then the smaller t. Runs up to
/// POLYFACTOR_THREADS fits concurrently.
PathResult fit_path(const Dataset& train, const Dataset& valid, const SolverConfig& cfg, Metric metric);

struct SupportReport {
  Eigen::Index k = 0;
  int iterations = 0;
  Eigen::Index bound = 0;  // min(nm+1, dm) for l1, nm+1 otherwise
  bool within_bound = true;
};

/// Throws std::logic_error if k exceeds the number of iterations run.
SupportReport support_check(const Model& model, const Dataset& ds, int iterations);

/// CSV: t,objective,score,k,seconds. Seconds are written as 0 unless
/// `timing` is set, so that repeated runs produce identical bytes.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool timing = false);

}  // namespace polyfactor
