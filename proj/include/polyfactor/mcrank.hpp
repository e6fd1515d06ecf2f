#pragma once

#include <span>
#include <vector>

#include "polyfactor/dataset.hpp"
#include "polyfactor/model.hpp"
#include "polyfactor/solver.hpp"

namespace polyfactor {

/// Copy of `ds` with signs(i, c) = +1 iff level(y_i) <= c + 1, levels being
/// the 1-based label indices.
Dataset build_ordinal(const Dataset& ds);

/// p_c = sigmoid(o_c), made non-decreasing by a running max, p_m = 1, then
/// sum_c c (p_c - p_{c-1}) with p_0 = 0.
double expected_relevance(std::span<const double> o);
double expected_relevance(const Model& model, const SparseVector& x);

/// Fits the multi-output binary-logistic model on an ordinal dataset.
FitResult fit_mcrank(const Dataset& ordinal, SolverConfig cfg, const IterationCallback& on_iteration = {});

/// Predicted rating per row: expected relevance in label units for
/// binary-logistic models, the clipped single output for squared loss.
std::vector<double> predict_ratings(const Model& model, const Dataset& ds);

/// Original label value of every row.
std::vector<double> true_ratings(const Dataset& ds);

double rmse(std::span<const double> preds, std::span<const double> truths);

/// Mean over groups of DCG@k / IDCG@k, gain 2^rel - 1, discount log2(i + 1);
/// ties in `preds` keep row order; groups with IDCG = 0 are skipped.
double ndcg_at(std::span<const int> groups, std::span<const double> preds, std::span<const double> truths, int k);

}  // namespace polyfactor
