#include "polyfactor/mcrank.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace polyfactor {

namespace {

// Monotone CDF p_1..p_m with p_m = 1.
std::vector<double> cdf(std::span<const double> o) {
  std::vector<double> p(o.size());
  double running = 0.0;
  for (std::size_t c = 0; c < o.size(); ++c) {
    running = std::max(running, sigmoid(o[c]));
    p[c] = running;
  }
  if (!p.empty()) p.back() = 1.0;
  return p;
}

}  // namespace

Dataset build_ordinal(const Dataset& ds) {
  Dataset out = ds;
  const int m = ds.num_classes();
  out.signs.resize(ds.rows(), m);
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    const int level = ds.labels[static_cast<std::size_t>(i)];
    for (int c = 0; c < m; ++c) out.signs(i, c) = level <= c ? 1.0 : -1.0;
  }
  return out;
}

double expected_relevance(std::span<const double> o) {
  const std::vector<double> p = cdf(o);
  double y = 0.0, prev = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    y += static_cast<double>(c + 1) * (p[c] - prev);
    prev = p[c];
  }
  return y;
}

double expected_relevance(const Model& model, const SparseVector& x) {
  const Eigen::VectorXd o = outputs(model, x);
  return expected_relevance(std::span<const double>(o.data(), static_cast<std::size_t>(o.size())));
}

FitResult fit_mcrank(const Dataset& ordinal, SolverConfig cfg, const IterationCallback& on_iteration) {
  if (!ordinal.has_signs()) throw std::invalid_argument("fit_mcrank needs build_ordinal() targets");
  if (cfg.loss != LossKind::binary_logistic)
    throw ConfigError("McRank trains binary-logistic outputs, got loss '" + std::string(to_string(cfg.loss)) + "'");
  return fit(ordinal, cfg, on_iteration);
}

std::vector<double> predict_ratings(const Model& model, const Dataset& ds) {
  const RowMatrix O = outputs(model, ds.X);
  std::vector<double> preds(static_cast<std::size_t>(O.rows()));
  const std::size_t m = static_cast<std::size_t>(O.cols());
  if (model.loss == LossKind::binary_logistic) {
    const bool values = model.label_map.size() == m;
    for (Eigen::Index i = 0; i < O.rows(); ++i) {
      const std::span<const double> o(O.row(i).data(), m);
      if (!values) {
        preds[static_cast<std::size_t>(i)] = expected_relevance(o);
        continue;
      }
      const std::vector<double> p = cdf(o);
      double y = 0.0, prev = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        y += model.label_map[c] * (p[c] - prev);
        prev = p[c];
      }
      preds[static_cast<std::size_t>(i)] = y;
    }
  } else if (model.loss == LossKind::squared) {
    double lo = -INFINITY, hi = INFINITY;
    if (!model.label_map.empty()) {
      lo = model.label_map.front();
      hi = model.label_map.back();
    }
    for (Eigen::Index i = 0; i < O.rows(); ++i) preds[static_cast<std::size_t>(i)] = std::clamp(O(i, 0), lo, hi);
  } else {
    throw ConfigError("ratings need a binary-logistic or squared-loss model");
  }
  return preds;
}

std::vector<double> true_ratings(const Dataset& ds) {
  std::vector<double> r(ds.labels.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ds.label_map[static_cast<std::size_t>(ds.labels[i])];
  return r;
}

double rmse(std::span<const double> preds, std::span<const double> truths) {
  if (preds.empty() || preds.size() != truths.size()) throw std::invalid_argument("rmse needs equal non-empty inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += (preds[i] - truths[i]) * (preds[i] - truths[i]);
  return std::sqrt(s / static_cast<double>(preds.size()));
}

double ndcg_at(std::span<const int> groups, std::span<const double> preds, std::span<const double> truths, int k) {
  if (preds.empty() || preds.size() != truths.size() || groups.size() != preds.size())
    throw std::invalid_argument("ndcg needs equal non-empty inputs");
  if (k < 1) throw std::invalid_argument("ndcg cutoff must be positive");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);

  auto dcg = [k](const std::vector<double>& rels) {
    double s = 0.0;
    for (std::size_t i = 0; i < rels.size() && i < static_cast<std::size_t>(k); ++i)
      s += (std::exp2(rels[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    return s;
  };
  double total = 0.0;
  std::size_t counted = 0;
  for (auto& [g, idx] : members) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return preds[a] > preds[b]; });
    std::vector<double> ranked, ideal;
    for (std::size_t i : idx) ranked.push_back(truths[i]);
    ideal = ranked;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double best = dcg(ideal);
    if (!(best > 0)) continue;
    total += dcg(ranked) / best;
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("every group has zero ideal DCG");
  return total / static_cast<double>(counted);
}

}  // namespace polyfactor
