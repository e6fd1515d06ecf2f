#include "polyfactor/refit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace polyfactor {

namespace {

using Eigen::Index;

Eigen::Map<const Eigen::VectorXd> flat(const Eigen::MatrixXd& M) { return {M.data(), M.size()}; }

Eigen::MatrixXd unflat(const Eigen::VectorXd& v, Index rows, Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

void append_trace(RefitReport& report, const std::vector<double>& trace) {
  // the first entry repeats the previous block's last value
  const std::size_t from = report.trace.empty() ? 0 : 1;
  report.trace.insert(report.trace.end(), trace.begin() + static_cast<std::ptrdiff_t>(std::min(from, trace.size())),
                      trace.end());
}

// Phi for the rows of H, through Z = X H^T.
RowMatrix features(ModelKind kind, const Dataset& ds, const SparseMatrix& X2, const Eigen::MatrixXd& H,
                   RowMatrix& Z) {
  Z = ds.X * H.transpose();
  RowMatrix phi = Z.cwiseAbs2();
  if (kind == ModelKind::fm) phi = 0.5 * (phi - X2 * H.cwiseAbs2().transpose()).eval();
  return phi;
}

Eigen::MatrixXd hidden_gradient_from(ModelKind kind, const Dataset& ds, const SparseMatrix& X2,
                                     const Eigen::MatrixXd& H, const Eigen::MatrixXd& V, const RowMatrix& Z,
                                     const RowMatrix& G) {
  const RowMatrix W = G * V.transpose();  // n x k
  const RowMatrix WZ = W.cwiseProduct(Z);
  Eigen::MatrixXd grad = (ds.X.transpose() * WZ).transpose();
  if (kind == ModelKind::pn) return 2.0 * grad;
  grad -= (X2.transpose() * W).transpose().cwiseProduct(H);
  return grad;
}

void project_rows_to_ball(Eigen::MatrixXd& H) {
  for (Index r = 0; r < H.rows(); ++r) {
    const double n = H.row(r).norm();
    if (n > 1.0) H.row(r) /= n;
  }
}

}  // namespace

std::string_view to_string(RefitMode mode) { return mode == RefitMode::output ? "output" : "full"; }

RefitMode parse_refit_mode(std::string_view name) {
  if (name == "output") return RefitMode::output;
  if (name == "full") return RefitMode::full;
  throw ConfigError("unknown refit mode '" + std::string(name) + "'");
}

double data_loss(const Dataset& ds, LossKind loss, const RowMatrix& O, RowMatrix* G) {
  const Index n = O.rows();
  const auto m = static_cast<std::size_t>(O.cols());
  if (G) G->resize(n, O.cols());
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const std::span<const double> o(O.row(i).data(), m);
    const TargetRow target = ds.target(i);
    total += loss_value(loss, target, o);
    if (G) loss_gradient(loss, target, o, std::span<double>(G->row(i).data(), m));
  }
  return total;
}

double penalized_objective(const Model& model, const Dataset& ds, LossKind loss, const Penalty& penalty) {
  const RowMatrix O = outputs(model, ds.X);
  return data_loss(ds, loss, O) + penalty.lambda * penalty_value(penalty.kind, model.V);
}

Eigen::MatrixXd hidden_gradient(const Model& model, const Dataset& ds, const RowMatrix& G) {
  SparseMatrix X2;
  if (model.kind == ModelKind::fm) X2 = ds.X.cwiseAbs2();
  RowMatrix Z = ds.X * model.H.transpose();
  return hidden_gradient_from(model.kind, ds, X2, model.H, model.V, Z, G);
}

RefitReport refit_output(Model& model, const Dataset& ds, LossKind loss, const Penalty& penalty,
                         const FistaConfig& cfg) {
  RefitReport report;
  if (model.k() == 0) {
    report.trace.push_back(penalized_objective(model, ds, loss, penalty));
    return report;
  }
  const Index k = model.k(), m = model.m();
  const Eigen::MatrixXd phi = feature_map(model.kind, ds.X, model.H);
  RowMatrix G;

  CompositeProblem problem;
  problem.smooth = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const Eigen::MatrixXd V = unflat(x, k, m);
    const RowMatrix O = phi * V;
    const double f = data_loss(ds, loss, O, grad ? &G : nullptr);
    if (grad) {
      const Eigen::MatrixXd gV = phi.transpose() * G;
      *grad = flat(gV);
    }
    return f;
  };
  problem.nonsmooth = [&](const Eigen::VectorXd& x) {
    return penalty.lambda * penalty_value(penalty.kind, unflat(x, k, m));
  };
  problem.prox = [&](const Eigen::VectorXd& x, double step) {
    const Eigen::MatrixXd V = prox(penalty, unflat(x, k, m), step);
    return Eigen::VectorXd(flat(V));
  };

  Eigen::VectorXd x = flat(model.V);
  const FistaResult r = fista(problem, x, cfg);
  model.V = unflat(x, k, m);
  report.trace = r.trace;
  report.iterations = r.iterations;
  return report;
}

RefitReport refit_full(Model& model, const Dataset& ds, LossKind loss, const Penalty& penalty,
                       const FistaConfig& cfg, int rounds) {
  RefitReport report = refit_output(model, ds, loss, penalty, cfg);
  if (model.k() == 0) return report;
  SparseMatrix X2;
  if (model.kind == ModelKind::fm) X2 = ds.X.cwiseAbs2();

  for (int round = 0; round < rounds; ++round) {
    const double start = report.trace.back();
    const Index k = model.k(), d = model.d();
    const double pen = penalty.lambda * penalty_value(penalty.kind, model.V);
    RowMatrix Z, G;

    CompositeProblem hidden;
    hidden.smooth = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
      const Eigen::MatrixXd H = unflat(x, k, d);
      const RowMatrix O = features(model.kind, ds, X2, H, Z) * model.V;
      const double f = data_loss(ds, loss, O, grad ? &G : nullptr);
      if (grad) {
        const Eigen::MatrixXd gH = hidden_gradient_from(model.kind, ds, X2, H, model.V, Z, G);
        *grad = flat(gH);
      }
      return f + pen;
    };
    hidden.nonsmooth = [](const Eigen::VectorXd&) { return 0.0; };
    hidden.prox = [&](const Eigen::VectorXd& x, double) {
      Eigen::MatrixXd H = unflat(x, k, d);
      project_rows_to_ball(H);
      return Eigen::VectorXd(flat(H));
    };

    Eigen::VectorXd x = flat(model.H);
    const FistaResult rh = fista(hidden, x, cfg);
    model.H = unflat(x, k, d);
    append_trace(report, rh.trace);
    report.iterations += rh.iterations;

    const RefitReport rv = refit_output(model, ds, loss, penalty, cfg);
    append_trace(report, rv.trace);
    report.iterations += rv.iterations;

    if (start - report.trace.back() <= cfg.tol * std::max(std::abs(report.trace.back()), 1e-300)) break;
  }
  return report;
}

void prune(Model& model, double tol_row) {
  std::vector<Index> keep;
  for (Index r = 0; r < model.k(); ++r) {
    if (model.m() > 0 && model.V.row(r).cwiseAbs().maxCoeff() >= tol_row) keep.push_back(r);
  }
  if (static_cast<Index>(keep.size()) == model.k()) return;
  Eigen::MatrixXd H(static_cast<Index>(keep.size()), model.d());
  Eigen::MatrixXd V(static_cast<Index>(keep.size()), model.m());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    H.row(static_cast<Index>(j)) = model.H.row(keep[j]);
    V.row(static_cast<Index>(j)) = model.V.row(keep[j]);
  }
  model.H = std::move(H);
  model.V = std::move(V);
}

}  // namespace polyfactor
