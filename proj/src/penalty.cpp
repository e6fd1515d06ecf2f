#include "polyfactor/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "polyfactor/dataset.hpp"

namespace polyfactor {

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::l1: return "l1";
    case PenaltyKind::l1l2: return "l1l2";
    case PenaltyKind::l1linf: return "l1linf";
  }
  return "?";
}

PenaltyKind parse_penalty(std::string_view name) {
  for (auto k : {PenaltyKind::l1, PenaltyKind::l1l2, PenaltyKind::l1linf}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown penalty '" + std::string(name) + "'");
}

SelectionNorm selection_norm(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::l1: return SelectionNorm::linf;
    case PenaltyKind::l1l2: return SelectionNorm::l2;
    case PenaltyKind::l1linf: return SelectionNorm::l1;
  }
  return SelectionNorm::l2;
}

double vector_norm(SelectionNorm norm, const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (g.size() == 0) return 0.0;
  switch (norm) {
    case SelectionNorm::linf: return g.cwiseAbs().maxCoeff();
    case SelectionNorm::l2: return g.norm();
    case SelectionNorm::l1: return g.cwiseAbs().sum();
  }
  return 0.0;
}

double penalty_value(PenaltyKind kind, const Eigen::MatrixXd& V) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < V.rows(); ++r) {
    switch (kind) {
      case PenaltyKind::l1: sum += V.row(r).cwiseAbs().sum(); break;
      case PenaltyKind::l1l2: sum += V.row(r).norm(); break;
      case PenaltyKind::l1linf: sum += V.row(r).cwiseAbs().maxCoeff(); break;
    }
  }
  return sum;
}

double dual_norm(PenaltyKind kind, const Eigen::MatrixXd& G) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < G.rows(); ++r) {
    double v = 0.0;
    switch (kind) {
      case PenaltyKind::l1: v = G.row(r).cwiseAbs().maxCoeff(); break;
      case PenaltyKind::l1l2: v = G.row(r).norm(); break;
      case PenaltyKind::l1linf: v = G.row(r).cwiseAbs().sum(); break;
    }
    best = std::max(best, v);
  }
  return best;
}

Eigen::VectorXd project_l1_ball(const Eigen::Ref<const Eigen::VectorXd>& v, double radius) {
  if (radius <= 0) return Eigen::VectorXd::Zero(v.size());
  if (v.cwiseAbs().sum() <= radius) return v;
  std::vector<double> u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - radius) / static_cast<double>(j + 1);
    if (u[j] - t > 0) theta = t;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = v[i] < 0 ? -mag : mag;
  }
  return out;
}

void prox_rows(PenaltyKind kind, Eigen::MatrixXd& V, double t) {
  switch (kind) {
    case PenaltyKind::l1:
      for (Eigen::Index i = 0; i < V.size(); ++i) {
        const double a = V.data()[i];
        const double mag = std::max(std::abs(a) - t, 0.0);
        V.data()[i] = a < 0 ? -mag : mag;
      }
      return;
    case PenaltyKind::l1l2:
      for (Eigen::Index r = 0; r < V.rows(); ++r) {
        const double nrm = V.row(r).norm();
        if (nrm <= t) {
          V.row(r).setZero();
        } else {
          V.row(r) *= 1.0 - t / nrm;
        }
      }
      return;
    case PenaltyKind::l1linf:
      // Moreau: prox of t|.|_inf is v - projection onto the l1 ball of radius t
      for (Eigen::Index r = 0; r < V.rows(); ++r) {
        const Eigen::VectorXd row = V.row(r).transpose();
        if (row.cwiseAbs().sum() <= t) {
          V.row(r).setZero();
        } else {
          V.row(r) = (row - project_l1_ball(row, t)).transpose();
        }
      }
      return;
  }
}

Eigen::MatrixXd prox(const Penalty& penalty, const Eigen::MatrixXd& V, double step) {
  Eigen::MatrixXd out = V;
  prox_rows(penalty.kind, out, penalty.lambda * step);
  return out;
}

}  // namespace polyfactor
