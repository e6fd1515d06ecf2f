#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace polyfactor {

/// Row-structured penalties on the output layer V (k x m): entrywise l1,
/// group lasso l1/l2 and l1/linf, i.e. sums over rows of |.|_1, |.|_2, |.|_inf.
enum class PenaltyKind { l1, l1l2, l1linf };

std::string_view to_string(PenaltyKind kind);
PenaltyKind parse_penalty(std::string_view name);

struct Penalty {
  PenaltyKind kind = PenaltyKind::l1l2;
  double lambda = 1.0;
};

/// Norm used to score a gradient row g_h when selecting a basis vector:
/// the dual of the per-row penalty norm.
enum class SelectionNorm { linf, l2, l1 };

SelectionNorm selection_norm(PenaltyKind kind);
double vector_norm(SelectionNorm norm, const Eigen::Ref<const Eigen::VectorXd>& g);

/// Omega(V).
double penalty_value(PenaltyKind kind, const Eigen::MatrixXd& V);

/// Omega*(G) = max_{Omega(D) <= 1} <D, G>.
double dual_norm(PenaltyKind kind, const Eigen::MatrixXd& G);

/// Euclidean projection onto {u : |u|_1 <= radius}; sort-based, O(m log m).
Eigen::VectorXd project_l1_ball(const Eigen::Ref<const Eigen::VectorXd>& v, double radius);

/// In-place proximal operator of t * Omega applied row by row.
void prox_rows(PenaltyKind kind, Eigen::MatrixXd& V, double t);

/// prox_{step * lambda * Omega}(V).
Eigen::MatrixXd prox(const Penalty& penalty, const Eigen::MatrixXd& V, double step);

}  // namespace polyfactor
