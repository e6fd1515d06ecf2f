#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "polyfactor/dataset.hpp"
#include "polyfactor/loss.hpp"
#include "polyfactor/penalty.hpp"

namespace polyfactor {

/// pn: squared activation (h^T x)^2.
/// fm: ANOVA activation sum_{i<j} x_i h_i x_j h_j.
enum class ModelKind { pn, fm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Multi-output network with shared hidden units: row r of H is a basis
/// vector h_r (kept in the unit ball), row r of V its weights across the m
/// outputs, so that o(x) = sum_r sigma(h_r, x) v_r. The per-output quadratic
/// forms W_c = H^T diag(V(:, c)) H are never formed.
struct Model {
  ModelKind kind = ModelKind::pn;
  LossKind loss = LossKind::logistic;
  PenaltyKind penalty = PenaltyKind::l1l2;
  double lambda = 1.0;
  Eigen::MatrixXd H;  // k x d
  Eigen::MatrixXd V;  // k x m
  std::vector<double> label_map;
  bool bias_augmented = false;

  Model() = default;
  Model(ModelKind kind, Eigen::Index d, Eigen::Index m) : kind(kind), H(0, d), V(0, m) {}

  Eigen::Index k() const { return H.rows(); }
  Eigen::Index d() const { return H.cols(); }
  Eigen::Index m() const { return V.cols(); }

  /// Appends basis vector h with a zero output row.
  void append(const Eigen::VectorXd& h);
  void validate() const;
};

double activation(ModelKind kind, const Eigen::Ref<const Eigen::VectorXd>& h, const SparseVector& x);
double activation(ModelKind kind, const Eigen::Ref<const Eigen::VectorXd>& h, const SparseMatrix& X,
                  Eigen::Index row);

/// Phi (n x k) with Phi(i, r) = sigma(h_r, x_i). Cost O(nnz(X) k).
Eigen::MatrixXd feature_map(ModelKind kind, const SparseMatrix& X, const Eigen::MatrixXd& H);

Eigen::VectorXd outputs(const Model& model, const SparseVector& x);
/// All outputs, n x m.
Eigen::MatrixXd outputs(const Model& model, const SparseMatrix& X);

/// argmax, ties to the smallest index.
int predict_class(std::span<const double> o);
int predict_class(const Model& model, const SparseVector& x);

}  // namespace polyfactor
