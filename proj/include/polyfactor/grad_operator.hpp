#pragma once

#include <Eigen/Core>

#include "polyfactor/dataset.hpp"
#include "polyfactor/loss.hpp"
#include "polyfactor/model.hpp"

namespace polyfactor {

/// Matrix-free view of the negative gradient of the training loss with
/// respect to the (infinite) weight matrix over all unit-ball basis vectors.
///
/// For output c, with D(i, c) = grad l(y_i, o(x_i))_c,
///   pn:  Gamma_c = X^T D_c X
///   fm:  Gamma_c = 1/2 (X^T D_c X - sum_i D(i, c) diag(x_i)^2)
/// and the gradient row of basis vector h is g_h = -(h^T Gamma_c h)_c.
/// Gamma_c is only ever applied, never assembled.
///
/// refresh() mutates; every other member is read-only and may be called
/// concurrently. Holds a reference to the dataset, which must outlive it.
class GradientOperator {
 public:
  GradientOperator(const Dataset& ds, ModelKind kind, LossKind loss);

  /// Recomputes D from the model's current outputs.
  void refresh(const Model& model);

  /// Installs an explicit n x m diagonal matrix D (used by harnesses).
  void set_gradients(Eigen::MatrixXd D);

  Eigen::VectorXd gamma_matvec(int c, const Eigen::Ref<const Eigen::VectorXd>& h) const;

  /// Column c holds Gamma_c h; one pass over X for all outputs.
  Eigen::MatrixXd gamma_matvec_all(const Eigen::Ref<const Eigen::VectorXd>& h) const;

  /// (h^T Gamma_c h)_c.
  Eigen::VectorXd quadratic_forms(const Eigen::Ref<const Eigen::VectorXd>& h) const;

  /// g_h = -(h^T Gamma_c h)_c.
  Eigen::VectorXd grad_row(const Eigen::Ref<const Eigen::VectorXd>& h) const {
    return -quadratic_forms(h);
  }

  const Eigen::MatrixXd& D() const { return D_; }
  const Dataset& data() const { return *ds_; }
  ModelKind kind() const { return kind_; }
  LossKind loss() const { return loss_; }
  Eigen::Index dim() const { return ds_->cols(); }
  int num_outputs() const { return static_cast<int>(D_.cols()); }

 private:
  void update_diag_sums();

  const Dataset* ds_;
  ModelKind kind_;
  LossKind loss_;
  SparseMatrix X2_;     // entrywise squares of X (fm only)
  Eigen::MatrixXd D_;   // n x m
  Eigen::MatrixXd S_;   // d x m, S(j, c) = sum_i D(i, c) x_ij^2 (fm only)
};

}  // namespace polyfactor
