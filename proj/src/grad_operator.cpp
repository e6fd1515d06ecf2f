#include "polyfactor/grad_operator.hpp"

#include <span>
#include <stdexcept>

namespace polyfactor {

GradientOperator::GradientOperator(const Dataset& ds, ModelKind kind, LossKind loss)
    : ds_(&ds), kind_(kind), loss_(loss) {
  if (kind_ == ModelKind::fm) X2_ = ds.X.cwiseAbs2();
  D_ = Eigen::MatrixXd::Zero(ds.rows(), output_dim(loss, ds));
}

void GradientOperator::refresh(const Model& model) {
  const Eigen::Index n = ds_->rows();
  const Eigen::Index m = D_.cols();
  if (model.m() != m || model.d() != ds_->cols())
    throw std::invalid_argument("model dimensions do not match the dataset");
  const Eigen::MatrixXd O = outputs(model, ds_->X);
  std::vector<double> o(static_cast<std::size_t>(m)), g(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < m; ++c) o[static_cast<std::size_t>(c)] = O(i, c);
    loss_gradient(loss_, ds_->target(i), o, g);
    for (Eigen::Index c = 0; c < m; ++c) D_(i, c) = g[static_cast<std::size_t>(c)];
  }
  update_diag_sums();
}

void GradientOperator::set_gradients(Eigen::MatrixXd D) {
  if (D.rows() != ds_->rows()) throw std::invalid_argument("D must have one row per sample");
  D_ = std::move(D);
  update_diag_sums();
}

void GradientOperator::update_diag_sums() {
  if (kind_ == ModelKind::fm) S_ = X2_.transpose() * D_;
}

Eigen::VectorXd GradientOperator::gamma_matvec(int c, const Eigen::Ref<const Eigen::VectorXd>& h) const {
  const Eigen::VectorXd z = ds_->X * h;
  Eigen::VectorXd out = ds_->X.transpose() * (D_.col(c).cwiseProduct(z));
  if (kind_ == ModelKind::fm) out = 0.5 * (out - S_.col(c).cwiseProduct(h));
  return out;
}

Eigen::MatrixXd GradientOperator::gamma_matvec_all(const Eigen::Ref<const Eigen::VectorXd>& h) const {
  const Eigen::VectorXd z = ds_->X * h;
  const Eigen::MatrixXd weighted = D_.array().colwise() * z.array();
  Eigen::MatrixXd out = ds_->X.transpose() * weighted;
  if (kind_ == ModelKind::fm) out = 0.5 * (out - (S_.array().colwise() * h.array()).matrix());
  return out;
}

Eigen::VectorXd GradientOperator::quadratic_forms(const Eigen::Ref<const Eigen::VectorXd>& h) const {
  const Eigen::VectorXd z = ds_->X * h;
  Eigen::VectorXd sigma = z.cwiseAbs2();
  if (kind_ == ModelKind::fm) sigma = 0.5 * (sigma - X2_ * h.cwiseAbs2());
  return D_.transpose() * sigma;
}

}  // namespace polyfactor
