#include "polyfactor/model.hpp"

#include <stdexcept>
#include <string>

namespace polyfactor {

std::string_view to_string(ModelKind kind) { return kind == ModelKind::pn ? "pn" : "fm"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "pn") return ModelKind::pn;
  if (name == "fm") return ModelKind::fm;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

void Model::append(const Eigen::VectorXd& h) {
  const Eigen::Index k0 = k();
  H.conservativeResize(k0 + 1, Eigen::NoChange);
  V.conservativeResize(k0 + 1, Eigen::NoChange);
  H.row(k0) = h.transpose();
  V.row(k0).setZero();
}

void Model::validate() const {
  if (H.rows() != V.rows()) throw std::logic_error("H and V row counts differ");
  for (Eigen::Index r = 0; r < H.rows(); ++r) {
    if (H.row(r).norm() > 1.0 + 1e-9) throw std::logic_error("hidden unit outside the unit ball");
  }
}

double activation(ModelKind kind, const Eigen::Ref<const Eigen::VectorXd>& h, const SparseVector& x) {
  double dot = 0.0, diag = 0.0;
  for (SparseVector::InnerIterator it(x); it; ++it) {
    const double hx = h[it.index()] * it.value();
    dot += hx;
    diag += hx * hx;
  }
  return kind == ModelKind::pn ? dot * dot : 0.5 * (dot * dot - diag);
}

double activation(ModelKind kind, const Eigen::Ref<const Eigen::VectorXd>& h, const SparseMatrix& X,
                  Eigen::Index row) {
  double dot = 0.0, diag = 0.0;
  for (SparseMatrix::InnerIterator it(X, row); it; ++it) {
    const double hx = h[it.col()] * it.value();
    dot += hx;
    diag += hx * hx;
  }
  return kind == ModelKind::pn ? dot * dot : 0.5 * (dot * dot - diag);
}

Eigen::MatrixXd feature_map(ModelKind kind, const SparseMatrix& X, const Eigen::MatrixXd& H) {
  const Eigen::Index n = X.rows(), k = H.rows();
  Eigen::MatrixXd phi(n, k);
  if (k == 0) return phi;
  const Eigen::MatrixXd Ht = H.transpose();  // d x k, columns contiguous
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < k; ++r) {
      double dot = 0.0, diag = 0.0;
      for (SparseMatrix::InnerIterator it(X, i); it; ++it) {
        const double hx = Ht(it.col(), r) * it.value();
        dot += hx;
        diag += hx * hx;
      }
      phi(i, r) = kind == ModelKind::pn ? dot * dot : 0.5 * (dot * dot - diag);
    }
  }
  return phi;
}

Eigen::VectorXd outputs(const Model& model, const SparseVector& x) {
  Eigen::VectorXd o = Eigen::VectorXd::Zero(model.m());
  for (Eigen::Index r = 0; r < model.k(); ++r) {
    o += activation(model.kind, model.H.row(r).transpose(), x) * model.V.row(r).transpose();
  }
  return o;
}

Eigen::MatrixXd outputs(const Model& model, const SparseMatrix& X) {
  if (model.k() == 0) return Eigen::MatrixXd::Zero(X.rows(), model.m());
  return feature_map(model.kind, X, model.H) * model.V;
}

int predict_class(std::span<const double> o) {
  int best = 0;
  for (std::size_t c = 1; c < o.size(); ++c) {
    if (o[c] > o[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

int predict_class(const Model& model, const SparseVector& x) {
  const Eigen::VectorXd o = outputs(model, x);
  return predict_class(std::span<const double>(o.data(), static_cast<std::size_t>(o.size())));
}

}  // namespace polyfactor
