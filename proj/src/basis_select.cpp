#include "polyfactor/basis_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace polyfactor {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SelectionResult scored(const GradientOperator& op, Eigen::VectorXd h, SelectionNorm norm,
                       std::string method) {
  SelectionResult r;
  r.quad = op.quadratic_forms(h);
  r.score = vector_norm(norm, r.quad);
  r.h = std::move(h);
  r.method = std::move(method);
  return r;
}

double huber(double x, double delta) {
  const double a = std::abs(x);
  return a <= delta ? 0.5 * x * x / delta : a - 0.5 * delta;
}

double huber_slope(double x, double delta) {
  if (std::abs(x) <= delta) return x / delta;
  return x > 0 ? 1.0 : -1.0;
}

}  // namespace

void SelectConfig::validate() const {
  if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(armijo.slope > 0 && armijo.slope <= 0.5)) throw ConfigError("Armijo slope must lie in (0, 0.5]");
  if (!(armijo.shrink > 0 && armijo.shrink < 1)) throw ConfigError("Armijo shrink must lie in (0, 1)");
  if (power_max_iter < 1 || refine_max_iter < 0) throw ConfigError("iteration limits must be positive");
  if (!(huber_delta > 0)) throw ConfigError("Huber threshold must be positive");
}

Eigen::VectorXd random_unit_vector(Eigen::Index dim, std::uint64_t seed, std::uint64_t stream) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(stream + 1)));
  std::normal_distribution<double> normal;
  Eigen::VectorXd h(dim);
  for (Eigen::Index j = 0; j < dim; ++j) h[j] = normal(rng);
  return h / h.norm();
}

PowerResult power_iteration(const LinearOperator& apply, Eigen::Index dim, const SelectConfig& cfg,
                            std::uint64_t stream) {
  PowerResult res;
  res.h = random_unit_vector(dim, cfg.seed, stream);
  std::vector<Eigen::VectorXd> Q{res.h};
  std::vector<double> alpha, beta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  const int max_steps = static_cast<int>(std::min<Eigen::Index>(cfg.power_max_iter, dim));
  for (int j = 0; j < max_steps; ++j) {
    Eigen::VectorXd w = apply(Q[j]);
    if (j == 0) {
      const double wn = w.norm();
      if (!(wn > 0) || !std::isfinite(wn)) {
        res.zero_operator = true;
        return res;
      }
    }
    alpha.push_back(Q[j].dot(w));
    for (int pass = 0; pass < 2; ++pass)
      for (const Eigen::VectorXd& q : Q) w -= q.dot(w) * q;
    const double b = w.norm();
    res.iterations = j + 1;

    const Eigen::Index size = j + 1;
    const Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), size);
    const Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(beta.data(), size - 1);
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const Eigen::Index pick = std::abs(eig.eigenvalues()[size - 1]) >= std::abs(eig.eigenvalues()[0]) ? size - 1 : 0;
    const double theta = eig.eigenvalues()[pick];
    const double residual = b * std::abs(eig.eigenvectors()(size - 1, pick));
    const double scale = std::max(std::abs(eig.eigenvalues()[0]), std::abs(eig.eigenvalues()[size - 1]));
    const bool done = residual <= 0.1 * cfg.epsilon * std::abs(theta) || b <= 1e-12 * scale || j + 1 == max_steps;
    if (done) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index i = 0; i < size; ++i) h += eig.eigenvectors()(i, pick) * Q[static_cast<std::size_t>(i)];
      h /= h.norm();
      res.value = h.dot(apply(h));
      res.h = std::move(h);
      return res;
    }
    beta.push_back(b);
    Q.push_back(w / b);
  }
  return res;
}

PowerResult power_method(const GradientOperator& op, int c, const SelectConfig& cfg) {
  const LinearOperator apply = [&op, c](const Eigen::VectorXd& h) { return op.gamma_matvec(c, h); };
  return power_iteration(apply, op.dim(), cfg, static_cast<std::uint64_t>(c));
}

SelectionResult select_l1(const GradientOperator& op, const SelectConfig& cfg) {
  PowerResult best;
  bool any = false;
  for (int c = 0; c < op.num_outputs(); ++c) {
    PowerResult r = power_method(op, c, cfg);
    if (r.zero_operator) continue;
    if (!any || std::abs(r.value) > std::abs(best.value)) {
      best = std::move(r);
      any = true;
    }
  }
  if (!any) {
    SelectionResult r = scored(op, random_unit_vector(op.dim(), cfg.seed, 0), SelectionNorm::linf, "l1");
    r.degenerate = true;
    return r;
  }
  return scored(op, std::move(best.h), SelectionNorm::linf, "l1");
}

double selection_objective(const GradientOperator& op, const Eigen::Ref<const Eigen::VectorXd>& h,
                           SelectionNorm norm) {
  const Eigen::VectorXd q = op.quadratic_forms(h);
  switch (norm) {
    case SelectionNorm::l2: return q.squaredNorm();
    case SelectionNorm::l1: return q.cwiseAbs().sum();
    case SelectionNorm::linf: return q.size() ? q.cwiseAbs().maxCoeff() : 0.0;
  }
  return 0.0;
}

SelectionResult refine(const GradientOperator& op, const Eigen::VectorXd& h0, SelectionNorm norm,
                       const SelectConfig& cfg) {
  if (norm == SelectionNorm::linf) throw std::invalid_argument("refine() targets the l2 or l1 norm");
  const bool smooth = norm == SelectionNorm::l1;
  const double delta = cfg.huber_delta;

  // Objective used for the Armijo test: f_2, or Huber-smoothed f_1.
  auto surrogate = [&](const Eigen::VectorXd& q) {
    if (!smooth) return q.squaredNorm();
    double s = 0.0;
    for (Eigen::Index c = 0; c < q.size(); ++c) s += huber(q[c], delta);
    return s;
  };
  auto reported = [&](const Eigen::VectorXd& q) { return smooth ? q.cwiseAbs().sum() : q.squaredNorm(); };

  Eigen::VectorXd h = h0;
  Eigen::VectorXd q = op.quadratic_forms(h);
  double fs = surrogate(q);
  Eigen::VectorXd best_h = h, best_q = q;
  double best = reported(q);
  SelectionResult res;
  res.trace.push_back(fs);

  for (int t = 0; t < cfg.refine_max_iter; ++t) {
    // grad of sum_c phi(q_c) is sum_c phi'(q_c) 2 Gamma_c h
    Eigen::VectorXd weights(q.size());
    for (Eigen::Index c = 0; c < q.size(); ++c) weights[c] = smooth ? huber_slope(q[c], delta) : 2.0 * q[c];
    const Eigen::VectorXd grad = 2.0 * (op.gamma_matvec_all(h) * weights);
    const double gn = grad.norm();
    if (!(gn > 0)) break;
    const Eigen::VectorXd dir = grad / gn - h;
    const double slope = grad.dot(dir);
    if (slope <= 1e-14 * gn) break;

    double eta = 1.0;
    bool accepted = false;
    Eigen::VectorXd h_next, q_next;
    double fs_next = 0.0;
    for (int b = 0; b <= cfg.armijo.max_backtracks; ++b, eta *= cfg.armijo.shrink) {
      h_next = h + eta * dir;
      q_next = op.quadratic_forms(h_next);
      fs_next = surrogate(q_next);
      if (fs_next >= fs + cfg.armijo.slope * eta * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double gain = fs_next - fs;
    h = std::move(h_next);
    q = std::move(q_next);
    fs = fs_next;
    res.trace.push_back(fs);
    if (const double f = reported(q); f > best) {
      best = f;
      best_h = h;
      best_q = q;
    }
    if (gain <= cfg.refine_tol * std::abs(fs)) break;
  }
  res.h = std::move(best_h);
  res.quad = std::move(best_q);
  res.score = vector_norm(norm, res.quad);
  res.method = "refine";
  return res;
}

SelectionResult select_group(const GradientOperator& op, SelectionNorm norm, const SelectConfig& cfg) {
  SelectionResult init = select_l1(op, cfg);
  if (init.degenerate || norm == SelectionNorm::linf) return init;
  SelectionResult r = refine(op, init.h, norm, cfg);
  r.method = "l1+refine";
  return r;
}

SelectionResult select_basis(const GradientOperator& op, SelectionNorm norm, const SelectConfig& cfg) {
  return norm == SelectionNorm::linf ? select_l1(op, cfg) : select_group(op, norm, cfg);
}

SelectionResult exact_oracle_linf(const GradientOperator& op, int max_outputs, Eigen::Index max_dim) {
  const int m = op.num_outputs();
  if (m > max_outputs)
    throw std::domain_error("exact l1/linf oracle has exponential complexity in m; m=" + std::to_string(m) +
                            " exceeds the limit of " + std::to_string(max_outputs));
  const Eigen::Index d = op.dim();
  if (d > max_dim)
    throw std::domain_error("exact oracle needs a dense eigensolve; d=" + std::to_string(d) +
                            " exceeds the limit of " + std::to_string(max_dim));
  std::vector<Eigen::MatrixXd> gammas(static_cast<std::size_t>(m), Eigen::MatrixXd(d, d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::MatrixXd cols = op.gamma_matvec_all(Eigen::VectorXd::Unit(d, j));
    for (int c = 0; c < m; ++c) gammas[static_cast<std::size_t>(c)].col(j) = cols.col(c);
  }
  for (auto& g : gammas) g = 0.5 * (g + g.transpose()).eval();

  SelectionResult best;
  best.score = -1.0;
  // s and -s share eigenvectors: fix s_0 = +1 and try both spectrum ends
  const std::uint64_t patterns = m > 0 ? (std::uint64_t{1} << (m - 1)) : 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  for (std::uint64_t bits = 0; bits < patterns; ++bits) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
    for (int c = 0; c < m; ++c) {
      const bool neg = c > 0 && ((bits >> (c - 1)) & 1U);
      M += neg ? -gammas[static_cast<std::size_t>(c)] : gammas[static_cast<std::size_t>(c)];
    }
    eig.compute(M);
    for (Eigen::Index end : {Eigen::Index{0}, d - 1}) {
      SelectionResult r = scored(op, eig.eigenvectors().col(end), SelectionNorm::l1, "exact");
      if (r.score > best.score) best = std::move(r);
    }
  }
  return best;
}

SelectionResult baseline_best_data(const GradientOperator& op, SelectionNorm norm) {
  const SparseMatrix& X = op.data().X;
  SelectionResult best;
  best.score = -1.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::VectorXd h = X.row(i).transpose();
    const double nrm = h.norm();
    if (!(nrm > 0)) continue;
    SelectionResult r = scored(op, h / nrm, norm, "best-data");
    if (r.score > best.score) best = std::move(r);
  }
  if (best.score < 0) {
    best = scored(op, Eigen::VectorXd::Zero(op.dim()), norm, "best-data");
    best.degenerate = true;
  }
  return best;
}

SelectionResult baseline_random(const GradientOperator& op, const SelectConfig& cfg, SelectionNorm norm) {
  return scored(op, random_unit_vector(op.dim(), cfg.seed, 0x5eed), norm, "random");
}

}  // namespace polyfactor
