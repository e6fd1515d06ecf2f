#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace polyfactor {

struct FistaConfig {
  int max_iter = 1000;
  double tol = 1e-3;       // relative change of the objective
  double init_lipschitz = 1.0;
  int max_backtracks = 60;

  void validate() const;
};

/// min_x f(x) + g(x) with f smooth and g prox-friendly, on flat vectors.
struct CompositeProblem {
  /// f(x); writes grad f(x) when `grad` is non-null.
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)> smooth;
  std::function<double(const Eigen::VectorXd& x)> nonsmooth;
  /// argmin_u 1/2 |u - x|^2 + step g(u)
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double step)> prox;
};

struct FistaResult {
  std::vector<double> trace;  // objective at the start and after each accepted step
  int iterations = 0;
  bool converged = false;
  double lipschitz = 0.0;
};

/// Accelerated proximal gradient with backtracking on L (doubling until the
/// quadratic upper bound holds) and a function-value restart: a step that
/// raises the objective resets momentum, and is dropped outright when taken
/// from the current iterate. The recorded trace is therefore non-increasing.
FistaResult fista(const CompositeProblem& problem, Eigen::VectorXd& x, const FistaConfig& cfg);

}  // namespace polyfactor
