#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "polyfactor/grad_operator.hpp"
#include "polyfactor/penalty.hpp"

namespace polyfactor {

struct ArmijoConfig {
  double slope = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 30;
};

struct SelectConfig {
  double epsilon = 1e-2;  // power-method tolerance, in (0, 1)
  int power_max_iter = 300;
  int refine_max_iter = 100;
  double refine_tol = 1e-8;  // relative improvement below which refinement stops
  ArmijoConfig armijo;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PowerResult {
  Eigen::VectorXd h;
  double value = 0.0;  // h^T A h, signed
  bool zero_operator = false;
  int iterations = 0;
};

struct SelectionResult {
  Eigen::VectorXd h;
  double score = 0.0;          // |g_h|_p for the norm the method targets
  Eigen::VectorXd quad;        // (h^T Gamma_c h)_c
  std::string method;
  bool degenerate = false;     // every Gamma_c vanished: no descent direction
  std::vector<double> trace;   // refinement only: f_2, or Huber-smoothed f_1, per accepted step
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Seeded unit vector; `stream` decorrelates independent draws.
Eigen::VectorXd random_unit_vector(Eigen::Index dim, std::uint64_t seed, std::uint64_t stream);

/// Power iteration on a symmetric operator with Rayleigh-Ritz extraction
/// over all iterates so far (Lanczos, fully reorthogonalized). The Ritz
/// value of largest magnitude dominates the plain power estimate at every
/// step and resolves +-rho pairs. Stops once the Ritz residual falls below
/// epsilon/10 relatively, on breakdown, or after min(power_max_iter, dim)
/// steps.
PowerResult power_iteration(const LinearOperator& apply, Eigen::Index dim, const SelectConfig& cfg,
                            std::uint64_t stream = 0);

/// Dominant eigenvector of Gamma_c.
PowerResult power_method(const GradientOperator& op, int c, const SelectConfig& cfg);

/// max_h |g_h|_inf: best per-output dominant eigenvector. Guarantees a
/// (1 - epsilon) approximation of the l_inf selection problem.
SelectionResult select_l1(const GradientOperator& op, const SelectConfig& cfg);

/// f_2(h) = sum_c (h^T Gamma_c h)^2 or f_1(h) = sum_c |h^T Gamma_c h|.
double selection_objective(const GradientOperator& op, const Eigen::Ref<const Eigen::VectorXd>& h,
                           SelectionNorm norm);

/// Conditional-gradient ascent on f_p over the unit ball:
///   h <- (1 - eta) h + eta grad f_p(h) / |grad f_p(h)|
/// with Armijo backtracking from eta = 1. For p = 1 the ascent runs on the
/// Huber-smoothed f_1 and the iterate with the best unsmoothed f_1 is
/// returned. `norm` must be l2 or l1.
SelectionResult refine(const GradientOperator& op, const Eigen::VectorXd& h0, SelectionNorm norm,
                       const SelectConfig& cfg);

/// select_l1 initialization followed by refine().
SelectionResult select_group(const GradientOperator& op, SelectionNorm norm, const SelectConfig& cfg);

/// Dispatch on the selection norm (linf -> select_l1, otherwise select_group).
SelectionResult select_basis(const GradientOperator& op, SelectionNorm norm, const SelectConfig& cfg);

/// Global maximizer of f_1 by enumerating all sign patterns s of the
/// outputs and taking the top eigenvector of sum_c s_c Gamma_c.
/// Exponential in m; throws std::domain_error above `max_outputs`.
SelectionResult exact_oracle_linf(const GradientOperator& op, int max_outputs = 12,
                                  Eigen::Index max_dim = 2000);

/// Normalized training row maximizing f_p.
SelectionResult baseline_best_data(const GradientOperator& op, SelectionNorm norm = SelectionNorm::l1);

/// Seeded random unit vector, scored under f_p.
SelectionResult baseline_random(const GradientOperator& op, const SelectConfig& cfg,
                                SelectionNorm norm = SelectionNorm::l1);

}  // namespace polyfactor
