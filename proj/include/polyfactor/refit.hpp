#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "polyfactor/dataset.hpp"
#include "polyfactor/fista.hpp"
#include "polyfactor/loss.hpp"
#include "polyfactor/model.hpp"
#include "polyfactor/penalty.hpp"

namespace polyfactor {

/// output: convex refit of V with H fixed. full: additionally alternates
/// projected steps on H (rows kept in the unit ball) with V refits.
enum class RefitMode { output, full };

std::string_view to_string(RefitMode mode);
RefitMode parse_refit_mode(std::string_view name);

/// sum_i l(y_i, O.row(i)); fills G with the per-row loss gradients if given.
double data_loss(const Dataset& ds, LossKind loss, const RowMatrix& O, RowMatrix* G = nullptr);

/// sum_i l(y_i, o(x_i)) + lambda Omega(V).
double penalized_objective(const Model& model, const Dataset& ds, LossKind loss, const Penalty& penalty);

/// Gradient of the data loss with respect to H (k x d), given the output
/// gradients G (n x m) at the model's current outputs.
Eigen::MatrixXd hidden_gradient(const Model& model, const Dataset& ds, const RowMatrix& G);

struct RefitReport {
  std::vector<double> trace;  // penalized objective, non-increasing
  int iterations = 0;
};

/// FISTA on V over the fixed feature map Phi(i, r) = sigma(h_r, x_i).
RefitReport refit_output(Model& model, const Dataset& ds, LossKind loss, const Penalty& penalty,
                         const FistaConfig& cfg);

/// Output refit, then up to `rounds` alternations of an H block (projected
/// FISTA) and a V block; stops early once a round changes the objective by
/// less than cfg.tol relatively.
RefitReport refit_full(Model& model, const Dataset& ds, LossKind loss, const Penalty& penalty,
                       const FistaConfig& cfg, int rounds = 10);

/// Drops rows with |v_r|_inf < tol_row from both H and V.
void prune(Model& model, double tol_row = 1e-12);

}  // namespace polyfactor
