#include "polyfactor/fista.hpp"

#include <algorithm>
#include <cmath>

#include "polyfactor/dataset.hpp"

namespace polyfactor {

void FistaConfig::validate() const {
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(tol > 0)) throw ConfigError("tol must be positive");
  if (!(init_lipschitz > 0)) throw ConfigError("initial Lipschitz estimate must be positive");
  if (max_backtracks < 1) throw ConfigError("max_backtracks must be positive");
}

FistaResult fista(const CompositeProblem& problem, Eigen::VectorXd& x, const FistaConfig& cfg) {
  FistaResult res;
  double L = cfg.init_lipschitz;
  double F = problem.smooth(x, nullptr) + problem.nonsmooth(x);
  res.trace.push_back(F);

  Eigen::VectorXd y = x, grad(x.size()), z;
  double t = 1.0;
  bool y_is_x = true;
  while (res.iterations < cfg.max_iter) {
    ++res.iterations;
    const double fy = problem.smooth(y, &grad);
    double fz = 0.0;
    for (int b = 0; b < cfg.max_backtracks; ++b) {
      z = problem.prox(y - grad / L, 1.0 / L);
      fz = problem.smooth(z, nullptr);
      const Eigen::VectorXd dz = z - y;
      const double bound = fy + grad.dot(dz) + 0.5 * L * dz.squaredNorm();
      if (fz <= bound + 1e-12 * std::abs(fy)) break;
      L *= 2.0;
    }
    const double Fz = fz + problem.nonsmooth(z);
    if (!(Fz <= F)) {
      if (y_is_x) break;  // no descent even without momentum
      y = x;
      t = 1.0;
      y_is_x = true;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    y_is_x = false;
    t = t_next;
    x = z;
    const double change = F - Fz;
    F = Fz;
    res.trace.push_back(F);
    if (change <= cfg.tol * std::max(std::abs(F), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  res.lipschitz = L;
  return res;
}

}  // namespace polyfactor
