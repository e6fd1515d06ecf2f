#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "polyfactor/basis_select.hpp"
#include "polyfactor/grad_operator.hpp"

namespace polyfactor {

/// A dataset together with a gradient operator over it; the operator keeps
/// a pointer to the dataset, so both live behind stable addresses.
struct OracleInstance {
  std::unique_ptr<Dataset> data;
  std::unique_ptr<GradientOperator> op;
};

struct RandomInstanceSpec {
  Eigen::Index n = 40;
  Eigen::Index d = 10;
  int m = 3;
  ModelKind kind = ModelKind::pn;
  std::uint64_t seed = 0;
};

/// Gaussian X, uniform labels, D = multi-class logistic gradient at
/// standard normal outputs.
OracleInstance random_instance(const RandomInstanceSpec& spec);

/// Operator of `ds` at the empty model (t = 1).
OracleInstance dataset_instance(const Dataset& ds, ModelKind kind, LossKind loss);

struct OracleRow {
  int instance = 0;
  int m = 0;
  int d = 0;
  std::string method;
  double f1 = 0.0;
  double nu = 0.0;  // f1 / f1(exact)
};

/// best-data, random, random+refine, l1, l1+refine and exact, scored by f_1.
/// Throws std::domain_error when the exact oracle refuses the instance.
std::vector<OracleRow> compare_methods(const GradientOperator& op, const SelectConfig& cfg, int instance,
                                       int oracle_limit = 12);

struct OracleCompareConfig {
  int instances = 50;
  int m_min = 2;
  int m_max = 8;
  Eigen::Index d_min = 5;
  Eigen::Index d_max = 20;
  Eigen::Index n = 40;
  ModelKind kind = ModelKind::pn;
  SelectConfig select;
  int oracle_limit = 12;
};

/// Seeded random instances with m and d drawn uniformly from their ranges.
std::vector<OracleRow> oracle_compare_random(const OracleCompareConfig& cfg);

void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows);

}  // namespace polyfactor
