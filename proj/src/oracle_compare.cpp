#include "polyfactor/oracle_compare.hpp"

#include <ostream>
#include <random>

#include "polyfactor/model_io.hpp"

namespace polyfactor {

OracleInstance random_instance(const RandomInstanceSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> label(0, spec.m - 1);

  auto ds = std::make_unique<Dataset>();
  Eigen::MatrixXd X(spec.n, spec.d);
  for (Eigen::Index i = 0; i < spec.n; ++i)
    for (Eigen::Index j = 0; j < spec.d; ++j) X(i, j) = normal(rng);
  ds->X = X.sparseView();
  for (int c = 0; c < spec.m; ++c) ds->label_map.push_back(c);
  for (Eigen::Index i = 0; i < spec.n; ++i) ds->labels.push_back(label(rng));

  Eigen::MatrixXd D(spec.n, spec.m);
  std::vector<double> o(static_cast<std::size_t>(spec.m));
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    for (auto& v : o) v = normal(rng);
    const std::vector<double> g = loss_gradient(LossKind::logistic, ds->labels[static_cast<std::size_t>(i)], o);
    for (int c = 0; c < spec.m; ++c) D(i, c) = g[static_cast<std::size_t>(c)];
  }
  OracleInstance inst;
  inst.op = std::make_unique<GradientOperator>(*ds, spec.kind, LossKind::logistic);
  inst.op->set_gradients(std::move(D));
  inst.data = std::move(ds);
  return inst;
}

OracleInstance dataset_instance(const Dataset& ds, ModelKind kind, LossKind loss) {
  OracleInstance inst;
  inst.data = std::make_unique<Dataset>(ds);
  inst.op = std::make_unique<GradientOperator>(*inst.data, kind, loss);
  inst.op->refresh(Model(kind, ds.cols(), output_dim(loss, ds)));
  return inst;
}

std::vector<OracleRow> compare_methods(const GradientOperator& op, const SelectConfig& cfg, int instance,
                                       int oracle_limit) {
  const SelectionResult exact = exact_oracle_linf(op, oracle_limit);
  const SelectionResult l1 = select_l1(op, cfg);
  const SelectionResult random = baseline_random(op, cfg, SelectionNorm::l1);
  const std::vector<std::pair<std::string, Eigen::VectorXd>> methods = {
      {"best-data", baseline_best_data(op, SelectionNorm::l1).h},
      {"random", random.h},
      {"random+refine", refine(op, random.h, SelectionNorm::l1, cfg).h},
      {"l1", l1.h},
      {"l1+refine", l1.degenerate ? l1.h : refine(op, l1.h, SelectionNorm::l1, cfg).h},
      {"exact", exact.h},
  };
  const double best = exact.score;
  std::vector<OracleRow> rows;
  for (const auto& [name, h] : methods) {
    OracleRow r;
    r.instance = instance;
    r.method = name;
    r.m = op.num_outputs();
    r.d = static_cast<int>(op.dim());
    r.f1 = selection_objective(op, h, SelectionNorm::l1);
    r.nu = best > 0 ? r.f1 / best : 1.0;
    rows.push_back(r);
  }
  return rows;
}

std::vector<OracleRow> oracle_compare_random(const OracleCompareConfig& cfg) {
  std::mt19937_64 rng(cfg.select.seed ^ 0x6f7261636c65ULL);
  std::uniform_int_distribution<int> pick_m(cfg.m_min, cfg.m_max);
  std::uniform_int_distribution<Eigen::Index> pick_d(cfg.d_min, cfg.d_max);
  std::vector<OracleRow> rows;
  for (int i = 0; i < cfg.instances; ++i) {
    RandomInstanceSpec spec;
    spec.m = pick_m(rng);
    spec.d = pick_d(rng);
    spec.n = cfg.n;
    spec.kind = cfg.kind;
    spec.seed = rng();
    const OracleInstance inst = random_instance(spec);
    SelectConfig sc = cfg.select;
    sc.seed = rng();
    const std::vector<OracleRow> r = compare_methods(*inst.op, sc, i, cfg.oracle_limit);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows) {
  out << "instance,m,d,method,f1,nu\n";
  for (const OracleRow& r : rows)
    out << r.instance << ',' << r.m << ',' << r.d << ',' << r.method << ',' << format_double(r.f1) << ',' << format_double(r.nu) << '\n';
}

}  // namespace polyfactor
