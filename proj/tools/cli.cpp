#include "polyfactor/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyfactor/dataset.hpp"
#include "polyfactor/mcrank.hpp"
#include "polyfactor/model_io.hpp"
#include "polyfactor/oracle_compare.hpp"
#include "polyfactor/solver.hpp"

namespace polyfactor {

namespace {

using json = nlohmann::ordered_json;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DataOptions {
  std::string path;
  std::string format = "svmlight";
  std::string sep = "tab";
  int levels = 0;
  std::optional<bool> bias;  // default: on for pn, off for fm
  std::string part = "all";
  std::optional<std::uint64_t> split_seed;
};

struct TrainOptions {
  DataOptions data;
  std::string model;  // empty: fm with --mcrank, pn otherwise
  std::string penalty = "l1l2";
  std::optional<double> lambda;
  double lambda_ratio = 1e-2;
  int k_max = 30;
  std::string refit = "output";
  std::string loss;  // empty: resolved from the data and --mcrank
  bool mcrank = false;
  std::uint64_t seed = 0;
  double epsilon = 1e-2;
  int fista_max_iter = 1000;
  double fista_tol = 1e-3;
  int full_rounds = 10;
  std::string out;
  std::string trace;
  bool trace_timing = false;
  std::string manifest;
  std::string replay;
};

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void add_data_options(CLI::App* app, DataOptions& o, bool required) {
  auto* data = app->add_option("--data", o.path, "Input file (svmlight or MovieLens ratings)");
  if (required) data->required();
  app->add_option("--format", o.format, "Input format")->check(CLI::IsMember({"svmlight", "movielens"}));
  app->add_option("--sep", o.sep, "MovieLens field separator: tab, ::, or comma");
  app->add_option("--levels", o.levels, "MovieLens rating levels (0 = max observed)")->check(CLI::NonNegativeNumber);
  app->add_flag_function(
      "--bias,!--no-bias", [&o](std::int64_t c) { o.bias = c > 0; },
      "Append a constant feature (default: on for pn, off for fm)");
  app->add_option("--part", o.part, "Rows to use after a seeded 50/25/25 split")
      ->check(CLI::IsMember({"all", "train", "valid", "test"}));
  app->add_option("--split-seed", o.split_seed, "Split seed (defaults to --seed)");
}

void add_train_options(CLI::App* app, TrainOptions& o) {
  add_data_options(app, o.data, false);
  app->add_option("--model", o.model, "Model kind")->check(CLI::IsMember({"pn", "fm"}));
  app->add_option("--penalty", o.penalty, "Output-layer penalty")->check(CLI::IsMember({"l1", "l1l2", "l1linf"}));
  app->add_option("--lambda", o.lambda, "Regularization strength (default: lambda-ratio * lambda_max)")
      ->check(CLI::PositiveNumber);
  app->add_option("--lambda-ratio", o.lambda_ratio, "Default lambda as a fraction of lambda_max")
      ->check(CLI::Range(1e-12, 1.0));
  app->add_option("--k-max", o.k_max, "Maximum number of basis vectors")->check(CLI::PositiveNumber);
  app->add_option("--refit", o.refit, "Corrective step")->check(CLI::IsMember({"output", "full"}));
  app->add_option("--loss", o.loss, "Loss")
      ->check(CLI::IsMember({"logistic", "smoothed-hinge", "squared-hinge", "binary-logistic", "squared"}));
  app->add_flag("--mcrank", o.mcrank, "Ordinal targets via per-threshold binary outputs");
  app->add_option("--seed", o.seed, "Random seed");
  app->add_option("--epsilon", o.epsilon, "Power-method tolerance")->check(CLI::Range(1e-12, 0.999999));
  app->add_option("--fista-max-iter", o.fista_max_iter, "Refit iteration cap")->check(CLI::PositiveNumber);
  app->add_option("--fista-tol", o.fista_tol, "Refit relative tolerance")->check(CLI::PositiveNumber);
  app->add_option("--full-rounds", o.full_rounds, "Hidden/output alternations per full refit")
      ->check(CLI::PositiveNumber);
  app->add_option("--out", o.out, "Model JSON output");
  app->add_option("--trace", o.trace, "Trace CSV output");
  app->add_flag("--trace-timing", o.trace_timing, "Write wall-clock seconds into the trace");
  app->add_option("--manifest", o.manifest, "Write the resolved run manifest here");
}

void resolve(TrainOptions& o) {
  if (o.data.path.empty()) throw UsageError("--data is required");
  if (o.mcrank) {
    if (o.data.format != "movielens") throw UsageError("--mcrank needs --format movielens");
    if (o.model.empty()) o.model = "fm";
    if (o.model != "fm") throw UsageError("--mcrank trains factorization machines; drop --model pn");
    if (o.loss.empty()) o.loss = "binary-logistic";
    if (o.loss != "binary-logistic") throw UsageError("--mcrank uses the binary-logistic loss, not '" + o.loss + "'");
  } else {
    if (o.model.empty()) o.model = "pn";
    if (o.loss.empty()) o.loss = o.data.format == "movielens" ? "squared" : "logistic";
    if (o.loss == "binary-logistic") throw UsageError("--loss binary-logistic needs --mcrank");
  }
  if (!o.data.split_seed) o.data.split_seed = o.seed;
  if (!o.data.bias) o.data.bias = o.model == "pn";
  parse_separator(o.data.sep);
}

Dataset load_data(const DataOptions& o, Eigen::Index min_features = 0) {
  Dataset ds;
  if (o.format == "svmlight") {
    SvmlightOptions so;
    so.augment_bias = o.bias.value_or(false);
    so.min_features = min_features;
    ds = load_svmlight(o.path, so);
  } else {
    MovielensOptions mo;
    mo.separator = parse_separator(o.sep);
    mo.levels = o.levels;
    ds = load_movielens(o.path, mo);
    if (o.bias.value_or(false)) add_bias_column(ds);
  }
  if (o.part == "all") return ds;
  SplitSpec spec;
  spec.seed = o.split_seed.value_or(0);
  Splits s = split(ds, spec);
  if (o.part == "train") return std::move(s.train);
  if (o.part == "valid") return std::move(s.valid);
  return std::move(s.test);
}

SolverConfig solver_config(const TrainOptions& o) {
  SolverConfig cfg;
  cfg.model = parse_model_kind(o.model);
  cfg.loss = parse_loss(o.loss);
  cfg.penalty = parse_penalty(o.penalty);
  cfg.k_max = o.k_max;
  cfg.refit = parse_refit_mode(o.refit);
  cfg.full_rounds = o.full_rounds;
  cfg.select.epsilon = o.epsilon;
  cfg.select.seed = o.seed;
  cfg.fista.max_iter = o.fista_max_iter;
  cfg.fista.tol = o.fista_tol;
  cfg.seed = o.seed;
  if (o.lambda) cfg.lambda = *o.lambda;
  return cfg;
}

json data_json(const DataOptions& o) {
  json j;
  j["path"] = o.path;
  j["format"] = o.format;
  j["sep"] = o.sep;
  j["levels"] = o.levels;
  j["bias"] = o.bias.value_or(false);
  j["part"] = o.part;
  j["split_seed"] = o.split_seed.value_or(0);
  j["fingerprint"] = file_fingerprint(o.path);
  return j;
}

json manifest_json(const TrainOptions& o) {
  json config;
  config["model"] = o.model;
  config["loss"] = o.loss;
  config["penalty"] = o.penalty;
  config["lambda"] = o.lambda.value_or(0.0);
  config["k_max"] = o.k_max;
  config["refit"] = o.refit;
  config["full_rounds"] = o.full_rounds;
  config["mcrank"] = o.mcrank;
  config["epsilon"] = o.epsilon;
  config["power_max_iter"] = SelectConfig{}.power_max_iter;
  config["refine_max_iter"] = SelectConfig{}.refine_max_iter;
  config["fista_max_iter"] = o.fista_max_iter;
  config["fista_tol"] = o.fista_tol;
  config["stop_gap"] = SolverConfig{}.stop_gap;
  json j;
  j["command"] = "train";
  j["config"] = config;
  j["data"] = data_json(o.data);
  j["seed"] = o.seed;
  j["artifacts"] = {{"model", o.out}, {"trace", o.trace}};
  return j;
}

TrainOptions from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest '" + path + "'");
  json j;
  try {
    in >> j;
    TrainOptions o;
    const json& c = j.at("config");
    o.model = c.at("model").get<std::string>();
    o.loss = c.at("loss").get<std::string>();
    o.penalty = c.at("penalty").get<std::string>();
    o.lambda = c.at("lambda").get<double>();
    o.k_max = c.at("k_max").get<int>();
    o.refit = c.at("refit").get<std::string>();
    o.full_rounds = c.at("full_rounds").get<int>();
    o.mcrank = c.at("mcrank").get<bool>();
    o.epsilon = c.at("epsilon").get<double>();
    o.fista_max_iter = c.at("fista_max_iter").get<int>();
    o.fista_tol = c.at("fista_tol").get<double>();
    const json& d = j.at("data");
    o.data.path = d.at("path").get<std::string>();
    o.data.format = d.at("format").get<std::string>();
    o.data.sep = d.at("sep").get<std::string>();
    o.data.levels = d.at("levels").get<int>();
    o.data.bias = d.at("bias").get<bool>();
    o.data.part = d.at("part").get<std::string>();
    o.data.split_seed = d.at("split_seed").get<std::uint64_t>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.out = j.at("artifacts").at("model").get<std::string>();
    o.trace = j.at("artifacts").at("trace").get<std::string>();
    const std::string expected = d.at("fingerprint").get<std::string>();
    const std::string actual = file_fingerprint(o.data.path);
    if (expected != actual)
      throw std::runtime_error("data file '" + o.data.path + "' changed since the manifest was written (fingerprint " +
                               actual + ", expected " + expected + ")");
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("invalid manifest '" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

json eval_report(const Model& model, const Dataset& ds) {
  json j;
  if (is_multiclass(model.loss)) {
    j["accuracy"] = evaluate(model, ds, Metric::accuracy);
  } else {
    j["rmse"] = evaluate(model, ds, Metric::rmse);
    if (!ds.groups.empty()) {
      j["ndcg@1"] = evaluate(model, ds, Metric::ndcg1);
      j["ndcg@5"] = evaluate(model, ds, Metric::ndcg5);
    }
  }
  j["k"] = model.k();
  j["lambda"] = model.lambda;
  j["penalty"] = to_string(model.penalty);
  j["model_kind"] = to_string(model.kind);
  return j;
}

int cmd_train(TrainOptions o, const std::optional<std::string>& out_override,
              const std::optional<std::string>& trace_override, std::ostream& out) {
  if (!o.replay.empty()) {
    const std::string manifest = o.manifest;
    const bool timing = o.trace_timing;
    o = from_manifest(o.replay);
    o.manifest = manifest;
    o.trace_timing = timing;
    if (out_override) o.out = *out_override;
    if (trace_override) o.trace = *trace_override;
  }
  resolve(o);
  Dataset ds = load_data(o.data);
  if (o.mcrank) ds = build_ordinal(ds);
  SolverConfig cfg = solver_config(o);
  if (!o.lambda) {
    const double top = lambda_max(ds, cfg);
    if (!(top > 0)) throw std::runtime_error("zero gradient at the empty model; pass --lambda explicitly");
    o.lambda = top * o.lambda_ratio;
    cfg.lambda = *o.lambda;
  }
  const FitResult res = o.mcrank ? fit_mcrank(ds, cfg) : fit(ds, cfg);
  const SupportReport support = support_check(res.model, ds, res.iterations);

  if (!o.out.empty()) save_model(o.out, res.model);
  if (!o.trace.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, res.trace, o.trace_timing);
    write_text(o.trace, csv.str());
  }
  if (!o.manifest.empty()) write_text(o.manifest, manifest_json(o).dump(2) + "\n");

  const double objective = res.trace.empty() ? res.initial_objective : res.trace.back().objective;
  out << "objective " << format_double(objective) << "\n";
  out << "k " << res.model.k() << "\n";
  out << "iterations " << res.iterations << " (" << res.stop_reason << ")\n";
  out << "lambda " << format_double(*o.lambda) << "\n";
  if (!support.within_bound) out << "note: k exceeds the support bound " << support.bound << "\n";
  if (res.degenerate) out << "note: zero gradient at the empty model; nothing to fit\n";
  return 0;
}

Dataset load_for_model(const DataOptions& o, const Model& model) {
  const Eigen::Index feats = model.d() - (model.bias_augmented ? 1 : 0);
  DataOptions local = o;
  local.bias = model.bias_augmented;
  Dataset ds = load_data(local, o.format == "svmlight" ? feats : 0);
  if (ds.cols() != model.d())
    throw std::runtime_error("dimension mismatch: model has d=" + std::to_string(model.d()) + ", data has d=" +
                             std::to_string(ds.cols()));
  try {
    remap_labels(ds, model.label_map);
  } catch (const ConfigError& e) {
    throw std::runtime_error(e.what());
  }
  return ds;
}

int cmd_eval(const DataOptions& data, const std::string& model_file, std::ostream& out) {
  const Model model = load_model(model_file);
  const Dataset ds = load_for_model(data, model);
  out << eval_report(model, ds).dump(2) << "\n";
  return 0;
}

int cmd_predict(const DataOptions& data, const std::string& model_file, const std::string& dest, std::ostream& out) {
  const Model model = load_model(model_file);
  const Dataset ds = load_for_model(data, model);
  std::ostringstream text;
  if (is_multiclass(model.loss)) {
    const RowMatrix O = outputs(model, ds.X);
    for (Eigen::Index i = 0; i < O.rows(); ++i) {
      const int c = predict_class(std::span<const double>(O.row(i).data(), static_cast<std::size_t>(O.cols())));
      text << shortest(model.label_map[static_cast<std::size_t>(c)]) << "\n";
    }
  } else {
    for (double p : predict_ratings(model, ds)) text << shortest(p) << "\n";
  }
  if (dest.empty())
    out << text.str();
  else
    write_text(dest, text.str());
  return 0;
}

struct PathOptions {
  std::string metric;
  int grid_points = 10;
  double grid_ratio = 1e-3;
  std::vector<double> lambdas;
  std::string report;
};

int cmd_path(TrainOptions o, const PathOptions& p, std::ostream& out) {
  resolve(o);
  if (o.data.part != "all") throw UsageError("path splits the data itself; drop --part");
  Dataset full = load_data(o.data);
  if (o.mcrank) full = build_ordinal(full);
  SplitSpec spec;
  spec.seed = *o.data.split_seed;
  const Splits s = split(full, spec);

  SolverConfig cfg = solver_config(o);
  const bool ratings = !is_multiclass(cfg.loss);
  const Metric metric = p.metric.empty() ? (ratings ? (o.mcrank ? Metric::ndcg1 : Metric::rmse) : Metric::accuracy)
                                         : parse_metric(p.metric);
  if (ratings == (metric == Metric::accuracy)) throw UsageError("metric does not fit the loss");
  cfg.lambdas = p.lambdas;
  std::sort(cfg.lambdas.begin(), cfg.lambdas.end(), std::greater<>());
  if (cfg.lambdas.empty()) cfg.lambdas = default_lambda_grid(s.train, cfg, p.grid_points, p.grid_ratio);
  cfg.lambda = cfg.lambdas.front();

  const PathResult res = fit_path(s.train, s.valid, cfg, metric);
  if (!o.out.empty()) save_model(o.out, res.best);

  json summary;
  summary["metric"] = to_string(metric);
  summary["best_lambda"] = res.best_lambda;
  summary["best_t"] = res.best_t;
  summary["valid"] = res.best_metric;
  summary["test"] = eval_report(res.best, s.test);
  if (!p.report.empty()) {
    json rep = json::array();
    for (const PathPoint& pt : res.points) {
      json r;
      r["lambda"] = pt.lambda;
      r["best_t"] = pt.best_t;
      r["best_metric"] = pt.best_metric;
      r["metric_by_t"] = pt.metric_by_t;
      r["iterations"] = pt.fit.iterations;
      r["stop_reason"] = pt.fit.stop_reason;
      r["k_final"] = pt.fit.model.k();
      rep.push_back(r);
    }
    write_text(p.report, rep.dump(2) + "\n");
  }
  out << summary.dump(2) << "\n";
  return 0;
}

struct OracleOptions {
  OracleCompareConfig cfg;
  std::string model = "pn";
  std::uint64_t seed = 0;
  double epsilon = 1e-2;
  std::string out;
  DataOptions data;
  std::string loss = "logistic";
};

int cmd_oracle_compare(OracleOptions o, std::ostream& out) {
  if (o.cfg.m_min < 1 || o.cfg.m_max < o.cfg.m_min) throw UsageError("need 1 <= m-min <= m-max");
  if (o.cfg.d_min < 1 || o.cfg.d_max < o.cfg.d_min) throw UsageError("need 1 <= d-min <= d-max");
  o.cfg.kind = parse_model_kind(o.model);
  o.cfg.select.seed = o.seed;
  o.cfg.select.epsilon = o.epsilon;
  std::vector<OracleRow> rows = oracle_compare_random(o.cfg);
  if (!o.data.path.empty()) {
    if (!o.data.split_seed) o.data.split_seed = o.seed;
    if (!o.data.bias) o.data.bias = o.model == "pn";
    const Dataset ds = load_data(o.data);
    const OracleInstance inst = dataset_instance(ds, o.cfg.kind, parse_loss(o.loss));
    const std::vector<OracleRow> r = compare_methods(*inst.op, o.cfg.select, o.cfg.instances, o.cfg.oracle_limit);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::ostringstream csv;
  write_oracle_csv(csv, rows);
  if (o.out.empty())
    out << csv.str();
  else
    write_text(o.out, csv.str());

  std::map<std::string, std::vector<double>> by_method;
  for (const OracleRow& r : rows) by_method[r.method].push_back(r.nu);
  if (!o.out.empty()) {
    for (auto& [name, v] : by_method) {
      std::sort(v.begin(), v.end());
      out << name << " median nu " << format_double(v[v.size() / 2]) << "\n";
    }
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-output polynomial networks and factorization machines"};
  app.require_subcommand(1);

  TrainOptions train;
  std::optional<std::string> out_override, trace_override;
  auto* train_cmd = app.add_subcommand("train", "Fit one model");
  add_train_options(train_cmd, train);
  train_cmd->add_option("--replay", train.replay, "Re-run a manifest written by --manifest");

  DataOptions eval_data;
  std::string eval_model;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on data");
  add_data_options(eval_cmd, eval_data, true);
  eval_cmd->add_option("--model-file", eval_model, "Model JSON")->required();

  DataOptions pred_data;
  std::string pred_model, pred_out;
  auto* pred_cmd = app.add_subcommand("predict", "One prediction per input row");
  add_data_options(pred_cmd, pred_data, true);
  pred_cmd->add_option("--model-file", pred_model, "Model JSON")->required();
  pred_cmd->add_option("--out", pred_out, "Output file (default stdout)");

  TrainOptions path;
  PathOptions path_opts;
  auto* path_cmd = app.add_subcommand("path", "Regularization path with validation-based selection");
  add_train_options(path_cmd, path);
  path_cmd->add_option("--metric", path_opts.metric, "accuracy, rmse, ndcg@1 or ndcg@5");
  path_cmd->add_option("--grid-points", path_opts.grid_points, "Default grid size")->check(CLI::PositiveNumber);
  path_cmd->add_option("--grid-ratio", path_opts.grid_ratio, "Smallest lambda as a fraction of lambda_max")
      ->check(CLI::Range(1e-12, 0.999999));
  path_cmd->add_option("--lambdas", path_opts.lambdas, "Explicit lambda grid")->delimiter(',');
  path_cmd->add_option("--report", path_opts.report, "Per-lambda JSON report");

  OracleOptions oracle;
  auto* oracle_cmd = app.add_subcommand("oracle-compare", "Approximation factors of the atom-selection methods");
  oracle_cmd->add_option("--instances", oracle.cfg.instances, "Random instances")->check(CLI::NonNegativeNumber);
  oracle_cmd->add_option("--m-min", oracle.cfg.m_min, "Smallest number of outputs");
  oracle_cmd->add_option("--m-max", oracle.cfg.m_max, "Largest number of outputs");
  oracle_cmd->add_option("--d-min", oracle.cfg.d_min, "Smallest dimension");
  oracle_cmd->add_option("--d-max", oracle.cfg.d_max, "Largest dimension");
  oracle_cmd->add_option("--n", oracle.cfg.n, "Rows per random instance")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--oracle-limit", oracle.cfg.oracle_limit, "Largest m for the exact oracle");
  oracle_cmd->add_option("--model", oracle.model, "Model kind")->check(CLI::IsMember({"pn", "fm"}));
  oracle_cmd->add_option("--loss", oracle.loss, "Loss for --data")
      ->check(CLI::IsMember({"logistic", "smoothed-hinge", "squared-hinge"}));
  oracle_cmd->add_option("--seed", oracle.seed, "Random seed");
  oracle_cmd->add_option("--epsilon", oracle.epsilon, "Power-method tolerance")->check(CLI::Range(1e-12, 0.999999));
  oracle_cmd->add_option("--out", oracle.out, "CSV output (default stdout)");
  add_data_options(oracle_cmd, oracle.data, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (train_cmd->parsed()) {
      if (!train.replay.empty()) {
        if (train_cmd->count("--out")) out_override = train.out;
        if (train_cmd->count("--trace")) trace_override = train.trace;
      }
      return cmd_train(train, out_override, trace_override, out);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_data, eval_model, out);
    if (pred_cmd->parsed()) return cmd_predict(pred_data, pred_model, pred_out, out);
    if (path_cmd->parsed()) return cmd_path(path, path_opts, out);
    if (oracle_cmd->parsed()) return cmd_oracle_compare(oracle, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace polyfactor
