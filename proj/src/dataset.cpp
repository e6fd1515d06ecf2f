#include "polyfactor/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <string_view>

namespace polyfactor {

namespace {

using Triplet = Eigen::Triplet<double>;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_long(std::string_view tok, long long& out) {
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_on(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return out;
}

// Sorted unique raw labels -> contiguous indices.
void assign_labels(Dataset& ds, const std::vector<double>& raw) {
  ds.label_map = raw;
  std::sort(ds.label_map.begin(), ds.label_map.end());
  ds.label_map.erase(std::unique(ds.label_map.begin(), ds.label_map.end()),
                     ds.label_map.end());
  ds.labels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto it = std::lower_bound(ds.label_map.begin(), ds.label_map.end(), raw[i]);
    ds.labels[i] = static_cast<int>(it - ds.label_map.begin());
  }
}

}  // namespace

TargetRow Dataset::target(Eigen::Index i) const {
  TargetRow t;
  t.label = labels[static_cast<std::size_t>(i)];
  t.value = label_map.empty() ? 0.0 : label_map[static_cast<std::size_t>(t.label)];
  if (has_signs()) t.signs = {signs.data() + i * signs.cols(), static_cast<std::size_t>(signs.cols())};
  return t;
}

Dataset Dataset::subset(std::span<const Eigen::Index> idx) const {
  Dataset out;
  out.label_map = label_map;
  out.bias_augmented = bias_augmented;
  std::vector<Triplet> trips;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (SparseMatrix::InnerIterator it(X, idx[r]); it; ++it)
      trips.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
  }
  out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
  out.X.setFromTriplets(trips.begin(), trips.end());
  out.labels.reserve(idx.size());
  for (auto i : idx) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  if (has_signs()) {
    out.signs.resize(static_cast<Eigen::Index>(idx.size()), signs.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.signs.row(static_cast<Eigen::Index>(r)) = signs.row(idx[r]);
  }
  if (!groups.empty()) {
    for (auto i : idx) out.groups.push_back(groups[static_cast<std::size_t>(i)]);
  }
  return out;
}

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != X.rows())
    throw std::logic_error("label count does not match row count");
  for (int y : labels) {
    if (y < 0 || y >= num_classes()) throw std::logic_error("label index out of range");
  }
  for (Eigen::Index i = 0; i < X.outerSize(); ++i) {
    Eigen::Index prev = -1;
    for (SparseMatrix::InnerIterator it(X, i); it; ++it) {
      if (it.col() <= prev) throw std::logic_error("column indices not strictly increasing");
      prev = it.col();
    }
  }
  if (has_signs()) {
    if (signs.rows() != X.rows()) throw std::logic_error("sign matrix row count mismatch");
    for (Eigen::Index i = 0; i < signs.size(); ++i) {
      const double s = signs.data()[i];
      if (s != 1.0 && s != -1.0) throw std::logic_error("sign matrix entry not +-1");
    }
  }
  if (!groups.empty() && static_cast<Eigen::Index>(groups.size()) != X.rows())
    throw std::logic_error("group count does not match row count");
}

Dataset parse_svmlight(std::istream& in, const SvmlightOptions& opts) {
  std::vector<Triplet> trips;
  std::vector<double> raw_labels;
  const int offset = opts.augment_bias ? 1 : 0;
  long long max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  int row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto toks = split_ws(body);
    double label = 0;
    if (!parse_double(toks[0], label) || !std::isfinite(label))
      throw ParseError("bad label '" + std::string(toks[0]) + "'", lineno);
    if (opts.augment_bias) trips.emplace_back(row, 0, 1.0);
    long long prev = 0;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const auto colon = toks[t].find(':');
      if (colon == std::string_view::npos)
        throw ParseError("expected idx:val, got '" + std::string(toks[t]) + "'", lineno);
      long long idx = 0;
      double val = 0;
      if (!parse_long(toks[t].substr(0, colon), idx) || idx < 1)
        throw ParseError("bad feature index in '" + std::string(toks[t]) + "'", lineno);
      if (!parse_double(toks[t].substr(colon + 1), val))
        throw ParseError("bad feature value in '" + std::string(toks[t]) + "'", lineno);
      if (!std::isfinite(val)) throw ParseError("non-finite feature value", lineno);
      if (idx <= prev) throw ParseError("feature indices must be strictly increasing", lineno);
      prev = idx;
      max_index = std::max(max_index, idx);
      if (val != 0.0) trips.emplace_back(row, static_cast<int>(idx - 1 + offset), val);
    }
    raw_labels.push_back(label);
    ++row;
  }
  Dataset ds;
  ds.bias_augmented = opts.augment_bias;
  const Eigen::Index d = std::max<Eigen::Index>(max_index, opts.min_features) + offset;
  ds.X.resize(row, d);
  ds.X.setFromTriplets(trips.begin(), trips.end());
  ds.X.makeCompressed();
  assign_labels(ds, raw_labels);
  return ds;
}

Dataset load_svmlight(const std::string& path, const SvmlightOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return parse_svmlight(in, opts);
}

void write_svmlight(std::ostream& out, const Dataset& ds) {
  const int offset = ds.bias_augmented ? 1 : 0;
  char buf[64];
  auto put = [&](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, end - buf);
  };
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    put(ds.label_map[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]);
    for (SparseMatrix::InnerIterator it(ds.X, i); it; ++it) {
      if (it.col() < offset) continue;
      out << ' ' << (it.col() - offset + 1) << ':';
      put(it.value());
    }
    out << '\n';
  }
}

Separator parse_separator(const std::string& name) {
  if (name == "tab" || name == "\t" || name == "\\t") return Separator::tab;
  if (name == "::" || name == "colons") return Separator::colons;
  if (name == "," || name == "comma") return Separator::comma;
  throw ParseError("unknown separator '" + name + "'", 0);
}

Dataset parse_movielens(std::istream& in, const MovielensOptions& opts) {
  const std::string_view sep = opts.separator == Separator::tab      ? "\t"
                               : opts.separator == Separator::colons ? "::"
                                                                     : ",";
  struct Record {
    long long user, item;
    int rating;
  };
  std::vector<Record> records;
  std::string line;
  std::size_t lineno = 0;
  int max_rating = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_on(body, sep);
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError("expected user" + std::string(sep) + "item" + std::string(sep) +
                           "rating[" + std::string(sep) + "timestamp]",
                       lineno);
    Record r{};
    double rating = 0;
    if (!parse_long(trim(fields[0]), r.user)) throw ParseError("bad user id", lineno);
    if (!parse_long(trim(fields[1]), r.item)) throw ParseError("bad item id", lineno);
    if (!parse_double(trim(fields[2]), rating) || !std::isfinite(rating))
      throw ParseError("bad rating", lineno);
    if (rating < 1 || rating != std::floor(rating) || (opts.levels > 0 && rating > opts.levels))
      throw ParseError("rating " + std::string(trim(fields[2])) + " outside the level range", lineno);
    r.rating = static_cast<int>(rating);
    max_rating = std::max(max_rating, r.rating);
    records.push_back(r);
  }
  std::map<long long, int> users, items;
  for (const auto& r : records) {
    users.emplace(r.user, 0);
    items.emplace(r.item, 0);
  }
  int next = 0;
  for (auto& [id, col] : users) col = next++;
  for (auto& [id, col] : items) col = next++;

  Dataset ds;
  const int levels = opts.levels > 0 ? opts.levels : max_rating;
  ds.label_map.resize(static_cast<std::size_t>(levels));
  std::iota(ds.label_map.begin(), ds.label_map.end(), 1.0);
  std::vector<Triplet> trips;
  trips.reserve(2 * records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int u = users[records[i].user];
    const int it = items[records[i].item];
    trips.emplace_back(static_cast<int>(i), u, 1.0);
    trips.emplace_back(static_cast<int>(i), it, 1.0);
    ds.labels.push_back(records[i].rating - 1);
    ds.groups.push_back(u);
  }
  ds.X.resize(static_cast<Eigen::Index>(records.size()), next);
  ds.X.setFromTriplets(trips.begin(), trips.end());
  ds.X.makeCompressed();
  return ds;
}

Dataset load_movielens(const std::string& path, const MovielensOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return parse_movielens(in, opts);
}

void remap_labels(Dataset& ds, const std::vector<double>& label_map) {
  std::vector<int> labels(ds.labels.size());
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    const double raw = ds.label_map[static_cast<std::size_t>(ds.labels[i])];
    const auto it = std::find(label_map.begin(), label_map.end(), raw);
    if (it == label_map.end())
      throw ConfigError("label " + std::to_string(raw) + " not present in the model's label map");
    labels[i] = static_cast<int>(it - label_map.begin());
  }
  ds.labels = std::move(labels);
  ds.label_map = label_map;
}

std::vector<Eigen::Index> split_sizes(Eigen::Index n, const SplitSpec& spec) {
  const double fr[3] = {spec.train, spec.valid, spec.test};
  for (double f : fr) {
    if (!(f > 0)) throw ConfigError("split fractions must be positive");
  }
  if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  std::vector<Eigen::Index> sizes(3);
  double rem[3];
  Eigen::Index assigned = 0;
  for (int j = 0; j < 3; ++j) {
    const double exact = static_cast<double>(n) * fr[j];
    sizes[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(std::floor(exact));
    rem[j] = exact - std::floor(exact);
    assigned += sizes[static_cast<std::size_t>(j)];
  }
  // leftover rows go to the largest fractional parts, earlier parts first on ties
  int order[3] = {0, 1, 2};
  std::stable_sort(order, order + 3, [&](int a, int b) { return rem[a] > rem[b]; });
  for (int j = 0; assigned < n; ++j, ++assigned) ++sizes[static_cast<std::size_t>(order[j % 3])];
  return sizes;
}

void add_bias_column(Dataset& ds) {
  if (ds.bias_augmented) throw std::logic_error("dataset already has a bias column");
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(ds.X.nonZeros() + ds.rows()));
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    trips.emplace_back(static_cast<int>(i), 0, 1.0);
    for (SparseMatrix::InnerIterator it(ds.X, i); it; ++it)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(it.col() + 1), it.value());
  }
  SparseMatrix X(ds.rows(), ds.cols() + 1);
  X.setFromTriplets(trips.begin(), trips.end());
  ds.X = std::move(X);
  ds.bias_augmented = true;
}

Splits split(const Dataset& ds, const SplitSpec& spec) {
  const Eigen::Index n = ds.rows();
  if (n < 4) throw ConfigError("need at least 4 rows to split");
  const auto sizes = split_sizes(n, spec);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  const std::span<const Eigen::Index> all(perm);
  const auto a = static_cast<std::size_t>(sizes[0]);
  const auto b = static_cast<std::size_t>(sizes[1]);
  return {ds.subset(all.subspan(0, a)), ds.subset(all.subspan(a, b)), ds.subset(all.subspan(a + b))};
}

}  // namespace polyfactor
