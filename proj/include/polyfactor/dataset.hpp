#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace polyfactor {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseVector = Eigen::SparseVector<double>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Supervision attached to one sample. Which field is meaningful depends on
/// the loss: class index for multi-class losses, the ±1 row for per-output
/// binary losses, the real value for squared loss.
struct TargetRow {
  int label = 0;
  double value = 0.0;
  std::span<const double> signs;
};

/// Design matrix plus labels. Immutable after loading; safe to share
/// read-only across concurrent fits.
struct Dataset {
  SparseMatrix X;
  std::vector<int> labels;        // 0-based index into label_map
  std::vector<double> label_map;  // original label value per index, sorted
  RowMatrix signs;                // n x m in {-1,+1}; empty unless ordinal
  std::vector<int> groups;        // query (user) id per row; empty if none
  bool bias_augmented = false;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  int num_classes() const { return static_cast<int>(label_map.size()); }
  bool has_signs() const { return signs.size() > 0; }

  TargetRow target(Eigen::Index i) const;

  /// Rows `idx` (in that order) as a new dataset sharing label_map.
  Dataset subset(std::span<const Eigen::Index> idx) const;

  /// Throws std::logic_error if any invariant is broken.
  void validate() const;
};

struct SvmlightOptions {
  bool augment_bias = false;
  /// Minimum feature count (before augmentation); pads d when a file's
  /// largest index is smaller, e.g. a test split.
  Eigen::Index min_features = 0;
};

Dataset parse_svmlight(std::istream& in, const SvmlightOptions& opts = {});
Dataset load_svmlight(const std::string& path, const SvmlightOptions& opts = {});

/// Writes raw labels and features; the bias column is dropped if present.
void write_svmlight(std::ostream& out, const Dataset& ds);

enum class Separator { tab, colons, comma };

/// Accepts "tab", "\t", "::", "colons", ",", "comma".
Separator parse_separator(const std::string& name);

struct MovielensOptions {
  Separator separator = Separator::tab;
  /// Number of rating levels; 0 means max observed rating.
  int levels = 0;
};

/// One-hot user/item design: users first, then items, each id space
/// compacted in sorted order. groups holds the user column index.
Dataset parse_movielens(std::istream& in, const MovielensOptions& opts = {});
Dataset load_movielens(const std::string& path, const MovielensOptions& opts = {});

/// Relabels `ds` against an existing label map (e.g. a trained model's).
/// Throws ConfigError on labels absent from the map.
void remap_labels(Dataset& ds, const std::vector<double>& label_map);

/// Prepends a constant-1 feature (column 0), so quadratic models also carry
/// linear and constant terms.
void add_bias_column(Dataset& ds);

struct SplitSpec {
  double train = 0.5;
  double valid = 0.25;
  double test = 0.25;
  std::uint64_t seed = 0;
};

struct Splits {
  Dataset train, valid, test;
};

Splits split(const Dataset& ds, const SplitSpec& spec);

/// Sizes used by split(): largest-remainder rounding of n * fraction.
std::vector<Eigen::Index> split_sizes(Eigen::Index n, const SplitSpec& spec);

}  // namespace polyfactor
