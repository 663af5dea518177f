#pragma once
// Compilation of decision trees into logical decision machines:
//   h = sgn(Sx - t),  i = first argmax_i (B_i . h) / |B_i|_1,  T(x) = v[i].
// S selects the feature of each test, t holds thresholds, and the ternary
// template matrix B encodes every root-to-leaf path (-1 pass, +1 fail, 0 off
// path).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldm/tree.hpp"

namespace ldm {

/// Dense row-major matrix over {-1, 0, +1}.
class TernaryMatrix {
 public:
  TernaryMatrix() = default;
  TernaryMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  // Rows written over {'-', '0', '+'}; all rows must have equal length.
  static TernaryMatrix from_strings(const std::vector<std::string>& rows);
  static TernaryMatrix from_rows(const std::vector<std::vector<int>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::int8_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  void set(std::size_t r, std::size_t c, int value);

  std::span<const std::int8_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const std::int8_t> data() const { return data_; }

  // Nonzero count of row r, which is also its L1 norm.
  int row_norm(std::size_t r) const;
  std::string row_string(std::size_t r) const;
  std::vector<std::string> to_strings() const;

  bool operator==(const TernaryMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int8_t> data_;
};

/// Sparse real matrix in compressed-row form. Axis-aligned trees put one
/// unit entry per row; oblique rows may carry several.
class SelectionMatrix {
 public:
  struct Entry {
    std::size_t col;
    double value;
  };

  SelectionMatrix() = default;
  explicit SelectionMatrix(std::size_t cols) : cols_(cols) {}

  void add_row(std::vector<Entry> entries);

  std::size_t rows() const { return row_start_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::span<const Entry> row(std::size_t r) const {
    return {entries_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
  }

  // Row r applied to x, summed in stored entry order.
  double row_dot(std::size_t r, std::span<const double> x) const {
    double acc = 0.0;
    for (const Entry& e : row(r)) acc += e.value * x[e.col];
    return acc;
  }

  bool axis_aligned() const;

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_start_{0};
  std::vector<Entry> entries_;
};

/// I(x) = 1 - prod_{e_j != e_i} (x - e_j) / (e_i - e_j): 0 at the target,
/// 1 at every other domain value. Evaluated in product form, which is exact
/// on domain points: each factor is exactly 1 at x = e_i, and one factor is
/// exactly 0 at any other domain value.
class LagrangeIndicator {
 public:
  static constexpr std::size_t kMaxDomain = 16;

  LagrangeIndicator(std::vector<double> domain, double target);

  double operator()(double x) const;
  const std::vector<double>& domain() const { return domain_; }
  double target() const { return target_; }

 private:
  std::vector<double> domain_;
  double target_;
};

enum class ExpansionMode { Lagrange, Dummy };

const char* to_string(ExpansionMode mode);

/// A synthesized pseudo-feature: a categorical-eq test on (feature, target)
/// rewritten so that pseudo <= 0 iff x[feature] == target.
struct PseudoFeature {
  int source_feature = 0;
  double target = 0.0;
  std::vector<double> domain;
  ExpansionMode mode = ExpansionMode::Lagrange;

  double evaluate(double x) const;
};

/// Maps raw inputs (categoricals embedded as reals) to the expanded feature
/// space the machine was compiled against.
struct FeatureTransform {
  int input_features = 0;
  std::vector<PseudoFeature> pseudo;

  bool empty() const { return pseudo.empty(); }
  int output_features() const { return input_features + static_cast<int>(pseudo.size()); }

  // Throws InputError on NaN, wrong length or a categorical value outside
  // its declared domain.
  std::vector<double> apply(std::span<const double> x) const;
};

struct ExpandedTree {
  DecisionTree tree;
  FeatureTransform transform;
};

/// Replaces every categorical-eq test with a numeric-le test at threshold 0
/// on a pseudo-feature appended after the original features, one per
/// distinct (feature, category) pair.
ExpandedTree expand_categorical(const DecisionTree& tree, ExpansionMode mode = ExpansionMode::Lagrange);

/// Compiled form of a tree. Columns of S/B follow breadth-first order of the
/// internal nodes (root first); rows of B follow leaves left to right.
struct DecisionMachine {
  int n = 0;                    // feature count S operates on (after expansion)
  SelectionMatrix S;            // (L-1) x n
  std::vector<double> t;        // L-1
  TernaryMatrix B;              // L x (L-1)
  std::vector<int> row_norms;   // |B_i|_1
  std::vector<LeafValue> v;     // L
  ValueTag value_tag = ValueTag::Real;
  std::vector<NodeId> test_order;  // node id per column
  std::vector<NodeId> leaf_order;  // node id per row
  FeatureTransform transform;      // empty unless categorical tests were expanded

  std::size_t leaf_count() const { return v.size(); }
  std::size_t test_count() const { return t.size(); }
  bool degenerate() const { return v.size() == 1; }
  bool numeric() const { return value_tag == ValueTag::Real; }

  // Raw input width expected from callers (before feature_transform).
  int input_features() const { return transform.empty() ? n : transform.input_features; }
};

/// Requires NumericLe tests only. A single-leaf tree yields the degenerate
/// machine: L = 1, empty S and t, B of shape 1 x 0.
DecisionMachine compile(const DecisionTree& tree);
DecisionMachine compile(const ExpandedTree& expanded);

/// B~ = diag(|B_1|_1, ..., |B_L|_1)^-1 B kept as integer numerators over
/// per-row integer denominators.
struct NormalizedTemplate {
  TernaryMatrix numerators;
  std::vector<std::int64_t> denominators;
};

NormalizedTemplate normalized_row_similarity_basis(const DecisionMachine& machine);

/// S~ = [S | t] and x~ = (x, -1), so S~ x~ = Sx - t.
struct AugmentedSystem {
  SelectionMatrix S;     // (L-1) x (n+1)
  std::vector<double> x; // n+1

  std::vector<double> product() const;
};

AugmentedSystem augment(const DecisionMachine& machine, std::span<const double> x);

/// Sx - t in double precision, accumulated per row in stored entry order.
std::vector<double> margins(const DecisionMachine& machine, std::span<const double> x);

std::string serialize_machine(const DecisionMachine& machine);
DecisionMachine parse_machine(std::string_view text);

}  // namespace ldm
