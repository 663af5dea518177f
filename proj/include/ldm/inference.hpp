#pragma once
// Exact evaluation of logical decision machines. Similarities are compared
// as integer fractions; the only floating-point step is Sx - t.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ldm/compiler.hpp"

namespace ldm {

/// Entries in {-1, +1}; never 0.
using TestResultVector = std::vector<std::int8_t>;

/// -1 where z <= 0 (including -0.0), +1 where z > 0. Throws InputError on NaN
/// ("undefined test result").
TestResultVector sgn_modified(std::span<const double> z);

/// Exact logical similarity (b . h) / |b|_1 as an integer pair.
struct SimilarityScore {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;  // > 0

  bool is_one() const { return numerator == denominator; }
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }

  // Exact comparisons by cross-multiplication.
  friend bool operator<(const SimilarityScore& a, const SimilarityScore& b) {
    return a.numerator * b.denominator < b.numerator * a.denominator;
  }
  friend bool operator==(const SimilarityScore& a, const SimilarityScore& b) {
    return a.numerator * b.denominator == b.numerator * a.denominator;
  }
};

SimilarityScore logical_similarity(std::span<const std::int8_t> b, int norm, std::span<const std::int8_t> h);

/// Scores of every template row against h.
std::vector<SimilarityScore> similarity_vector(const DecisionMachine& machine, std::span<const std::int8_t> h);

/// First index of the maximum, compared exactly.
std::size_t first_argmax(std::span<const SimilarityScore> scores);

/// Validates x against the machine's raw input width and applies the
/// feature transform when the machine has one.
std::vector<double> prepare_input(const DecisionMachine& machine, std::span<const double> x);

/// 0-based leaf row chosen by the machine. Degenerate machines return 0.
std::size_t decide(const DecisionMachine& machine, std::span<const double> x);

LeafValue predict(const DecisionMachine& machine, std::span<const double> x);

/// sum_i delta(1 - h~_i) v[i] with delta tested as numerator == denominator.
/// Requires real-valued leaves.
LeafValue predict_delta(const DecisionMachine& machine, std::span<const double> x);

/// Row-major sample matrix view: rows() samples of cols() raw features.
struct SampleMatrix {
  std::span<const double> data;
  std::size_t cols = 0;

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

struct BatchResult {
  std::vector<std::size_t> leaves;
  std::vector<LeafValue> values;
};

/// Computes H = sgn(S X^T - t 1^T) and the integer score matrix B H, then
/// decodes each column. Rows are partitioned across `threads` workers that
/// write to pre-assigned slots. Errors name the failing row.
BatchResult predict_batch(const DecisionMachine& machine, SampleMatrix X, unsigned threads = 1);

struct Forest {
  std::vector<DecisionMachine> trees;
  std::vector<double> weights;
};

/// sum_i w_i T_i(x).
double forest_predict(const Forest& forest, std::span<const double> x);

/// Two machines stacked into one system: S = [S1; S2], t = [t1; t2],
/// B = diag(B1, B2). Both parts read the same input vector.
struct CombinedMachine {
  int n = 0;
  SelectionMatrix S;
  std::vector<double> t;
  TernaryMatrix B;  // (L1 + L2) x (L1 - 1 + L2 - 1)
  std::vector<int> row_norms;
  std::vector<double> v;  // v1 followed by v2
  std::size_t first_leaf_count = 0;
  double w1 = 1.0;
  double w2 = 1.0;

  // w1 sum_{i <= L1} delta(1 - h_i) v[i] + w2 sum_{i > L1} delta(1 - h_i) v[i].
  double evaluate(std::span<const double> x) const;
};

CombinedMachine combine_block(const DecisionMachine& m1, const DecisionMachine& m2, double w1, double w2);

}  // namespace ldm
