#pragma once
// Canonical binary decision tree: data model, JSON ingestion, the direct
// traversal oracle and a seeded random generator for property tests.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ldm {

using NodeId = std::int64_t;

enum class TestKind { NumericLe, CategoricalEq };

/// A routing test. Passing routes LEFT.
///   NumericLe:     pass iff x[feature] <= threshold
///   CategoricalEq: pass iff x[feature] == category
struct Test {
  TestKind kind = TestKind::NumericLe;
  int feature = 0;
  double threshold = 0.0;  // NumericLe
  double category = 0.0;   // CategoricalEq

  bool passes(std::span<const double> x) const {
    return kind == TestKind::NumericLe ? x[feature] <= threshold : x[feature] == category;
  }
};

enum class ValueTag { Real, Label, Expert };

/// Leaf payload. Real values live in `real`; label and expert ids in `id`.
struct LeafValue {
  ValueTag tag = ValueTag::Real;
  double real = 0.0;
  std::int64_t id = 0;

  static LeafValue Real(double v) { return {ValueTag::Real, v, 0}; }
  static LeafValue Label(std::int64_t id) { return {ValueTag::Label, 0.0, id}; }
  static LeafValue Expert(std::int64_t id) { return {ValueTag::Expert, 0.0, id}; }

  // Bitwise comparison on reals so -0.0 != 0.0 and NaN payloads compare by bits.
  bool operator==(const LeafValue& o) const;
};

const char* to_string(ValueTag tag);

struct Node {
  NodeId id = 0;
  bool leaf = true;
  Test test;                 // internal only
  std::size_t left = 0;      // arena index, internal only
  std::size_t right = 0;     // arena index, internal only
  LeafValue value;           // leaf only
};

/// Declared finite domains of embedded reals, keyed by feature index.
using CategoricalDomains = std::map<int, std::vector<double>>;

/// Immutable, validated strictly binary tree stored as a node arena.
class DecisionTree {
 public:
  // Validates every structural invariant; throws InputError naming the node.
  DecisionTree(int feature_count, std::vector<Node> nodes, std::size_t root,
               CategoricalDomains domains = {});

  int feature_count() const { return feature_count_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t index) const { return nodes_[index]; }
  std::size_t root() const { return root_; }
  const CategoricalDomains& categorical_domains() const { return domains_; }

  std::size_t leaf_count() const { return leaf_count_; }
  std::size_t internal_count() const { return nodes_.size() - leaf_count_; }
  ValueTag value_tag() const { return value_tag_; }
  bool has_categorical_tests() const;

  // Maximum number of internal nodes on a root-to-leaf path.
  std::size_t depth() const;

 private:
  int feature_count_;
  std::vector<Node> nodes_;
  std::size_t root_;
  CategoricalDomains domains_;
  std::size_t leaf_count_ = 0;
  ValueTag value_tag_ = ValueTag::Real;
};

struct PathStep {
  std::size_t node;  // arena index of an internal node
  bool passed;
};

struct TraversalResult {
  std::size_t leaf;  // arena index
  NodeId leaf_id;
  LeafValue value;
  std::vector<PathStep> path;
};

/// Throws InputError unless x has feature_count entries and no NaN.
void check_feature_vector(std::span<const double> x, int feature_count);

/// Follows tests from the root; ties (x == threshold) pass and go left.
TraversalResult traverse(const DecisionTree& tree, std::span<const double> x);

/// Arena index of the reached leaf. No validation, no path; the fast oracle.
std::size_t traverse_leaf(const DecisionTree& tree, std::span<const double> x);

/// Arena indices of leaves, left to right.
std::vector<std::size_t> leaves_in_order(const DecisionTree& tree);

DecisionTree parse_tree(std::string_view text);
std::string serialize_tree(const DecisionTree& tree);

/// Generation scheme (see README):
///  - the root is always internal, so every tree has at least two leaves;
///  - a child at edge-depth d < max_depth becomes internal with probability
///    split_probability, otherwise a leaf; at d == max_depth it is a leaf;
///  - each test is NumericLe on a uniform feature with threshold k/4,
///    k uniform in [-16, 16];
///  - real leaves take j/2, j uniform in [-20, 20]; label leaves take ids in
///    [0, label_count).
/// Nodes are emitted in pre-order with ids 0, 1, 2, ...
struct RandomTreeConfig {
  int max_depth = 4;
  int feature_count = 4;
  ValueTag leaf_tag = ValueTag::Real;
  double split_probability = 0.7;
  int label_count = 4;
};

DecisionTree random_tree(std::uint64_t seed, const RandomTreeConfig& config);

}  // namespace ldm
