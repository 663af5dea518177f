#pragma once
// Structure theory of template matrices: audits, exact rank, subtree
// extraction and recovery of the full tree shape from B alone.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldm/compiler.hpp"

namespace ldm {

/// Two rows with identical support that differ only, by sign, at the
/// parent's column. Indices are 0-based.
struct SiblingPair {
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t parent_column = 0;

  bool operator==(const SiblingPair&) const = default;
};

struct StructureReport {
  bool rows_distinct = true;
  bool column_polarity_ok = true;            // every column has a +1 and a -1
  std::optional<std::size_t> root_column;    // set iff exactly one zero-free column
  std::size_t zero_free_columns = 0;
  std::vector<int> per_leaf_depth;           // nonzeros per row
  std::int64_t trace_BBt = 0;
  int max_row_nonzeros = 0;
  std::size_t rank = 0;
  bool full_column_rank = false;
  std::vector<SiblingPair> sibling_pairs;
};

StructureReport audit(const TernaryMatrix& B);

/// Rank over the rationals by fraction-free (Bareiss) elimination. Runs on
/// 64-bit integers and restarts with arbitrary precision if an intermediate
/// minor would overflow.
std::size_t exact_rank(const TernaryMatrix& B);

std::vector<SiblingPair> sibling_pairs(const TernaryMatrix& B);

enum class Side { Left, Right };

struct Submatrix {
  TernaryMatrix matrix;
  std::vector<std::size_t> rows;  // source row per output row
  std::vector<std::size_t> cols;  // source column per output column
};

/// Template matrix of the subtree hanging on `side` of the test in `column`:
/// rows carrying -1 (Left) or +1 (Right) there, restricted to the columns of
/// tests inside that subtree. Columns that are nonzero with one constant
/// sign on every selected row (the split itself and its ancestors) are
/// dropped, so a single-leaf side yields a 1 x 0 matrix.
Submatrix subtree_template(const TernaryMatrix& B, std::size_t column, Side side);

/// Tree shape recovered from B. Internal nodes are labeled with their
/// column, leaves with their row (both 0-based).
struct Skeleton {
  struct Node {
    bool leaf = true;
    std::size_t label = 0;
    std::size_t left = 0;
    std::size_t right = 0;
  };
  std::vector<Node> nodes;
  std::size_t root = 0;
};

/// Throws InputError("not a tree template matrix: ...") when B does not
/// describe a strictly binary tree.
Skeleton reconstruct(const TernaryMatrix& B);

/// Ordered shape comparison, ignoring labels and ids.
bool isomorphic(const Skeleton& skeleton, const DecisionTree& tree);

/// Shape comparison that also requires every skeleton label to name the
/// matching node of `tree` through machine.test_order / machine.leaf_order.
bool matches_compiled(const Skeleton& skeleton, const DecisionTree& tree, const DecisionMachine& machine);

/// Skeleton in the tree document layout: integer ids, no tests or values,
/// and a "label" of col<k> / row<i> (1-based) on every node.
std::string skeleton_json(const Skeleton& skeleton);

}  // namespace ldm
