#include "ldm/analysis.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"
#include "ldm/errors.hpp"

namespace ldm {

namespace {

struct Overflow {};

// Checked arithmetic for the fast path.
struct Checked64 {
  static std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw Overflow{};
    return r;
  }
  static std::int64_t sub(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) throw Overflow{};
    return r;
  }
};

template <typename Int>
struct PlainOps {
  static Int mul(const Int& a, const Int& b) { return a * b; }
  static Int sub(const Int& a, const Int& b) { return a - b; }
};

template <typename Int, typename Ops>
std::size_t bareiss_rank(const TernaryMatrix& B) {
  const std::size_t rows = B.rows(), cols = B.cols();
  std::vector<Int> m(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i * cols + j] = B(i, j);
  auto at = [&](std::size_t i, std::size_t j) -> Int& { return m[i * cols + j]; };

  Int prev = 1;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pivot = rank;
    while (pivot < rows && at(pivot, c) == 0) ++pivot;
    if (pivot == rows) continue;
    if (pivot != rank)
      for (std::size_t j = c; j < cols; ++j) std::swap(at(pivot, j), at(rank, j));
    const Int p = at(rank, c);
    for (std::size_t i = rank + 1; i < rows; ++i) {
      const Int lead = at(i, c);
      for (std::size_t j = c + 1; j < cols; ++j) {
        // Exact division: every entry stays a minor of B.
        at(i, j) = Ops::sub(Ops::mul(p, at(i, j)), Ops::mul(lead, at(rank, j))) / prev;
      }
      at(i, c) = 0;
    }
    prev = p;
    ++rank;
  }
  return rank;
}

}  // namespace

std::size_t exact_rank(const TernaryMatrix& B) {
  try {
    return bareiss_rank<std::int64_t, Checked64>(B);
  } catch (const Overflow&) {
    using boost::multiprecision::cpp_int;
    return bareiss_rank<cpp_int, PlainOps<cpp_int>>(B);
  }
}

std::vector<SiblingPair> sibling_pairs(const TernaryMatrix& B) {
  std::vector<SiblingPair> out;
  for (std::size_t a = 0; a < B.rows(); ++a) {
    const auto ra = B.row(a);
    for (std::size_t b = a + 1; b < B.rows(); ++b) {
      const auto rb = B.row(b);
      std::size_t diff = 0, where = 0;
      bool same_support = true;
      for (std::size_t j = 0; j < B.cols() && same_support; ++j) {
        if ((ra[j] == 0) != (rb[j] == 0)) {
          same_support = false;
        } else if (ra[j] != rb[j]) {
          ++diff;
          where = j;
        }
      }
      if (same_support && diff == 1) out.push_back({a, b, where});
    }
  }
  return out;
}

StructureReport audit(const TernaryMatrix& B) {
  StructureReport r;
  std::set<std::vector<std::int8_t>> seen;
  for (std::size_t i = 0; i < B.rows(); ++i) {
    const auto row = B.row(i);
    if (!seen.emplace(row.begin(), row.end()).second) r.rows_distinct = false;
    const int nz = B.row_norm(i);
    r.per_leaf_depth.push_back(nz);
    r.max_row_nonzeros = std::max(r.max_row_nonzeros, nz);
    // (B B^T)_ii
    std::int64_t diag = 0;
    for (std::int8_t e : row) diag += e * e;
    r.trace_BBt += diag;
  }
  std::optional<std::size_t> zero_free;
  for (std::size_t j = 0; j < B.cols(); ++j) {
    bool plus = false, minus = false, has_zero = false;
    for (std::size_t i = 0; i < B.rows(); ++i) {
      plus |= B(i, j) > 0;
      minus |= B(i, j) < 0;
      has_zero |= B(i, j) == 0;
    }
    if (!(plus && minus)) r.column_polarity_ok = false;
    if (!has_zero) {
      ++r.zero_free_columns;
      zero_free = j;
    }
  }
  if (r.zero_free_columns == 1) r.root_column = zero_free;
  r.rank = exact_rank(B);
  r.full_column_rank = r.rank == B.cols();
  r.sibling_pairs = sibling_pairs(B);
  return r;
}

Submatrix subtree_template(const TernaryMatrix& B, std::size_t column, Side side) {
  if (column >= B.cols()) throw InputError("subtree_template: column out of range");
  const std::int8_t want = side == Side::Left ? -1 : 1;
  Submatrix out;
  for (std::size_t i = 0; i < B.rows(); ++i)
    if (B(i, column) == want) out.rows.push_back(i);
  if (out.rows.empty())
    throw InputError(std::string("subtree_template: column has no ") + (side == Side::Left ? "-1" : "+1") +
                     " entries on the requested side");
  for (std::size_t j = 0; j < B.cols(); ++j) {
    bool any = false, constant = true;
    const std::int8_t first = B(out.rows.front(), j);
    for (std::size_t i : out.rows) {
      any |= B(i, j) != 0;
      constant &= B(i, j) == first && first != 0;
    }
    if (any && !constant) out.cols.push_back(j);
  }
  out.matrix = TernaryMatrix(out.rows.size(), out.cols.size());
  for (std::size_t a = 0; a < out.rows.size(); ++a)
    for (std::size_t b = 0; b < out.cols.size(); ++b) out.matrix.set(a, b, B(out.rows[a], out.cols[b]));
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction

namespace {

struct Rebuilder {
  const TernaryMatrix& B;
  Skeleton sk;

  [[noreturn]] static void fail(const std::string& why) { throw InputError("not a tree template matrix: " + why); }

  std::size_t build(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    const std::size_t self = sk.nodes.size();
    sk.nodes.emplace_back();
    if (rows.size() == 1) {
      if (!cols.empty()) fail("column " + std::to_string(cols.front() + 1) + " is used by a single path");
      sk.nodes[self].leaf = true;
      sk.nodes[self].label = rows.front();
      return self;
    }
    std::optional<std::size_t> root;
    for (std::size_t c : cols) {
      const bool zero_free = std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return B(r, c) != 0; });
      if (!zero_free) continue;
      if (root) fail("more than one zero-free column among rows sharing a subtree");
      root = c;
    }
    if (!root) fail("no zero-free column for a group of " + std::to_string(rows.size()) + " rows");

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (B(r, *root) < 0 ? left : right).push_back(r);
    if (left.empty() || right.empty())
      fail("column " + std::to_string(*root + 1) + " does not split its rows into both signs");

    std::vector<std::size_t> left_cols, right_cols;
    for (std::size_t c : cols) {
      if (c == *root) continue;
      const bool in_left = std::any_of(left.begin(), left.end(), [&](std::size_t r) { return B(r, c) != 0; });
      const bool in_right = std::any_of(right.begin(), right.end(), [&](std::size_t r) { return B(r, c) != 0; });
      if (in_left && in_right) fail("ambiguous split: column " + std::to_string(c + 1) + " spans both subtrees");
      (in_left ? left_cols : right_cols).push_back(c);
    }
    const std::size_t l = build(left, left_cols);
    const std::size_t r = build(right, right_cols);
    Skeleton::Node& n = sk.nodes[self];
    n.leaf = false;
    n.label = *root;
    n.left = l;
    n.right = r;
    return self;
  }
};

bool same_shape(const Skeleton& sk, std::size_t s, const DecisionTree& tree, std::size_t t,
                const DecisionMachine* machine) {
  const Skeleton::Node& a = sk.nodes[s];
  const Node& b = tree.node(t);
  if (a.leaf != b.leaf) return false;
  if (machine) {
    const auto& order = a.leaf ? machine->leaf_order : machine->test_order;
    if (a.label >= order.size() || order[a.label] != b.id) return false;
  }
  if (a.leaf) return true;
  return same_shape(sk, a.left, tree, b.left, machine) && same_shape(sk, a.right, tree, b.right, machine);
}

}  // namespace

Skeleton reconstruct(const TernaryMatrix& B) {
  if (B.rows() == 0) throw InputError("not a tree template matrix: no rows");
  std::vector<std::size_t> rows(B.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < B.cols(); ++j) {
    bool any = false;
    for (std::size_t i = 0; i < B.rows(); ++i) any |= B(i, j) != 0;
    if (!any) throw InputError("not a tree template matrix: column " + std::to_string(j + 1) + " is all zero");
    cols.push_back(j);
  }
  Rebuilder rb{B, {}};
  rb.sk.root = rb.build(rows, cols);
  return std::move(rb.sk);
}

bool isomorphic(const Skeleton& skeleton, const DecisionTree& tree) {
  return same_shape(skeleton, skeleton.root, tree, tree.root(), nullptr);
}

bool matches_compiled(const Skeleton& skeleton, const DecisionTree& tree, const DecisionMachine& machine) {
  return same_shape(skeleton, skeleton.root, tree, tree.root(), &machine);
}

std::string skeleton_json(const Skeleton& sk) {
  using nlohmann::json;
  json nodes = json::array();
  for (std::size_t i = 0; i < sk.nodes.size(); ++i) {
    const auto& n = sk.nodes[i];
    json jn{{"id", i}};
    if (n.leaf) {
      jn["kind"] = "leaf";
      jn["label"] = "row" + std::to_string(n.label + 1);
    } else {
      jn["kind"] = "internal";
      jn["label"] = "col" + std::to_string(n.label + 1);
      jn["left"] = n.left;
      jn["right"] = n.right;
    }
    nodes.push_back(std::move(jn));
  }
  return json{{"root", sk.root}, {"nodes", std::move(nodes)}}.dump(2);
}

}  // namespace ldm
