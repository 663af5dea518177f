#pragma once
// Shared fixtures and independent oracles for the test binaries.

#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ldm/compiler.hpp"
#include "ldm/random.hpp"
#include "ldm/tree.hpp"

namespace ldm::testing {

inline std::string fixture(const std::string& name) {
  std::ifstream in(std::string(LDM_FIXTURES_DIR) + "/" + name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline DecisionTree tree1() { return parse_tree(fixture("tree1.json")); }

inline const std::vector<std::string>& tree1_B() {
  static const std::vector<std::string> rows{"--0-0", "--0+-", "--0++", "-+000", "+0-00", "+0+00"};
  return rows;
}

// Every ordered binary tree shape with `leaves` leaves. Internal nodes get
// features round-robin and thresholds 0.5, 1.5, ... in pre-order; leaf i
// (left to right) carries value i.
inline std::vector<DecisionTree> all_shapes(int leaves, int feature_count = 3) {
  struct Shape {
    bool leaf;
    int left = -1, right = -1;
  };
  std::function<std::vector<std::vector<Shape>>(int)> shapes = [&](int l) {
    std::vector<std::vector<Shape>> out;
    if (l == 1) {
      out.push_back({Shape{true}});
      return out;
    }
    for (int k = 1; k < l; ++k)
      for (const auto& a : shapes(k))
        for (const auto& b : shapes(l - k)) {
          std::vector<Shape> s{Shape{false, 1, static_cast<int>(1 + a.size())}};
          for (Shape n : a) {
            if (!n.leaf) n.left += 1, n.right += 1;
            s.push_back(n);
          }
          for (Shape n : b) {
            if (!n.leaf) n.left += static_cast<int>(1 + a.size()), n.right += static_cast<int>(1 + a.size());
            s.push_back(n);
          }
          out.push_back(std::move(s));
        }
    return out;
  };
  std::vector<DecisionTree> trees;
  for (const auto& s : shapes(leaves)) {
    std::vector<Node> nodes(s.size());
    int internal = 0, leaf = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      nodes[i].id = static_cast<NodeId>(i);
      nodes[i].leaf = s[i].leaf;
      if (s[i].leaf) {
        nodes[i].value = LeafValue::Real(leaf++);
      } else {
        nodes[i].test = Test{TestKind::NumericLe, internal % feature_count, internal + 0.5, 0.0};
        nodes[i].left = static_cast<std::size_t>(s[i].left);
        nodes[i].right = static_cast<std::size_t>(s[i].right);
        ++internal;
      }
    }
    trees.emplace_back(feature_count, std::move(nodes), 0);
  }
  return trees;
}

// Random inputs mixing threshold-grid values (ties) with continuous draws.
inline std::vector<double> random_input(Rng& rng, int n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& e : x) e = rng.bernoulli(0.5) ? static_cast<double>(rng.range(-20, 20)) / 4.0 : rng.uniform(-5, 5);
  return x;
}

// Row index (left-to-right) of the leaf that traverse reaches.
inline std::size_t traversal_row(const DecisionTree& tree, const DecisionMachine& m, std::span<const double> x) {
  const NodeId id = tree.node(traverse_leaf(tree, x)).id;
  for (std::size_t i = 0; i < m.leaf_order.size(); ++i)
    if (m.leaf_order[i] == id) return i;
  return static_cast<std::size_t>(-1);
}

// Edge depth of every leaf, left to right, by walking the tree.
inline std::vector<int> leaf_depths(const DecisionTree& tree) {
  std::vector<int> out;
  std::function<void(std::size_t, int)> walk = [&](std::size_t i, int d) {
    const Node& n = tree.node(i);
    if (n.leaf) {
      out.push_back(d);
      return;
    }
    walk(n.left, d + 1);
    walk(n.right, d + 1);
  };
  walk(tree.root(), 0);
  return out;
}

}  // namespace ldm::testing
