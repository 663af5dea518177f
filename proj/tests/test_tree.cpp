#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "ldm/errors.hpp"
#include "ldm/tree.hpp"
#include "support.hpp"

using namespace ldm;
using ldm::testing::tree1;

namespace {

std::string single_leaf_doc() {
  return R"({"feature_count": 2, "root": 7, "nodes": [{"id": 7, "kind": "leaf", "value": {"tag": "real", "v": 7}}]})";
}

std::string error_of(const std::string& doc) {
  try {
    parse_tree(doc);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse TREE1") {
  const DecisionTree t = tree1();
  CHECK(t.feature_count() == 4);
  CHECK(t.internal_count() == 5);
  CHECK(t.leaf_count() == 6);
  CHECK(t.depth() == 4);
  CHECK(t.value_tag() == ValueTag::Real);
}

TEST_CASE("single leaf document") {
  const DecisionTree t = parse_tree(single_leaf_doc());
  CHECK(t.leaf_count() == 1);
  CHECK(t.internal_count() == 0);
  const double x[] = {3.0, -1.0};
  const auto r = traverse(t, x);
  CHECK(r.leaf_id == 7);
  CHECK(r.value == LeafValue::Real(7));
  CHECK(r.path.empty());
}

TEST_CASE("parse errors name the node and reason") {
  CHECK(error_of("{nope").find("malformed JSON") != std::string::npos);

  const std::string dup = R"({"feature_count": 1, "root": 0, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 1, "right": 1},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}}]})";
  CHECK(error_of(dup).find("node 0: non-binary/duplicate child") != std::string::npos);

  const std::string bad_feature = R"({"feature_count": 1, "root": 0, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "le", "feature": 3, "threshold": 1}, "left": 1, "right": 2},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}},
    {"id": 2, "kind": "leaf", "value": {"tag": "real", "v": 2}}]})";
  CHECK(error_of(bad_feature).find("node 0: feature index 3 out of range") != std::string::npos);

  const std::string cycle = R"({"feature_count": 1, "root": 0, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 1, "right": 2},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}},
    {"id": 2, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 3, "right": 4},
    {"id": 3, "kind": "leaf", "value": {"tag": "real", "v": 1}},
    {"id": 4, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 5, "right": 2},
    {"id": 5, "kind": "leaf", "value": {"tag": "real", "v": 1}}]})";
  CHECK(error_of(cycle).find("node 2") != std::string::npos);

  const std::string self_loop = R"({"feature_count": 1, "root": 0, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 1, "right": 0},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}}]})";
  CHECK(error_of(self_loop).find("cycle through root") != std::string::npos);

  const std::string mixed = R"({"feature_count": 1, "root": 0, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 1, "right": 2},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}},
    {"id": 2, "kind": "leaf", "value": {"tag": "label", "v": 2}}]})";
  CHECK(error_of(mixed).find("node 2: mixed leaf value tags") != std::string::npos);

  const std::string orphan = R"({"feature_count": 1, "root": 0, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 1, "right": 2},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}},
    {"id": 2, "kind": "leaf", "value": {"tag": "real", "v": 1}},
    {"id": 9, "kind": "leaf", "value": {"tag": "real", "v": 1}}]})";
  CHECK(error_of(orphan).find("node 9: unreachable") != std::string::npos);

  const std::string missing_child = R"({"feature_count": 1, "root": 0, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 1}, "left": 1, "right": 5},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}}]})";
  CHECK(error_of(missing_child).find("node 0: child id 5 does not exist") != std::string::npos);

  const std::string bad_category = R"({"feature_count": 1, "root": 0, "categorical_domains": {"0": [1, 2]}, "nodes": [
    {"id": 0, "kind": "internal", "test": {"kind": "eq", "feature": 0, "category": 4}, "left": 1, "right": 2},
    {"id": 1, "kind": "leaf", "value": {"tag": "real", "v": 1}},
    {"id": 2, "kind": "leaf", "value": {"tag": "real", "v": 1}}]})";
  CHECK(error_of(bad_category).find("category not in declared domain") != std::string::npos);
}

TEST_CASE("serialize round trip preserves the document") {
  const DecisionTree t = tree1();
  const std::string once = serialize_tree(t);
  CHECK(serialize_tree(parse_tree(once)) == once);
  const DecisionTree c = parse_tree(ldm::testing::fixture("categorical.json"));
  CHECK(serialize_tree(parse_tree(serialize_tree(c))) == serialize_tree(c));
}

TEST_CASE("traverse TREE1") {
  const DecisionTree t = tree1();
  SUBCASE("worked example reaches leaf 5") {
    const double x[] = {2, 1, 2, 2};
    const auto r = traverse(t, x);
    CHECK(r.leaf_id == 105);
    CHECK(r.value == LeafValue::Real(50));
  }
  SUBCASE("ties pass and route left") {
    // x1 <= 1 and x2 <= 4 pass at equality; x2 <= 2 fails; x4 <= 5 passes.
    const double x[] = {1, 4, 0, 0};
    const auto r = traverse(t, x);
    CHECK(r.leaf_id == 102);
    REQUIRE(r.path.size() == 4);
    CHECK(r.path[0].passed);
    CHECK(r.path[1].passed);
    CHECK_FALSE(r.path[2].passed);
    CHECK(r.path[3].passed);
  }
  SUBCASE("all-boundary input reaches the leftmost leaf") {
    const double x[] = {1, 2, 0, 0};
    CHECK(traverse(t, x).leaf_id == 101);
  }
  SUBCASE("NaN and wrong length are rejected") {
    const double nan_x[] = {1, std::numeric_limits<double>::quiet_NaN(), 0, 0};
    CHECK_THROWS_AS(traverse(t, nan_x), InputError);
    const double short_x[] = {1, 2};
    CHECK_THROWS_AS(traverse(t, short_x), InputError);
  }
}

TEST_CASE("recorded path matches direct test evaluation") {
  Rng rng(3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const DecisionTree t = random_tree(seed, {6, 5, ValueTag::Real});
    for (int k = 0; k < 20; ++k) {
      const auto x = ldm::testing::random_input(rng, 5);
      const auto r = traverse(t, x);
      std::size_t at = t.root();
      for (const PathStep& s : r.path) {
        CHECK(s.node == at);
        CHECK(s.passed == t.node(at).test.passes(x));
        at = s.passed ? t.node(at).left : t.node(at).right;
      }
      CHECK(at == r.leaf);
      CHECK(traverse_leaf(t, x) == r.leaf);
    }
  }
}

TEST_CASE("random_tree") {
  SUBCASE("deterministic per seed") {
    const RandomTreeConfig c{8, 6, ValueTag::Real};
    CHECK(serialize_tree(random_tree(42, c)) == serialize_tree(random_tree(42, c)));
    CHECK(serialize_tree(random_tree(42, c)) != serialize_tree(random_tree(43, c)));
  }
  SUBCASE("max_depth 1 gives a single test") {
    const DecisionTree t = random_tree(0, {1, 3, ValueTag::Real});
    CHECK(t.leaf_count() == 2);
    CHECK(serialize_tree(t) == serialize_tree(random_tree(0, {1, 3, ValueTag::Real})));
  }
  SUBCASE("depth bound implies at most 2^depth leaves") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const DecisionTree t = random_tree(seed, {8, 16, ValueTag::Real, 0.9});
      CHECK(t.depth() <= 8);
      CHECK(t.leaf_count() <= 256);
      CHECK(t.leaf_count() == t.internal_count() + 1);
    }
  }
  SUBCASE("label leaves") {
    const DecisionTree t = random_tree(5, {4, 2, ValueTag::Label});
    CHECK(t.value_tag() == ValueTag::Label);
  }
  SUBCASE("invalid config") {
    CHECK_THROWS_AS(random_tree(0, {0, 3, ValueTag::Real}), InputError);
    CHECK_THROWS_AS(random_tree(0, {3, 0, ValueTag::Real}), InputError);
  }
}

TEST_CASE("enumerated shapes are valid trees") {
  // Catalan numbers C(L-1).
  const std::size_t counts[] = {1, 1, 2, 5, 14, 42};
  for (int l = 1; l <= 6; ++l) {
    const auto trees = ldm::testing::all_shapes(l);
    CHECK(trees.size() == counts[l - 1]);
    for (const auto& t : trees) CHECK(t.leaf_count() == static_cast<std::size_t>(l));
  }
}
