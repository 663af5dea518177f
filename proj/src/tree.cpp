#include "ldm/tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <unordered_map>
#include <utility>

#include "json.hpp"
#include "ldm/errors.hpp"
#include "ldm/random.hpp"

namespace ldm {

using nlohmann::json;

bool LeafValue::operator==(const LeafValue& o) const {
  return tag == o.tag && std::bit_cast<std::uint64_t>(real) == std::bit_cast<std::uint64_t>(o.real) &&
         id == o.id;
}

const char* to_string(ValueTag tag) {
  switch (tag) {
    case ValueTag::Real: return "real";
    case ValueTag::Label: return "label";
    case ValueTag::Expert: return "expert";
  }
  return "?";
}

namespace {

std::string node_error(NodeId id, const std::string& reason) {
  return "node " + std::to_string(id) + ": " + reason;
}

}  // namespace

DecisionTree::DecisionTree(int feature_count, std::vector<Node> nodes, std::size_t root,
                           CategoricalDomains domains)
    : feature_count_(feature_count), nodes_(std::move(nodes)), root_(root), domains_(std::move(domains)) {
  if (feature_count_ < 1) throw InputError("feature_count must be >= 1");
  if (nodes_.empty()) throw InputError("tree has no nodes");
  if (root_ >= nodes_.size()) throw InputError("root index out of range");

  for (const auto& [feature, domain] : domains_) {
    if (feature < 0 || feature >= feature_count_)
      throw InputError("categorical domain for feature " + std::to_string(feature) + " out of range");
    if (domain.size() < 2)
      throw InputError("categorical domain for feature " + std::to_string(feature) + " needs >= 2 values");
    std::set<double> seen;
    for (double e : domain) {
      if (!std::isfinite(e))
        throw InputError("categorical domain for feature " + std::to_string(feature) + " has a non-finite value");
      if (!seen.insert(e).second)
        throw InputError("categorical domain for feature " + std::to_string(feature) + " has duplicate values");
    }
  }

  std::vector<int> parents(nodes_.size(), 0);
  bool tag_set = false;
  for (const Node& n : nodes_) {
    if (n.leaf) {
      ++leaf_count_;
      if (!tag_set) {
        value_tag_ = n.value.tag;
        tag_set = true;
      } else if (n.value.tag != value_tag_) {
        throw InputError(node_error(n.id, "mixed leaf value tags"));
      }
      continue;
    }
    if (n.left >= nodes_.size() || n.right >= nodes_.size())
      throw InputError(node_error(n.id, "child reference out of range"));
    if (n.left == n.right) throw InputError(node_error(n.id, "non-binary/duplicate child"));
    if (n.test.feature < 0 || n.test.feature >= feature_count_)
      throw InputError(node_error(n.id, "feature index " + std::to_string(n.test.feature) + " out of range"));
    if (n.test.kind == TestKind::NumericLe && std::isnan(n.test.threshold))
      throw InputError(node_error(n.id, "NaN threshold"));
    if (n.test.kind == TestKind::CategoricalEq) {
      auto it = domains_.find(n.test.feature);
      if (it != domains_.end() &&
          std::find(it->second.begin(), it->second.end(), n.test.category) == it->second.end())
        throw InputError(node_error(n.id, "category not in declared domain"));
    }
    for (std::size_t child : {n.left, n.right}) {
      if (++parents[child] > 1) throw InputError(node_error(nodes_[child].id, "node has more than one parent"));
    }
  }
  if (parents[root_] != 0) throw InputError(node_error(nodes_[root_].id, "cycle through root"));

  std::vector<char> seen(nodes_.size(), 0);
  std::vector<std::size_t> stack{root_};
  std::size_t visited = 0;
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    if (seen[i]) throw InputError(node_error(nodes_[i].id, "cycle"));
    seen[i] = 1;
    ++visited;
    if (!nodes_[i].leaf) {
      stack.push_back(nodes_[i].right);
      stack.push_back(nodes_[i].left);
    }
  }
  if (visited != nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!seen[i]) throw InputError(node_error(nodes_[i].id, "unreachable from root (orphan or cycle)"));
  }
}

bool DecisionTree::has_categorical_tests() const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [](const Node& n) { return !n.leaf && n.test.kind == TestKind::CategoricalEq; });
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    if (nodes_[i].leaf) {
      best = std::max(best, d);
    } else {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return best;
}

void check_feature_vector(std::span<const double> x, int feature_count) {
  if (x.size() != static_cast<std::size_t>(feature_count))
    throw InputError("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(feature_count));
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isnan(x[i])) throw InputError("NaN at feature " + std::to_string(i));
}

TraversalResult traverse(const DecisionTree& tree, std::span<const double> x) {
  check_feature_vector(x, tree.feature_count());
  TraversalResult out;
  std::size_t i = tree.root();
  while (!tree.node(i).leaf) {
    const Node& n = tree.node(i);
    const bool passed = n.test.passes(x);
    out.path.push_back({i, passed});
    i = passed ? n.left : n.right;
  }
  out.leaf = i;
  out.leaf_id = tree.node(i).id;
  out.value = tree.node(i).value;
  return out;
}

std::size_t traverse_leaf(const DecisionTree& tree, std::span<const double> x) {
  std::size_t i = tree.root();
  while (!tree.node(i).leaf) {
    const Node& n = tree.node(i);
    i = n.test.passes(x) ? n.left : n.right;
  }
  return i;
}

std::vector<std::size_t> leaves_in_order(const DecisionTree& tree) {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{tree.root()};
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    const Node& n = tree.node(i);
    if (n.leaf) {
      out.push_back(i);
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InputError(where + ": field '" + key + "' has the wrong type");
  }
}

NodeId get_id(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + ": missing field '" + key + "'");
  if (!it->is_number_integer()) throw InputError(where + ": field '" + key + "' must be an integer node id");
  return it->get<NodeId>();
}

}  // namespace

DecisionTree parse_tree(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("malformed tree document: expected an object");

  const int feature_count = get_field<int>(doc, "feature_count", "tree");
  const NodeId root_id = get_id(doc, "root", "tree");
  auto nodes_it = doc.find("nodes");
  if (nodes_it == doc.end() || !nodes_it->is_array()) throw InputError("tree: 'nodes' must be an array");

  CategoricalDomains domains;
  if (auto it = doc.find("categorical_domains"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) throw InputError("tree: 'categorical_domains' must be an object");
    for (const auto& [key, values] : it->items()) {
      int feature = 0;
      try {
        std::size_t pos = 0;
        feature = std::stoi(key, &pos);
        if (pos != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw InputError("categorical_domains: key '" + key + "' is not a feature index");
      }
      if (!values.is_array()) throw InputError("categorical_domains: feature " + key + " must map to an array");
      std::vector<double> domain;
      for (const auto& v : values) {
        if (!v.is_number()) throw InputError("categorical_domains: feature " + key + " has a non-numeric value");
        domain.push_back(v.get<double>());
      }
      domains[feature] = std::move(domain);
    }
  }

  // First pass: ids to arena positions.
  std::unordered_map<NodeId, std::size_t> index;
  const auto& jnodes = *nodes_it;
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    if (!jnodes[i].is_object()) throw InputError("nodes[" + std::to_string(i) + "]: expected an object");
    const NodeId id = get_id(jnodes[i], "id", "nodes[" + std::to_string(i) + "]");
    if (!index.emplace(id, i).second) throw InputError(node_error(id, "duplicate node id"));
  }
  auto resolve = [&](NodeId id, NodeId from) {
    auto it = index.find(id);
    if (it == index.end()) throw InputError(node_error(from, "child id " + std::to_string(id) + " does not exist"));
    return it->second;
  };

  std::vector<Node> nodes(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const json& jn = jnodes[i];
    Node& n = nodes[i];
    n.id = jn["id"].get<NodeId>();
    const std::string where = "node " + std::to_string(n.id);
    const auto kind = get_field<std::string>(jn, "kind", where);
    if (kind == "internal") {
      n.leaf = false;
      auto tit = jn.find("test");
      if (tit == jn.end() || !tit->is_object()) throw InputError(where + ": internal node needs a 'test' object");
      const auto tkind = get_field<std::string>(*tit, "kind", where + " test");
      n.test.feature = get_field<int>(*tit, "feature", where + " test");
      if (tkind == "le") {
        n.test.kind = TestKind::NumericLe;
        n.test.threshold = get_field<double>(*tit, "threshold", where + " test");
      } else if (tkind == "eq") {
        n.test.kind = TestKind::CategoricalEq;
        n.test.category = get_field<double>(*tit, "category", where + " test");
      } else {
        throw InputError(where + ": unknown test kind '" + tkind + "'");
      }
      n.left = resolve(get_id(jn, "left", where), n.id);
      n.right = resolve(get_id(jn, "right", where), n.id);
      if (jn.contains("value")) throw InputError(where + ": internal node must not carry a value");
    } else if (kind == "leaf") {
      n.leaf = true;
      if (jn.contains("left") || jn.contains("right") || jn.contains("test"))
        throw InputError(where + ": leaf must not carry children or a test");
      auto vit = jn.find("value");
      if (vit == jn.end() || !vit->is_object()) throw InputError(where + ": leaf needs a 'value' object");
      const auto tag = get_field<std::string>(*vit, "tag", where + " value");
      auto v = vit->find("v");
      if (v == vit->end()) throw InputError(where + ": value missing 'v'");
      if (tag == "real") {
        if (!v->is_number()) throw InputError(where + ": real value must be numeric");
        n.value = LeafValue::Real(v->get<double>());
      } else if (tag == "label" || tag == "expert") {
        if (!v->is_number_integer()) throw InputError(where + ": " + tag + " value must be an integer id");
        n.value = tag == "label" ? LeafValue::Label(v->get<std::int64_t>()) : LeafValue::Expert(v->get<std::int64_t>());
      } else {
        throw InputError(where + ": unknown value tag '" + tag + "'");
      }
    } else {
      throw InputError(where + ": unknown node kind '" + kind + "'");
    }
  }
  auto rit = index.find(root_id);
  if (rit == index.end()) throw InputError("root id " + std::to_string(root_id) + " does not exist");
  return DecisionTree(feature_count, std::move(nodes), rit->second, std::move(domains));
}

std::string serialize_tree(const DecisionTree& tree) {
  json doc;
  doc["feature_count"] = tree.feature_count();
  doc["root"] = tree.node(tree.root()).id;
  json nodes = json::array();
  for (const Node& n : tree.nodes()) {
    json jn;
    jn["id"] = n.id;
    if (n.leaf) {
      jn["kind"] = "leaf";
      json v;
      v["tag"] = to_string(n.value.tag);
      if (n.value.tag == ValueTag::Real)
        v["v"] = n.value.real;
      else
        v["v"] = n.value.id;
      jn["value"] = v;
    } else {
      jn["kind"] = "internal";
      json t;
      t["feature"] = n.test.feature;
      if (n.test.kind == TestKind::NumericLe) {
        t["kind"] = "le";
        t["threshold"] = n.test.threshold;
      } else {
        t["kind"] = "eq";
        t["category"] = n.test.category;
      }
      jn["test"] = t;
      jn["left"] = tree.node(n.left).id;
      jn["right"] = tree.node(n.right).id;
    }
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  if (!tree.categorical_domains().empty()) {
    json d = json::object();
    for (const auto& [f, values] : tree.categorical_domains()) d[std::to_string(f)] = values;
    doc["categorical_domains"] = d;
  }
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Random generation

namespace {

struct Generator {
  const RandomTreeConfig& config;
  Rng rng;
  std::vector<Node> nodes;

  std::size_t grow(int depth, bool force_split) {
    const std::size_t self = nodes.size();
    nodes.emplace_back();
    nodes[self].id = static_cast<NodeId>(self);
    const bool split = depth < config.max_depth && (force_split || rng.bernoulli(config.split_probability));
    if (!split) {
      Node& leaf = nodes[self];
      leaf.leaf = true;
      switch (config.leaf_tag) {
        case ValueTag::Real: leaf.value = LeafValue::Real(static_cast<double>(rng.range(-20, 20)) / 2.0); break;
        case ValueTag::Label: leaf.value = LeafValue::Label(rng.range(0, config.label_count - 1)); break;
        case ValueTag::Expert: leaf.value = LeafValue::Expert(0); break;
      }
      return self;
    }
    Test test;
    test.kind = TestKind::NumericLe;
    test.feature = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.feature_count)));
    test.threshold = static_cast<double>(rng.range(-16, 16)) / 4.0;
    const std::size_t left = grow(depth + 1, false);
    const std::size_t right = grow(depth + 1, false);
    Node& n = nodes[self];
    n.leaf = false;
    n.test = test;
    n.left = left;
    n.right = right;
    return self;
  }
};

}  // namespace

DecisionTree random_tree(std::uint64_t seed, const RandomTreeConfig& config) {
  if (config.max_depth < 1) throw InputError("random_tree: max_depth must be >= 1");
  if (config.feature_count < 1) throw InputError("random_tree: feature_count must be >= 1");
  if (!(config.split_probability >= 0.0 && config.split_probability <= 1.0))
    throw InputError("random_tree: split_probability must lie in [0, 1]");
  if (config.leaf_tag == ValueTag::Label && config.label_count < 1)
    throw InputError("random_tree: label_count must be >= 1");
  Generator gen{config, Rng(seed), {}};
  gen.grow(0, true);
  if (config.leaf_tag == ValueTag::Expert) {
    // Expert leaves are numbered left to right.
    std::int64_t next = 0;
    DecisionTree shaped(config.feature_count, gen.nodes, 0);
    for (std::size_t leaf : leaves_in_order(shaped)) gen.nodes[leaf].value = LeafValue::Expert(next++);
  }
  return DecisionTree(config.feature_count, std::move(gen.nodes), 0);
}

}  // namespace ldm
