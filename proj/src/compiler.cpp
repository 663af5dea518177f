#include "ldm/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <utility>

#include "json.hpp"
#include "ldm/errors.hpp"

namespace ldm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TernaryMatrix

TernaryMatrix TernaryMatrix::from_strings(const std::vector<std::string>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  TernaryMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw InputError("template row " + std::to_string(r + 1) + " has inconsistent length");
    for (std::size_t c = 0; c < cols; ++c) {
      switch (rows[r][c]) {
        case '-': m.set(r, c, -1); break;
        case '0': m.set(r, c, 0); break;
        case '+': m.set(r, c, 1); break;
        default:
          throw InputError("template row " + std::to_string(r + 1) + ": character '" + std::string(1, rows[r][c]) +
                           "' is not one of - 0 +");
      }
    }
  }
  return m;
}

TernaryMatrix TernaryMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  TernaryMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw InputError("ternary rows have inconsistent length");
    for (std::size_t c = 0; c < cols; ++c) m.set(r, c, rows[r][c]);
  }
  return m;
}

void TernaryMatrix::set(std::size_t r, std::size_t c, int value) {
  if (value < -1 || value > 1) throw InputError("ternary entry must be -1, 0 or +1");
  data_[r * cols_ + c] = static_cast<std::int8_t>(value);
}

int TernaryMatrix::row_norm(std::size_t r) const {
  int nz = 0;
  for (std::int8_t e : row(r)) nz += e != 0;
  return nz;
}

std::string TernaryMatrix::row_string(std::size_t r) const {
  std::string s;
  s.reserve(cols_);
  for (std::int8_t e : row(r)) s.push_back(e < 0 ? '-' : e > 0 ? '+' : '0');
  return s;
}

std::vector<std::string> TernaryMatrix::to_strings() const {
  std::vector<std::string> out;
  for (std::size_t r = 0; r < rows_; ++r) out.push_back(row_string(r));
  return out;
}

// ---------------------------------------------------------------------------
// SelectionMatrix

void SelectionMatrix::add_row(std::vector<Entry> entries) {
  for (const Entry& e : entries)
    if (e.col >= cols_) throw InputError("selection entry column out of range");
  entries_.insert(entries_.end(), entries.begin(), entries.end());
  row_start_.push_back(entries_.size());
}

bool SelectionMatrix::axis_aligned() const {
  for (std::size_t r = 0; r < rows(); ++r) {
    auto entries = row(r);
    if (entries.size() != 1 || entries[0].value != 1.0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Categorical expansion

namespace {

double lagrange_indicator(std::span<const double> domain, double target, double x) {
  double basis = 1.0;
  for (double e : domain) {
    if (e == target) continue;
    basis *= (x - e) / (target - e);
  }
  return 1.0 - basis;
}

}  // namespace

LagrangeIndicator::LagrangeIndicator(std::vector<double> domain, double target)
    : domain_(std::move(domain)), target_(target) {
  if (domain_.size() < 2) throw InputError("categorical domain needs at least 2 values");
  std::set<double> seen(domain_.begin(), domain_.end());
  if (seen.size() != domain_.size()) throw InputError("categorical domain has duplicate values");
  if (!seen.contains(target_)) throw InputError("category not in declared domain");
  if (domain_.size() > kMaxDomain)
    throw InputError("categorical domain of size " + std::to_string(domain_.size()) +
                     " exceeds 16 for Lagrange expansion; use dummy (indicator) expansion instead");
}

double LagrangeIndicator::operator()(double x) const {
  return lagrange_indicator(domain_, target_, x);
}

const char* to_string(ExpansionMode mode) { return mode == ExpansionMode::Lagrange ? "lagrange" : "dummy"; }

double PseudoFeature::evaluate(double x) const {
  if (mode == ExpansionMode::Dummy) return x == target ? 0.0 : 1.0;
  return lagrange_indicator(domain, target, x);
}

std::vector<double> FeatureTransform::apply(std::span<const double> x) const {
  check_feature_vector(x, input_features);
  std::vector<double> out(x.begin(), x.end());
  out.reserve(static_cast<std::size_t>(output_features()));
  for (const PseudoFeature& p : pseudo) {
    const double value = x[p.source_feature];
    if (std::find(p.domain.begin(), p.domain.end(), value) == p.domain.end())
      throw InputError("categorical feature " + std::to_string(p.source_feature) + " value outside declared domain");
    out.push_back(p.evaluate(value));
  }
  return out;
}

ExpandedTree expand_categorical(const DecisionTree& tree, ExpansionMode mode) {
  FeatureTransform transform;
  transform.input_features = tree.feature_count();
  if (!tree.has_categorical_tests()) return {tree, transform};

  std::map<std::pair<int, double>, int> pseudo_index;
  std::vector<Node> nodes = tree.nodes();
  for (Node& n : nodes) {
    if (n.leaf || n.test.kind != TestKind::CategoricalEq) continue;
    const auto dit = tree.categorical_domains().find(n.test.feature);
    if (dit == tree.categorical_domains().end())
      throw InputError("node " + std::to_string(n.id) + ": categorical feature " + std::to_string(n.test.feature) +
                       " has no declared domain");
    const auto key = std::make_pair(n.test.feature, n.test.category);
    auto [it, inserted] = pseudo_index.try_emplace(key, tree.feature_count() + static_cast<int>(pseudo_index.size()));
    if (inserted) {
      PseudoFeature p{n.test.feature, n.test.category, dit->second, mode};
      if (mode == ExpansionMode::Lagrange) {
        LagrangeIndicator check(p.domain, p.target);  // validates size, duplicates, membership
      } else if (std::find(p.domain.begin(), p.domain.end(), p.target) == p.domain.end()) {
        throw InputError("node " + std::to_string(n.id) + ": category not in declared domain");
      }
      transform.pseudo.push_back(std::move(p));
    }
    n.test = Test{TestKind::NumericLe, it->second, 0.0, 0.0};
  }
  DecisionTree expanded(transform.output_features(), std::move(nodes), tree.root(), tree.categorical_domains());
  return {std::move(expanded), std::move(transform)};
}

// ---------------------------------------------------------------------------
// Compilation

DecisionMachine compile(const DecisionTree& tree) {
  DecisionMachine m;
  m.n = tree.feature_count();
  m.value_tag = tree.value_tag();
  m.S = SelectionMatrix(static_cast<std::size_t>(m.n));

  // Breadth-first numbering of internal nodes gives the column order.
  std::vector<std::ptrdiff_t> column(tree.nodes().size(), -1);
  std::deque<std::size_t> queue{tree.root()};
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const Node& n = tree.node(i);
    if (n.leaf) continue;
    if (n.test.kind != TestKind::NumericLe)
      throw InputError("node " + std::to_string(n.id) + ": unexpanded categorical test; run expand_categorical first");
    column[i] = static_cast<std::ptrdiff_t>(m.t.size());
    m.S.add_row({{static_cast<std::size_t>(n.test.feature), 1.0}});
    m.t.push_back(n.test.threshold);
    m.test_order.push_back(n.id);
    queue.push_back(n.left);
    queue.push_back(n.right);
  }

  const auto leaves = leaves_in_order(tree);
  m.B = TernaryMatrix(leaves.size(), m.t.size());
  std::vector<std::size_t> leaf_row(tree.nodes().size(), 0);
  for (std::size_t r = 0; r < leaves.size(); ++r) {
    leaf_row[leaves[r]] = r;
    m.v.push_back(tree.node(leaves[r]).value);
    m.leaf_order.push_back(tree.node(leaves[r]).id);
  }

  // Walk every path once, writing each row as its leaf is reached.
  std::vector<std::int8_t> path(m.t.size(), 0);
  struct Frame {
    std::size_t node;
    int stage;
  };
  std::vector<Frame> stack{{tree.root(), 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Node& n = tree.node(f.node);
    if (n.leaf) {
      const std::size_t r = leaf_row[f.node];
      for (std::size_t c = 0; c < path.size(); ++c) m.B.set(r, c, path[c]);
      stack.pop_back();
      continue;
    }
    const auto c = static_cast<std::size_t>(column[f.node]);
    if (f.stage == 0) {
      f.stage = 1;
      path[c] = -1;
      stack.push_back({n.left, 0});
    } else if (f.stage == 1) {
      f.stage = 2;
      path[c] = 1;
      stack.push_back({n.right, 0});
    } else {
      path[c] = 0;
      stack.pop_back();
    }
  }
  for (std::size_t r = 0; r < m.B.rows(); ++r) m.row_norms.push_back(m.B.row_norm(r));
  return m;
}

DecisionMachine compile(const ExpandedTree& expanded) {
  DecisionMachine m = compile(expanded.tree);
  m.transform = expanded.transform;
  return m;
}

NormalizedTemplate normalized_row_similarity_basis(const DecisionMachine& machine) {
  NormalizedTemplate out{machine.B, {}};
  for (int norm : machine.row_norms) out.denominators.push_back(norm);
  return out;
}

std::vector<double> AugmentedSystem::product() const {
  std::vector<double> out(S.rows());
  for (std::size_t r = 0; r < S.rows(); ++r) out[r] = S.row_dot(r, x);
  return out;
}

AugmentedSystem augment(const DecisionMachine& machine, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(machine.n))
    throw InputError("augment: feature vector has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(machine.n));
  AugmentedSystem out;
  out.S = SelectionMatrix(static_cast<std::size_t>(machine.n) + 1);
  for (std::size_t r = 0; r < machine.S.rows(); ++r) {
    auto entries = machine.S.row(r);
    std::vector<SelectionMatrix::Entry> row(entries.begin(), entries.end());
    row.push_back({static_cast<std::size_t>(machine.n), machine.t[r]});
    out.S.add_row(std::move(row));
  }
  out.x.assign(x.begin(), x.end());
  out.x.push_back(-1.0);
  return out;
}

std::vector<double> margins(const DecisionMachine& machine, std::span<const double> x) {
  std::vector<double> z(machine.t.size());
  for (std::size_t r = 0; r < z.size(); ++r) z[r] = machine.S.row_dot(r, x) - machine.t[r];
  return z;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_machine(const DecisionMachine& m) {
  json doc;
  doc["n"] = m.n;
  doc["L"] = m.leaf_count();
  json S = json::array();
  for (std::size_t r = 0; r < m.S.rows(); ++r)
    for (const auto& e : m.S.row(r)) S.push_back(json::array({r, e.col, e.value}));
  doc["S"] = std::move(S);
  doc["t"] = m.t;
  doc["B"] = m.B.to_strings();
  doc["row_norms"] = m.row_norms;
  doc["value_tag"] = to_string(m.value_tag);
  json v = json::array();
  for (const LeafValue& lv : m.v) {
    if (lv.tag == ValueTag::Real)
      v.push_back(lv.real);
    else
      v.push_back(lv.id);
  }
  doc["v"] = std::move(v);
  doc["test_order"] = m.test_order;
  doc["leaf_order"] = m.leaf_order;
  json ft = json::object();
  if (!m.transform.empty()) {
    ft["input_features"] = m.transform.input_features;
    json pseudo = json::array();
    for (const PseudoFeature& p : m.transform.pseudo)
      pseudo.push_back({{"feature", p.source_feature}, {"target", p.target}, {"domain", p.domain},
                        {"mode", to_string(p.mode)}});
    ft["pseudo"] = std::move(pseudo);
  }
  doc["feature_transform"] = std::move(ft);
  return doc.dump(2);
}

DecisionMachine parse_machine(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  try {
    DecisionMachine m;
    m.n = doc.at("n").get<int>();
    if (m.n < 1) throw InputError("machine: n must be >= 1");
    const auto L = doc.at("L").get<std::size_t>();
    if (L < 1) throw InputError("machine: L must be >= 1");
    m.t = doc.at("t").get<std::vector<double>>();
    if (m.t.size() + 1 != L) throw InputError("machine: t must have L-1 entries");

    std::vector<std::vector<SelectionMatrix::Entry>> rows(m.t.size());
    for (const auto& triple : doc.at("S")) {
      if (!triple.is_array() || triple.size() != 3) throw InputError("machine: S entries must be [row, col, value]");
      const auto r = triple[0].get<std::size_t>();
      const auto c = triple[1].get<std::size_t>();
      if (r >= rows.size() || c >= static_cast<std::size_t>(m.n)) throw InputError("machine: S entry out of range");
      rows[r].push_back({c, triple[2].get<double>()});
    }
    m.S = SelectionMatrix(static_cast<std::size_t>(m.n));
    for (auto& row : rows) m.S.add_row(std::move(row));

    const auto strings = doc.at("B").get<std::vector<std::string>>();
    if (strings.size() != L) throw InputError("machine: B must have L rows");
    m.B = TernaryMatrix::from_strings(strings);
    if (L > 1 && m.B.cols() != L - 1) throw InputError("machine: B must have L-1 columns");
    if (L == 1) m.B = TernaryMatrix(1, 0);
    for (std::size_t r = 0; r < L; ++r) m.row_norms.push_back(m.B.row_norm(r));
    if (doc.contains("row_norms") && doc["row_norms"].get<std::vector<int>>() != m.row_norms)
      throw InputError("machine: row_norms do not match B");

    const auto tag = doc.value("value_tag", std::string("real"));
    if (tag == "real")
      m.value_tag = ValueTag::Real;
    else if (tag == "label")
      m.value_tag = ValueTag::Label;
    else if (tag == "expert")
      m.value_tag = ValueTag::Expert;
    else
      throw InputError("machine: unknown value_tag '" + tag + "'");
    const auto& jv = doc.at("v");
    if (jv.size() != L) throw InputError("machine: v must have L entries");
    for (const auto& e : jv) {
      if (m.value_tag == ValueTag::Real)
        m.v.push_back(LeafValue::Real(e.get<double>()));
      else if (m.value_tag == ValueTag::Label)
        m.v.push_back(LeafValue::Label(e.get<std::int64_t>()));
      else
        m.v.push_back(LeafValue::Expert(e.get<std::int64_t>()));
    }
    if (doc.contains("test_order")) m.test_order = doc["test_order"].get<std::vector<NodeId>>();
    if (doc.contains("leaf_order")) m.leaf_order = doc["leaf_order"].get<std::vector<NodeId>>();

    if (auto it = doc.find("feature_transform"); it != doc.end() && it->is_object() && !it->empty()) {
      m.transform.input_features = it->at("input_features").get<int>();
      for (const auto& p : it->at("pseudo")) {
        PseudoFeature pf;
        pf.source_feature = p.at("feature").get<int>();
        pf.target = p.at("target").get<double>();
        pf.domain = p.at("domain").get<std::vector<double>>();
        const auto mode = p.at("mode").get<std::string>();
        if (mode == "lagrange")
          pf.mode = ExpansionMode::Lagrange;
        else if (mode == "dummy")
          pf.mode = ExpansionMode::Dummy;
        else
          throw InputError("machine: unknown expansion mode '" + mode + "'");
        if (pf.source_feature < 0 || pf.source_feature >= m.transform.input_features)
          throw InputError("machine: pseudo-feature source out of range");
        m.transform.pseudo.push_back(std::move(pf));
      }
      if (m.transform.output_features() != m.n) throw InputError("machine: feature_transform width does not match n");
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed machine document: ") + e.what());
  }
}

}  // namespace ldm
