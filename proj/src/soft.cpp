#include "ldm/soft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "ldm/errors.hpp"
#include "ldm/inference.hpp"

namespace ldm {

using nlohmann::json;

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Sign: return "sign";
    case Activation::SaturatedLinear: return "satlin";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "sign") return Activation::Sign;
  if (name == "satlin" || name == "saturated-linear") return Activation::SaturatedLinear;
  if (name == "tanh") return Activation::Tanh;
  throw InputError("unknown activation '" + name + "' (expected sign, satlin or tanh)");
}

void SoftConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("epsilon must be a positive finite number");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("tau must be a positive finite number");
}

double activate(const SoftConfig& config, double z) {
  switch (config.activation) {
    case Activation::Sign: return z > 0.0 ? 1.0 : -1.0;
    case Activation::SaturatedLinear:
      if (z > config.epsilon) return 1.0;
      if (z < -config.epsilon) return -1.0;
      return z / config.epsilon;
    case Activation::Tanh: {
      // Evaluated on |z| so the result is exactly odd.
      const double r = 2.0 / (1.0 + std::exp(-2.0 * std::abs(z))) - 1.0;
      return std::signbit(z) ? -r : r;
    }
  }
  return 0.0;
}

std::vector<double> activate(const SoftConfig& config, std::span<const double> z) {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate(config, z[i]);
  return out;
}

double activation_derivative(const SoftConfig& config, double z) {
  switch (config.activation) {
    case Activation::Sign: return 0.0;
    case Activation::SaturatedLinear: return std::abs(z) < config.epsilon ? 1.0 / config.epsilon : 0.0;
    case Activation::Tanh: {
      const double s = activate(config, z);
      return 1.0 - s * s;
    }
  }
  return 0.0;
}

namespace {

std::vector<double> soft_input(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config) {
  config.validate();
  if (!machine.transform.empty())
    throw InputError("soft evaluation does not support categorical features (gap interval); use exact mode");
  check_feature_vector(x, machine.n);
  return {x.begin(), x.end()};
}

std::vector<double> hidden(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config) {
  const auto z = margins(machine, x);
  for (std::size_t j = 0; j < z.size(); ++j)
    if (std::isnan(z[j])) throw InputError("NaN test margin at test " + std::to_string(j));
  return activate(config, z);
}

// Row scores B~_i a, accumulated over the row in column order.
std::vector<double> template_scores(const DecisionMachine& machine, std::span<const double> a) {
  if (machine.degenerate()) return {1.0};
  std::vector<double> s(machine.leaf_count());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto b = machine.B.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (b[j] != 0) acc += b[j] * a[j];
    s[i] = acc / machine.row_norms[i];
  }
  return s;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// sum_i p_i y_i written as y_k + sum_{i != k} p_i (y_i - y_k), k the heaviest
// weight. Exact when all y_i agree or when a single weight is nonzero.
double convex_combination(std::span<const double> p, std::span<const double> y) {
  const std::size_t k = argmax(p);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (i != k && p[i] != 0.0) acc += p[i] * (y[i] - y[k]);
  return acc == 0.0 ? y[k] : y[k] + acc;
}

std::vector<double> real_values(const DecisionMachine& machine) {
  if (!machine.numeric()) throw InputError("soft prediction requires real-valued leaves");
  std::vector<double> v;
  v.reserve(machine.v.size());
  for (const LeafValue& lv : machine.v) v.push_back(lv.real);
  return v;
}

}  // namespace

std::vector<double> soft_scores(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config) {
  const auto input = soft_input(machine, x, config);
  return template_scores(machine, hidden(machine, input, config));
}

std::size_t soft_decide(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config) {
  return argmax(soft_scores(machine, x, config));
}

std::vector<double> softmax(std::span<const double> scores, double tau) {
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((scores[i] - top) / tau);
    total += p[i];
  }
  for (double& e : p) e /= total;
  return p;
}

std::vector<double> soft_weights(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config) {
  return softmax(soft_scores(machine, x, config), config.tau);
}

double soft_predict(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config) {
  const auto values = real_values(machine);
  const auto p = soft_weights(machine, x, config);
  return convex_combination(p, values);
}

double attention_eval(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config) {
  const auto values = real_values(machine);
  const auto input = soft_input(machine, x, config);
  if (machine.degenerate()) return values[0];

  // query = sigma(S~ x~)
  const AugmentedSystem aug = augment(machine, input);
  const auto pre = aug.product();
  for (std::size_t j = 0; j < pre.size(); ++j)
    if (std::isnan(pre[j])) throw InputError("NaN test margin at test " + std::to_string(j));
  const auto query = activate(config, pre);

  // logits_i = <key_i, query> with key_i = B_i / |B_i|_1
  std::vector<double> logits(machine.leaf_count());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto key = machine.B.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < key.size(); ++j)
      if (key[j] != 0) dot += key[j] * query[j];
    logits[i] = dot / machine.row_norms[i];
  }
  const auto attn = softmax(logits, config.tau);
  return convex_combination(attn, values);
}

double attention_eval_hard(const DecisionMachine& machine, std::span<const double> x) {
  const auto values = real_values(machine);
  if (machine.degenerate()) {
    prepare_input(machine, x);
    return values[0];
  }
  const auto h = sgn_modified(margins(machine, prepare_input(machine, x)));
  const auto scores = similarity_vector(machine, h);
  std::vector<double> weights(scores.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    weights[i] = scores[i].is_one() ? 1.0 : 0.0;
    mass += weights[i];
  }
  if (mass == 0.0) throw InvariantError("hard attention: no template row reached similarity 1");
  for (double& w : weights) w /= mass;
  return convex_combination(weights, values);
}

// ---------------------------------------------------------------------------
// Experts

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double Expert::evaluate(std::span<const double> x) const {
  switch (kind) {
    case Kind::Constant: return bias;
    case Kind::Affine: return dot(weights, x) + bias;
    case Kind::Logistic: return sigmoid(dot(weights, x) + bias);
  }
  return 0.0;
}

std::vector<double> Expert::gradient(std::span<const double> x) const {
  std::vector<double> g(x.size(), 0.0);
  if (kind == Kind::Constant) return g;
  double scale = 1.0;
  if (kind == Kind::Logistic) {
    const double s = sigmoid(dot(weights, x) + bias);
    scale = s * (1.0 - s);
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * weights[i];
  return g;
}

const char* to_string(Kernel k) {
  switch (k) {
    case Kernel::ExpDot: return "exp-dot";
    case Kernel::GaussianRbf: return "gaussian-rbf";
    case Kernel::SoftmaxLogical: return "softmax-logical";
    case Kernel::HardDelta: return "hard-delta";
  }
  return "?";
}

Kernel parse_kernel(const std::string& name) {
  if (name == "exp-dot") return Kernel::ExpDot;
  if (name == "gaussian-rbf") return Kernel::GaussianRbf;
  if (name == "softmax-logical") return Kernel::SoftmaxLogical;
  if (name == "hard-delta") return Kernel::HardDelta;
  throw InputError("unknown kernel '" + name + "' (expected exp-dot, gaussian-rbf, softmax-logical or hard-delta)");
}

// ---------------------------------------------------------------------------
// Selection-prediction

namespace {

bool is_ternary(std::span<const double> key) {
  return std::all_of(key.begin(), key.end(), [](double e) { return e == -1.0 || e == 0.0 || e == 1.0; });
}

int l1_norm(std::span<const double> key) {
  int n = 0;
  for (double e : key) n += e != 0.0;
  return n;
}

int input_width(const SelectionPredictionModel& model) {
  return model.machine ? model.machine->n : static_cast<int>(model.keys.front().size());
}

}  // namespace

void SelectionPredictionModel::validate() const {
  if (keys.empty()) throw InputError("selection-prediction model needs at least one key");
  if (keys.size() != experts.size()) throw InputError("selection-prediction model: |keys| != |experts|");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("selection-prediction model: tau must be positive");
  hidden.validate();
  const std::size_t qdim = machine ? machine->test_count() : keys.front().size();
  for (const auto& k : keys)
    if (k.size() != qdim) throw InputError("selection-prediction model: key length does not match the feature map");
  if (machine && !machine->transform.empty())
    throw InputError("selection-prediction model: categorical machines are not supported in soft mode");
  if (kernel == Kernel::SoftmaxLogical || kernel == Kernel::HardDelta) {
    if (!machine) throw InputError(std::string(to_string(kernel)) + " kernel needs a machine feature map");
    for (const auto& k : keys) {
      if (!is_ternary(k)) throw InputError(std::string(to_string(kernel)) + " kernel needs ternary template keys");
      if (l1_norm(k) == 0) throw InputError(std::string(to_string(kernel)) + " kernel: zero template key");
    }
  }
  if (kernel == Kernel::HardDelta && hidden.activation != Activation::Sign)
    throw InputError("hard-delta kernel requires the sign activation");
  const auto n = static_cast<std::size_t>(input_width(*this));
  for (const Expert& e : experts)
    if (e.kind != Expert::Kind::Constant && e.weights.size() != n)
      throw InputError("selection-prediction model: expert weight length does not match the input");
}

std::vector<double> SelectionPredictionModel::query(std::span<const double> x) const {
  if (!machine) return {x.begin(), x.end()};
  const auto z = margins(*machine, x);
  for (std::size_t j = 0; j < z.size(); ++j)
    if (std::isnan(z[j])) throw InputError("NaN test margin at test " + std::to_string(j));
  return activate(hidden, z);
}

namespace {

// Log-similarities l_i, so sim_i = exp(l_i). Not used for hard-delta.
std::vector<double> log_similarities(const SelectionPredictionModel& model, std::span<const double> q) {
  std::vector<double> l(model.keys.size());
  for (std::size_t i = 0; i < l.size(); ++i) {
    const auto& key = model.keys[i];
    switch (model.kernel) {
      case Kernel::ExpDot: l[i] = dot(key, q); break;
      case Kernel::GaussianRbf: {
        double d2 = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) d2 += (q[j] - key[j]) * (q[j] - key[j]);
        l[i] = -d2 / model.tau;
        break;
      }
      case Kernel::SoftmaxLogical: l[i] = dot(key, q) / l1_norm(key) / model.tau; break;
      case Kernel::HardDelta: break;
    }
  }
  return l;
}

}  // namespace

std::vector<double> sp_weights(const SelectionPredictionModel& model, std::span<const double> x) {
  model.validate();
  check_feature_vector(x, input_width(model));
  const auto q = model.query(x);
  std::vector<double> w(model.keys.size());
  if (model.kernel == Kernel::HardDelta) {
    double mass = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      std::int64_t num = 0;
      for (std::size_t j = 0; j < q.size(); ++j) num += static_cast<std::int64_t>(model.keys[i][j] * q[j]);
      w[i] = num == l1_norm(model.keys[i]) ? 1.0 : 0.0;
      mass += w[i];
    }
    if (mass == 0.0) throw InputError("no selected expert");
    for (double& e : w) e /= mass;
    return w;
  }
  const auto l = log_similarities(model, q);
  const double top = *std::max_element(l.begin(), l.end());
  if (!std::isfinite(top)) throw InputError("no selected expert");
  double mass = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(l[i] - top);
    mass += w[i];
  }
  for (double& e : w) e /= mass;
  return w;
}

double sp_predict(const SelectionPredictionModel& model, std::span<const double> x) {
  const auto w = sp_weights(model, x);
  std::vector<double> g(model.experts.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = model.experts[i].evaluate(x);
  return convex_combination(w, g);
}

namespace {

std::vector<std::vector<double>> template_keys(const DecisionMachine& machine) {
  if (machine.degenerate()) throw InputError("template-key models need a machine with at least two leaves");
  std::vector<std::vector<double>> keys;
  for (std::size_t i = 0; i < machine.B.rows(); ++i) {
    const auto row = machine.B.row(i);
    keys.emplace_back(row.begin(), row.end());
  }
  return keys;
}

}  // namespace

SelectionPredictionModel sglmt_model(std::shared_ptr<const DecisionMachine> machine, std::vector<Expert> experts,
                                     double tau) {
  SelectionPredictionModel m;
  m.kernel = Kernel::SoftmaxLogical;
  m.tau = tau;
  m.keys = template_keys(*machine);
  m.experts = std::move(experts);
  m.machine = std::move(machine);
  m.hidden = SoftConfig{Activation::Sign, 1.0, 1.0};
  m.validate();
  return m;
}

SelectionPredictionModel hard_delta_model(std::shared_ptr<const DecisionMachine> machine,
                                          std::vector<Expert> experts) {
  SelectionPredictionModel m;
  m.kernel = Kernel::HardDelta;
  m.keys = template_keys(*machine);
  m.experts = std::move(experts);
  m.machine = std::move(machine);
  m.hidden = SoftConfig{Activation::Sign, 1.0, 1.0};
  m.validate();
  return m;
}

SelectionPredictionModel hard_delta_model(std::shared_ptr<const DecisionMachine> machine) {
  const auto values = real_values(*machine);
  std::vector<Expert> experts;
  for (double v : values) experts.push_back(Expert::constant(v));
  return hard_delta_model(std::move(machine), std::move(experts));
}

double glm_tree_predict(const DecisionMachine& machine, std::span<const Expert> experts, std::span<const double> x) {
  if (experts.size() != machine.leaf_count()) throw InputError("glm_tree_predict: need one expert per leaf");
  return experts[decide(machine, x)].evaluate(x);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Expert parse_expert(const json& je) {
  const auto kind = je.at("kind").get<std::string>();
  const json& params = je.at("params");
  if (kind == "constant") return Expert::constant(params.at("value").get<double>());
  if (kind == "affine" || kind == "logistic") {
    auto w = params.at("weights").get<std::vector<double>>();
    const double b = params.value("bias", 0.0);
    return kind == "affine" ? Expert::affine(std::move(w), b) : Expert::logistic(std::move(w), b);
  }
  throw InputError("unknown expert kind '" + kind + "'");
}

json expert_json(const Expert& e) {
  switch (e.kind) {
    case Expert::Kind::Constant: return {{"kind", "constant"}, {"params", {{"value", e.bias}}}};
    case Expert::Kind::Affine: return {{"kind", "affine"}, {"params", {{"weights", e.weights}, {"bias", e.bias}}}};
    case Expert::Kind::Logistic:
      return {{"kind", "logistic"}, {"params", {{"weights", e.weights}, {"bias", e.bias}}}};
  }
  return {};
}

}  // namespace

SelectionPredictionModel parse_sp_model(std::string_view text,
                                        const std::function<DecisionMachine(const std::string&)>& load_machine) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  try {
    SelectionPredictionModel m;
    m.kernel = parse_kernel(doc.at("kernel").get<std::string>());
    m.tau = doc.value("tau", 1.0);
    m.keys = doc.at("keys").get<std::vector<std::vector<double>>>();
    for (const auto& je : doc.at("experts")) m.experts.push_back(parse_expert(je));
    const auto fmap = doc.value("feature_map", std::string("identity"));
    if (fmap.rfind("machine:", 0) == 0) {
      if (!load_machine) throw InputError("feature_map 'machine:' needs a machine loader");
      m.machine = std::make_shared<DecisionMachine>(load_machine(fmap.substr(8)));
    } else if (fmap != "identity") {
      throw InputError("unknown feature_map '" + fmap + "'");
    }
    if (doc.contains("activation")) m.hidden.activation = parse_activation(doc["activation"].get<std::string>());
    if (doc.contains("epsilon")) m.hidden.epsilon = doc["epsilon"].get<double>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed selection-prediction model: ") + e.what());
  }
}

std::string serialize_sp_model(const SelectionPredictionModel& model, const std::string& machine_path) {
  json doc;
  doc["kernel"] = to_string(model.kernel);
  doc["tau"] = model.tau;
  doc["keys"] = model.keys;
  json experts = json::array();
  for (const Expert& e : model.experts) experts.push_back(expert_json(e));
  doc["experts"] = std::move(experts);
  doc["feature_map"] = model.machine ? "machine:" + machine_path : std::string("identity");
  if (model.machine) {
    doc["activation"] = to_string(model.hidden.activation);
    doc["epsilon"] = model.hidden.epsilon;
  }
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Gradients

std::vector<double> soft_predict_gradient(const DecisionMachine& machine, std::span<const double> x,
                                          const SoftConfig& config) {
  const auto values = real_values(machine);
  const auto input = soft_input(machine, x, config);
  std::vector<double> grad(input.size(), 0.0);
  if (machine.degenerate()) return grad;

  const auto z = margins(machine, input);
  const auto a = activate(config, z);
  const auto s = template_scores(machine, a);
  const auto p = softmax(s, config.tau);
  const double y = convex_combination(p, values);

  // dy/ds_i = p_i (v_i - y) / tau
  std::vector<double> dz(z.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double ds = p[i] * (values[i] - y) / config.tau;
    if (ds == 0.0) continue;
    const auto b = machine.B.row(i);
    for (std::size_t j = 0; j < b.size(); ++j)
      if (b[j] != 0) dz[j] += ds * b[j] / machine.row_norms[i];
  }
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double g = dz[j] * activation_derivative(config, z[j]);
    for (const auto& e : machine.S.row(j)) grad[e.col] += g * e.value;
  }
  return grad;
}

std::vector<double> sp_predict_gradient(const SelectionPredictionModel& model, std::span<const double> x) {
  const auto w = sp_weights(model, x);
  const std::size_t n = x.size();
  std::vector<double> g(model.experts.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = model.experts[i].evaluate(x);
  const double y = convex_combination(w, g);

  std::vector<double> grad(n, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (w[i] == 0.0) continue;
    const auto ge = model.experts[i].gradient(x);
    for (std::size_t k = 0; k < n; ++k) grad[k] += w[i] * ge[k];
  }
  if (model.kernel == Kernel::HardDelta) return grad;  // selection is piecewise constant

  // d/dq of sum_i w_i (g_i - y) l_i
  const auto q = model.query(x);
  std::vector<double> dq(q.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double coef = w[i] * (g[i] - y);
    if (coef == 0.0) continue;
    const auto& key = model.keys[i];
    for (std::size_t j = 0; j < q.size(); ++j) {
      double dl = 0.0;
      switch (model.kernel) {
        case Kernel::ExpDot: dl = key[j]; break;
        case Kernel::GaussianRbf: dl = -2.0 * (q[j] - key[j]) / model.tau; break;
        case Kernel::SoftmaxLogical: dl = key[j] / l1_norm(key) / model.tau; break;
        case Kernel::HardDelta: break;
      }
      dq[j] += coef * dl;
    }
  }
  if (!model.machine) {
    for (std::size_t k = 0; k < n; ++k) grad[k] += dq[k];
    return grad;
  }
  const auto z = margins(*model.machine, x);
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double gz = dq[j] * activation_derivative(model.hidden, z[j]);
    for (const auto& e : model.machine->S.row(j)) grad[e.col] += gz * e.value;
  }
  return grad;
}

namespace {

// Points where the activation is not differentiable.
std::vector<double> kinks(const SoftConfig& config) {
  switch (config.activation) {
    case Activation::Sign: return {0.0};
    case Activation::SaturatedLinear: return {-config.epsilon, config.epsilon};
    case Activation::Tanh: return {};
  }
  return {};
}

bool machine_near_kink(const DecisionMachine& machine, const SoftConfig& config, std::span<const double> x,
                       std::size_t coord, double radius) {
  const auto points = kinks(config);
  if (points.empty()) return false;
  const auto z = margins(machine, x);
  for (std::size_t j = 0; j < z.size(); ++j) {
    double reach = 0.0;  // how far z_j moves when x[coord] moves by radius
    for (const auto& e : machine.S.row(j))
      if (e.col == coord) reach += std::abs(e.value) * radius;
    if (reach == 0.0) continue;
    for (double k : points)
      if (std::abs(z[j] - k) <= reach) return true;
  }
  return false;
}

}  // namespace

Objective soft_predict_objective(std::shared_ptr<const DecisionMachine> machine, SoftConfig config) {
  Objective o;
  o.value = [machine, config](std::span<const double> x) { return soft_predict(*machine, x, config); };
  o.gradient = [machine, config](std::span<const double> x) { return soft_predict_gradient(*machine, x, config); };
  o.near_kink = [machine, config](std::span<const double> x, std::size_t k, double r) {
    return machine_near_kink(*machine, config, x, k, r);
  };
  return o;
}

Objective sp_predict_objective(std::shared_ptr<const SelectionPredictionModel> model) {
  Objective o;
  o.value = [model](std::span<const double> x) { return sp_predict(*model, x); };
  o.gradient = [model](std::span<const double> x) { return sp_predict_gradient(*model, x); };
  o.near_kink = [model](std::span<const double> x, std::size_t k, double r) {
    if (!model->machine) return false;
    SoftConfig c = model->hidden;
    if (model->kernel == Kernel::HardDelta) c.activation = Activation::Sign;
    return machine_near_kink(*model->machine, c, x, k, r);
  };
  return o;
}

GradientReport finite_difference_check(const Objective& objective, std::span<const double> x, double h,
                                       double tolerance, double scale_floor) {
  if (!(h > 0.0)) throw InputError("finite_difference_check: step must be positive");
  GradientReport report;
  const auto analytic = objective.gradient(x);
  if (analytic.size() != x.size()) throw InputError("finite_difference_check: gradient length mismatch");
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t k = 0; k < x.size(); ++k) {
    GradientCoordinate c;
    c.index = k;
    c.analytic = analytic[k];
    if (objective.near_kink && objective.near_kink(x, k, 2.0 * h)) {
      c.skipped = true;
      ++report.skipped;
      report.coordinates.push_back(c);
      continue;
    }
    probe[k] = x[k] + h;
    const double up = objective.value(probe);
    probe[k] = x[k] - h;
    const double down = objective.value(probe);
    probe[k] = x[k];
    c.numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(c.analytic), std::abs(c.numeric), scale_floor});
    c.relative_error = std::abs(c.analytic - c.numeric) / scale;
    c.passed = c.relative_error <= tolerance;
    report.all_passed = report.all_passed && c.passed;
    report.coordinates.push_back(c);
  }
  return report;
}

}  // namespace ldm
