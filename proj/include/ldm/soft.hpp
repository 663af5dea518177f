#pragma once
// Differentiable relaxations of logical decision machines: smooth
// activations in place of sgn, temperature softmax in place of argmax, the
// key/query/value attention reading of the same computation, and the
// selection-prediction mixture  T(x) = sum_i sim(W_i, f(x)) / sum_j sim(W_j, f(x)) * g_i(x).

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ldm/compiler.hpp"

namespace ldm {

enum class Activation { Sign, SaturatedLinear, Tanh };

const char* to_string(Activation a);
Activation parse_activation(const std::string& name);  // sign | satlin | tanh

struct SoftConfig {
  Activation activation = Activation::SaturatedLinear;
  double epsilon = 1.0;  // width of the saturated-linear gap (-eps, eps)
  double tau = 1.0;      // softmax temperature

  void validate() const;  // throws InputError unless epsilon > 0 and tau > 0
};

double activate(const SoftConfig& config, double z);
std::vector<double> activate(const SoftConfig& config, std::span<const double> z);

/// d sigma / dz. Zero for sign; 1/eps strictly inside the saturated-linear gap.
double activation_derivative(const SoftConfig& config, double z);

/// B~ sigma(Sx - t). A single-leaf machine scores {1}.
std::vector<double> soft_scores(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config);

std::size_t soft_decide(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config);

/// softmax(scores / tau) with max subtraction.
std::vector<double> softmax(std::span<const double> scores, double tau);

std::vector<double> soft_weights(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config);

/// sum_i p_i v[i], p = softmax(B~ sigma(Sx - t) / tau).
double soft_predict(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config);

/// The same value computed as key-value attention: query sigma(S~ x~), keys
/// the rows of B~, values v. Bitwise equal to soft_predict.
double attention_eval(const DecisionMachine& machine, std::span<const double> x, const SoftConfig& config);

/// Hard attention: sign query and exact delta(1 - B~_i h) weights.
double attention_eval_hard(const DecisionMachine& machine, std::span<const double> x);

// ---------------------------------------------------------------------------
// Selection-prediction models

struct Expert {
  enum class Kind { Constant, Affine, Logistic };

  Kind kind = Kind::Constant;
  double bias = 0.0;
  std::vector<double> weights;  // Affine and Logistic

  static Expert constant(double c) { return {Kind::Constant, c, {}}; }
  static Expert affine(std::vector<double> w, double b) { return {Kind::Affine, b, std::move(w)}; }
  static Expert logistic(std::vector<double> w, double b) { return {Kind::Logistic, b, std::move(w)}; }

  double evaluate(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;
};

enum class Kernel {
  ExpDot,          // exp(<W, q>)
  GaussianRbf,     // exp(-|q - W|^2 / tau)
  SoftmaxLogical,  // exp(B~_j h / tau), keys are template rows
  HardDelta,       // delta(1 - B~_j h), keys are template rows, sign query
};

const char* to_string(Kernel k);
Kernel parse_kernel(const std::string& name);  // exp-dot | gaussian-rbf | softmax-logical | hard-delta

struct SelectionPredictionModel {
  Kernel kernel = Kernel::ExpDot;
  double tau = 1.0;
  std::vector<std::vector<double>> keys;
  std::vector<Expert> experts;
  // Feature map f: identity when null, otherwise the hidden vector
  // sigma(Sx - t) of this machine under `hidden`.
  std::shared_ptr<const DecisionMachine> machine;
  SoftConfig hidden{Activation::Sign, 1.0, 1.0};

  void validate() const;
  std::vector<double> query(std::span<const double> x) const;
};

/// Normalized selection weights sim(W_i, f(x)) / sum_j sim(W_j, f(x)).
/// Throws InputError("no selected expert") when the similarity mass is zero.
std::vector<double> sp_weights(const SelectionPredictionModel& model, std::span<const double> x);

double sp_predict(const SelectionPredictionModel& model, std::span<const double> x);

/// Convenience constructors for the named special cases.
SelectionPredictionModel sglmt_model(std::shared_ptr<const DecisionMachine> machine, std::vector<Expert> experts,
                                     double tau);
SelectionPredictionModel hard_delta_model(std::shared_ptr<const DecisionMachine> machine);
SelectionPredictionModel hard_delta_model(std::shared_ptr<const DecisionMachine> machine, std::vector<Expert> experts);

SelectionPredictionModel parse_sp_model(std::string_view text,
                                        const std::function<DecisionMachine(const std::string&)>& load_machine = {});
std::string serialize_sp_model(const SelectionPredictionModel& model, const std::string& machine_path = "");

/// g_i(x) with i = decide(machine, x).
double glm_tree_predict(const DecisionMachine& machine, std::span<const Expert> experts, std::span<const double> x);

// ---------------------------------------------------------------------------
// Gradients

std::vector<double> soft_predict_gradient(const DecisionMachine& machine, std::span<const double> x,
                                          const SoftConfig& config);
std::vector<double> sp_predict_gradient(const SelectionPredictionModel& model, std::span<const double> x);

/// A scalar function of x with its hand-coded gradient. near_kink(x, k, r)
/// reports whether coordinate k lies within r of a non-differentiable point.
struct Objective {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<bool(std::span<const double>, std::size_t, double)> near_kink;
};

Objective soft_predict_objective(std::shared_ptr<const DecisionMachine> machine, SoftConfig config);
Objective sp_predict_objective(std::shared_ptr<const SelectionPredictionModel> model);

struct GradientCoordinate {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
  bool skipped = false;  // kink within 2h
  bool passed = false;
};

struct GradientReport {
  std::vector<GradientCoordinate> coordinates;
  bool all_passed = true;
  std::size_t skipped = 0;
};

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h against the
/// analytic gradient. Relative error is |a - n| / max(|a|, |n|, scale_floor).
GradientReport finite_difference_check(const Objective& objective, std::span<const double> x, double h = 1e-6,
                                       double tolerance = 1e-5, double scale_floor = 1e-3);

}  // namespace ldm
