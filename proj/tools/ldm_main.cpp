// ldm: compile decision trees into logical decision machines and evaluate,
// analyze, soften or benchmark them.
//
// Exit codes: 0 success, 1 internal invariant tripwire, 2 user input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ldm/analysis.hpp"
#include "ldm/commands.hpp"
#include "ldm/errors.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ldm::InputError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ldm::InputError("cannot write '" + out_path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

ldm::DecisionMachine load_machine(const std::string& path) { return ldm::parse_machine(read_file(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logical decision machines: compile, predict, analyze, soften, bench"};
  app.require_subcommand(1);

  std::string out_path;
  std::string activation = "satlin";
  double epsilon = 1.0;
  double tau = 1.0;
  unsigned threads = 1;

  // compile
  std::string tree_path, categorical = "lagrange";
  auto* compile = app.add_subcommand("compile", "Compile a tree JSON into a machine JSON");
  compile->add_option("tree", tree_path, "Tree document")->required()->check(CLI::ExistingFile);
  compile->add_option("--categorical", categorical, "Categorical expansion: lagrange | dummy");
  compile->add_option("--out", out_path, "Output path (default stdout)");

  // predict
  std::string machine_path, data_path, mode = "exact";
  auto* predict = app.add_subcommand("predict", "Predict every CSV row with a machine");
  predict->add_option("machine", machine_path, "Machine document")->required()->check(CLI::ExistingFile);
  predict->add_option("data", data_path, "CSV with a header row")->required()->check(CLI::ExistingFile);
  predict->add_option("--mode", mode, "exact | delta | soft");
  predict->add_option("--activation", activation, "Soft activation: sign | satlin | tanh");
  predict->add_option("--epsilon", epsilon, "Saturated-linear gap width");
  predict->add_option("--tau", tau, "Softmax temperature");
  predict->add_option("--threads", threads, "Worker threads for batch evaluation");
  predict->add_option("--out", out_path, "Output path (default stdout)");

  // analyze
  std::string skeleton_out;
  auto* analyze = app.add_subcommand("analyze", "Audit the template matrix and reconstruct the tree shape");
  analyze->add_option("machine", machine_path, "Machine document")->required()->check(CLI::ExistingFile);
  analyze->add_option("--tree-out", skeleton_out, "Also write the reconstructed skeleton here");
  analyze->add_option("--out", out_path, "Output path (default stdout)");

  // soften
  std::string sp_path, kernel;
  std::vector<std::string> soften_inputs;
  auto* soften = app.add_subcommand("soften", "Soft evaluation of a machine or a selection-prediction model");
  soften->add_option("inputs", soften_inputs, "[machine] data: machine document (omit with --sp-model) and CSV")
      ->required()
      ->expected(1, 2)
      ->check(CLI::ExistingFile);
  soften->add_option("--sp-model", sp_path, "Selection-prediction model JSON")->check(CLI::ExistingFile);
  soften->add_option("--kernel", kernel, "Override the model kernel");
  soften->add_option("--activation", activation, "sign | satlin | tanh");
  soften->add_option("--epsilon", epsilon, "Saturated-linear gap width");
  soften->add_option("--tau", tau, "Softmax temperature");
  soften->add_option("--out", out_path, "Output path (default stdout)");

  // bench
  std::size_t rows = 10000, reps = 3;
  std::uint64_t seed = 0;
  auto* bench = app.add_subcommand("bench", "Cross-check and time traversal, decide and batch decoding");
  bench->add_option("machine", machine_path, "Machine document")->required()->check(CLI::ExistingFile);
  bench->add_option("--tree", tree_path, "Source tree for the traversal path")->check(CLI::ExistingFile);
  bench->add_option("--rows", rows, "Number of random rows");
  bench->add_option("--reps", reps, "Repetitions per method (best time reported)");
  bench->add_option("--seed", seed, "Data seed");
  bench->add_option("--threads", threads, "Worker threads for batch evaluation");
  bench->add_option("--out", out_path, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const ldm::SoftConfig soft{ldm::parse_activation(activation), epsilon, tau};

    if (*compile) {
      const auto expansion = categorical == "dummy"      ? ldm::ExpansionMode::Dummy
                             : categorical == "lagrange" ? ldm::ExpansionMode::Lagrange
                                                         : throw ldm::InputError("unknown --categorical mode");
      const auto result = ldm::compile_command(read_file(tree_path), expansion);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      std::cerr << result.summary << '\n';
      emit(result.machine_json, out_path);
    } else if (*predict) {
      const auto machine = load_machine(machine_path);
      emit(ldm::predict_command(machine, read_file(data_path), ldm::parse_predict_mode(mode), soft, threads),
           out_path);
    } else if (*analyze) {
      const auto machine = load_machine(machine_path);
      emit(ldm::analyze_command(machine), out_path);
      if (!skeleton_out.empty()) {
        try {
          emit(ldm::skeleton_json(ldm::reconstruct(machine.B)), skeleton_out);
        } catch (const ldm::InputError& e) {
          std::cerr << "warning: no skeleton written: " << e.what() << '\n';
        }
      }
    } else if (*soften) {
      data_path = soften_inputs.back();
      if (soften_inputs.size() == 2) machine_path = soften_inputs.front();
      if (!sp_path.empty()) {
        if (!machine_path.empty()) throw ldm::InputError("soften takes either a machine or --sp-model, not both");
        const auto base = std::filesystem::path(sp_path).parent_path();
        auto model = ldm::parse_sp_model(read_file(sp_path), [&](const std::string& p) {
          const std::filesystem::path path(p);
          return load_machine(path.is_absolute() ? p : (base / path).string());
        });
        if (!kernel.empty()) model.kernel = ldm::parse_kernel(kernel);
        if (soften->count("--tau")) model.tau = tau;
        emit(ldm::soften_sp_command(model, read_file(data_path)), out_path);
      } else {
        if (machine_path.empty()) throw ldm::InputError("soften needs a machine or --sp-model");
        emit(ldm::soften_command(load_machine(machine_path), read_file(data_path), soft), out_path);
      }
    } else if (*bench) {
      const auto machine = load_machine(machine_path);
      std::optional<ldm::DecisionTree> tree;
      if (!tree_path.empty()) tree = ldm::parse_tree(read_file(tree_path));
      const auto report = ldm::bench_command(machine, tree ? &*tree : nullptr, rows, reps, seed, threads);
      emit(report.to_json(), out_path);
    }
  } catch (const ldm::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ldm::InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
