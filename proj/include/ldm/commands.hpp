#pragma once
// Library side of the command-line tool. Each command takes document text
// and returns document text, so tests can reproduce any CLI run without
// spawning a process.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldm/compiler.hpp"
#include "ldm/soft.hpp"

namespace ldm {

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<double> values;  // row-major
  std::size_t rows() const { return header.empty() ? 0 : values.size() / header.size(); }
  std::size_t cols() const { return header.size(); }
};

/// Header line plus numeric rows. Throws InputError naming the row (0-based)
/// for NaN or unparsable cells and ragged rows.
CsvTable parse_csv(std::string_view text);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
std::string format_value(const LeafValue& v);

// ---------------------------------------------------------------------------
// Commands

struct CompileOutput {
  DecisionMachine machine;
  std::string machine_json;
  std::string summary;
  std::vector<std::string> warnings;
};

CompileOutput compile_command(std::string_view tree_json, ExpansionMode mode = ExpansionMode::Lagrange);

enum class PredictMode { Exact, Delta, Soft };
PredictMode parse_predict_mode(const std::string& name);

/// CSV "row,leaf,value" with 0-based row and 1-based leaf numbers.
std::string predict_command(const DecisionMachine& machine, std::string_view csv, PredictMode mode,
                            const SoftConfig& soft = {}, unsigned threads = 1);

/// StructureReport plus reconstruction, as JSON (1-based rows/columns).
std::string analyze_command(const DecisionMachine& machine);

/// "row,leaf,value,w1..wL": soft decision, soft prediction and softmax weights.
std::string soften_command(const DecisionMachine& machine, std::string_view csv, const SoftConfig& soft);

/// "row,value,w1..wn" for a selection-prediction model.
std::string soften_sp_command(const SelectionPredictionModel& model, std::string_view csv);

/// Seeded rows of raw features for a machine: thresholds' grid values and
/// uniform reals in [-5, 5]; categorical inputs draw from their domains.
std::vector<double> random_rows(const DecisionMachine& machine, std::size_t rows, std::uint64_t seed);

struct BenchTiming {
  std::string method;
  double seconds = 0.0;  // best of reps
  double rows_per_second = 0.0;
};

struct BenchReport {
  std::size_t rows = 0;
  std::size_t reps = 0;
  std::vector<std::size_t> leaves;  // agreed sequence, 0-based
  std::vector<BenchTiming> timings;
  std::string to_json() const;
};

/// Times per-row traversal (when a source tree is given), per-row decide and
/// batched decoding. Throws InvariantError carrying the first failing row if
/// the three leaf sequences differ.
BenchReport bench_command(const DecisionMachine& machine, const DecisionTree* source, std::size_t rows,
                          std::size_t reps, std::uint64_t seed, unsigned threads = 1);

}  // namespace ldm
