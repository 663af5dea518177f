#include "ldm/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "ldm/analysis.hpp"
#include "ldm/errors.hpp"
#include "ldm/inference.hpp"
#include "ldm/random.hpp"

namespace ldm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  std::ptrdiff_t row = -1;  // -1 = header
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) {
      if (end >= text.size()) break;
      continue;
    }
    const auto cells = split(line);
    if (row < 0) {
      for (auto c : cells) table.header.emplace_back(c);
      row = 0;
      continue;
    }
    const std::string where = "row " + std::to_string(row);
    if (cells.size() != table.header.size())
      throw InputError(where + ": has " + std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(table.header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string_view cell = cells[c];
      double v = 0.0;
      const char* first = cell.data();
      if (!cell.empty() && cell.front() == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw InputError(where + ", column '" + table.header[c] + "': not a number: '" + std::string(cell) + "'");
      if (std::isnan(v)) throw InputError(where + ", column '" + table.header[c] + "': NaN cell");
      table.values.push_back(v);
    }
    ++row;
    if (end >= text.size()) break;
  }
  if (table.header.empty()) throw InputError("CSV has no header line");
  return table;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_value(const LeafValue& v) {
  return v.tag == ValueTag::Real ? format_double(v.real) : std::to_string(v.id);
}

// ---------------------------------------------------------------------------
// compile

CompileOutput compile_command(std::string_view tree_json, ExpansionMode mode) {
  const DecisionTree tree = parse_tree(tree_json);
  CompileOutput out;
  out.machine = compile(expand_categorical(tree, mode));
  out.machine_json = serialize_machine(out.machine);
  if (out.machine.degenerate())
    out.warnings.push_back("single-leaf tree: degenerate machine with no tests, every input predicts the sole value");

  std::ostringstream s;
  s << "L = " << out.machine.leaf_count() << ", n = " << out.machine.n;
  if (!out.machine.transform.empty()) s << " (" << out.machine.transform.input_features << " raw + "
                                        << out.machine.transform.pseudo.size() << " categorical indicators)";
  int lo = out.machine.row_norms.front(), hi = lo;
  long total = 0;
  for (int d : out.machine.row_norms) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    total += d;
  }
  s << ", leaf depth min/max/mean = " << lo << "/" << hi << "/"
    << format_double(static_cast<double>(total) / static_cast<double>(out.machine.leaf_count()));
  out.summary = s.str();
  return out;
}

// ---------------------------------------------------------------------------
// predict / soften

PredictMode parse_predict_mode(const std::string& name) {
  if (name == "exact") return PredictMode::Exact;
  if (name == "delta") return PredictMode::Delta;
  if (name == "soft") return PredictMode::Soft;
  throw InputError("unknown mode '" + name + "' (expected exact, delta or soft)");
}

namespace {

CsvTable load_rows(std::string_view csv, std::size_t expected) {
  CsvTable table = parse_csv(csv);
  if (table.cols() != expected)
    throw InputError("CSV has " + std::to_string(table.cols()) + " columns, the model expects " +
                     std::to_string(expected));
  return table;
}

template <typename Fn>
auto row_guard(std::size_t r, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    throw InputError("row " + std::to_string(r) + ": " + e.what());
  }
}

}  // namespace

std::string predict_command(const DecisionMachine& machine, std::string_view csv, PredictMode mode,
                            const SoftConfig& soft, unsigned threads) {
  const CsvTable table = load_rows(csv, static_cast<std::size_t>(machine.input_features()));
  const SampleMatrix X{table.values, table.cols()};
  std::ostringstream out;
  out << "row,leaf,value\n";
  switch (mode) {
    case PredictMode::Exact: {
      const BatchResult result = predict_batch(machine, X, threads);
      for (std::size_t r = 0; r < X.rows(); ++r)
        out << r << ',' << result.leaves[r] + 1 << ',' << format_value(result.values[r]) << '\n';
      break;
    }
    case PredictMode::Delta: {
      if (!machine.numeric()) throw InputError("delta mode requires real-valued leaves");
      for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto [leaf, value] = row_guard(r, [&] {
          return std::pair{decide(machine, X.row(r)), predict_delta(machine, X.row(r))};
        });
        out << r << ',' << leaf + 1 << ',' << format_value(value) << '\n';
      }
      break;
    }
    case PredictMode::Soft: {
      if (!machine.numeric()) throw InputError("soft mode requires real-valued leaves");
      soft.validate();
      for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto [leaf, value] = row_guard(r, [&] {
          return std::pair{soft_decide(machine, X.row(r), soft), soft_predict(machine, X.row(r), soft)};
        });
        out << r << ',' << leaf + 1 << ',' << format_double(value) << '\n';
      }
      break;
    }
  }
  return out.str();
}

std::string soften_command(const DecisionMachine& machine, std::string_view csv, const SoftConfig& soft) {
  if (!machine.numeric()) throw InputError("soft mode requires real-valued leaves");
  soft.validate();
  const CsvTable table = load_rows(csv, static_cast<std::size_t>(machine.input_features()));
  const SampleMatrix X{table.values, table.cols()};
  std::ostringstream out;
  out << "row,leaf,value";
  for (std::size_t i = 0; i < machine.leaf_count(); ++i) out << ",w" << i + 1;
  out << '\n';
  for (std::size_t r = 0; r < X.rows(); ++r) {
    row_guard(r, [&] {
      const auto x = X.row(r);
      const auto w = soft_weights(machine, x, soft);
      out << r << ',' << soft_decide(machine, x, soft) + 1 << ',' << format_double(soft_predict(machine, x, soft));
      for (double e : w) out << ',' << format_double(e);
      out << '\n';
      return 0;
    });
  }
  return out.str();
}

std::string soften_sp_command(const SelectionPredictionModel& model, std::string_view csv) {
  model.validate();
  const std::size_t width = model.machine ? static_cast<std::size_t>(model.machine->n) : model.keys.front().size();
  const CsvTable table = load_rows(csv, width);
  const SampleMatrix X{table.values, table.cols()};
  std::ostringstream out;
  out << "row,value";
  for (std::size_t i = 0; i < model.keys.size(); ++i) out << ",w" << i + 1;
  out << '\n';
  for (std::size_t r = 0; r < X.rows(); ++r) {
    row_guard(r, [&] {
      const auto w = sp_weights(model, X.row(r));
      out << r << ',' << format_double(sp_predict(model, X.row(r)));
      for (double e : w) out << ',' << format_double(e);
      out << '\n';
      return 0;
    });
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// analyze

std::string analyze_command(const DecisionMachine& machine) {
  const StructureReport r = audit(machine.B);
  json report;
  report["rows"] = machine.B.rows();
  report["cols"] = machine.B.cols();
  report["rows_distinct"] = r.rows_distinct;
  report["column_polarity_ok"] = r.column_polarity_ok;
  report["root_column"] = r.root_column ? json(*r.root_column + 1) : json(nullptr);
  report["zero_free_columns"] = r.zero_free_columns;
  report["per_leaf_depth"] = r.per_leaf_depth;
  report["trace_BBt"] = r.trace_BBt;
  report["max_row_nonzeros"] = r.max_row_nonzeros;
  report["rank"] = r.rank;
  report["full_column_rank"] = r.full_column_rank;
  json pairs = json::array();
  for (const auto& p : r.sibling_pairs)
    pairs.push_back({{"rows", {p.first + 1, p.second + 1}}, {"parent_column", p.parent_column + 1}});
  report["sibling_pairs"] = std::move(pairs);

  json doc;
  doc["report"] = std::move(report);
  json rec;
  try {
    rec["skeleton"] = json::parse(skeleton_json(reconstruct(machine.B)));
    rec["ok"] = true;
  } catch (const InputError& e) {
    rec["ok"] = false;
    rec["error"] = e.what();
  }
  doc["reconstruction"] = std::move(rec);
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// bench

std::vector<double> random_rows(const DecisionMachine& machine, std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  const auto width = static_cast<std::size_t>(machine.input_features());
  std::unordered_map<std::size_t, const std::vector<double>*> domains;
  for (const auto& p : machine.transform.pseudo) domains[static_cast<std::size_t>(p.source_feature)] = &p.domain;
  std::vector<double> X(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      double& cell = X[r * width + c];
      if (auto it = domains.find(c); it != domains.end()) {
        cell = (*it->second)[rng.below(it->second->size())];
      } else if (rng.bernoulli(0.5)) {
        cell = static_cast<double>(rng.range(-20, 20)) / 4.0;  // lands on thresholds often
      } else {
        cell = rng.uniform(-5.0, 5.0);
      }
    }
  }
  return X;
}

std::string BenchReport::to_json() const {
  json doc;
  doc["rows"] = rows;
  doc["reps"] = reps;
  doc["agree"] = true;
  json t = json::array();
  for (const auto& e : timings)
    t.push_back({{"method", e.method}, {"seconds", e.seconds}, {"rows_per_second", e.rows_per_second}});
  doc["timings"] = std::move(t);
  return doc.dump(2);
}

BenchReport bench_command(const DecisionMachine& machine, const DecisionTree* source, std::size_t rows,
                          std::size_t reps, std::uint64_t seed, unsigned threads) {
  if (rows < 1) throw InputError("bench: --rows must be >= 1");
  if (reps < 1) throw InputError("bench: --reps must be >= 1");
  if (source && source->feature_count() != machine.input_features())
    throw InputError("bench: source tree and machine disagree on the feature count");
  const auto data = random_rows(machine, rows, seed);
  const SampleMatrix X{data, static_cast<std::size_t>(machine.input_features())};

  using clock = std::chrono::steady_clock;
  auto time_best = [&](auto&& run) {
    double best = 1e300;
    for (std::size_t k = 0; k < reps; ++k) {
      const auto t0 = clock::now();
      run();
      best = std::min(best, std::chrono::duration<double>(clock::now() - t0).count());
    }
    return best;
  };

  BenchReport report;
  report.rows = rows;
  report.reps = reps;

  std::vector<std::size_t> traversal;
  if (source) {
    std::unordered_map<NodeId, std::size_t> row_of;
    for (std::size_t i = 0; i < machine.leaf_order.size(); ++i) row_of[machine.leaf_order[i]] = i;
    std::vector<std::size_t> arena(rows);
    const double s = time_best([&] {
      for (std::size_t r = 0; r < rows; ++r) arena[r] = traverse_leaf(*source, X.row(r));
    });
    traversal.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      auto it = row_of.find(source->node(arena[r]).id);
      if (it == row_of.end()) throw InvariantError("bench: source tree leaf is not part of the machine");
      traversal[r] = it->second;
    }
    report.timings.push_back({"traverse", s, static_cast<double>(rows) / s});
  }

  std::vector<std::size_t> decided(rows);
  const double s_decide = time_best([&] {
    for (std::size_t r = 0; r < rows; ++r) decided[r] = decide(machine, X.row(r));
  });
  report.timings.push_back({"decide", s_decide, static_cast<double>(rows) / s_decide});

  BatchResult batch;
  const double s_batch = time_best([&] { batch = predict_batch(machine, X, threads); });
  report.timings.push_back({"batch", s_batch, static_cast<double>(rows) / s_batch});

  for (std::size_t r = 0; r < rows; ++r) {
    const bool tripped = decided[r] != batch.leaves[r] || (source && traversal[r] != decided[r]);
    if (!tripped) continue;
    json row = json::array();
    for (double v : X.row(r)) row.push_back(v);
    throw InvariantError("bench: evaluation paths disagree at row " + std::to_string(r) + " x=" + row.dump() +
                         " decide=" + std::to_string(decided[r] + 1) +
                         " batch=" + std::to_string(batch.leaves[r] + 1) +
                         (source ? " traverse=" + std::to_string(traversal[r] + 1) : std::string()));
  }
  report.leaves = std::move(decided);
  return report;
}

}  // namespace ldm
