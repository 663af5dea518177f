#include "ldm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "ldm/errors.hpp"

namespace ldm {

TestResultVector sgn_modified(std::span<const double> z) {
  TestResultVector h(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::isnan(z[i])) throw InputError("undefined test result at test " + std::to_string(i));
    h[i] = z[i] > 0.0 ? 1 : -1;
  }
  return h;
}

SimilarityScore logical_similarity(std::span<const std::int8_t> b, int norm, std::span<const std::int8_t> h) {
  if (b.size() != h.size()) throw InputError("logical_similarity: length mismatch");
  if (norm < 1) throw InputError("logical_similarity: zero template row");
  std::int64_t dot = 0;
  for (std::size_t j = 0; j < b.size(); ++j) dot += b[j] * h[j];
  return {dot, norm};
}

std::vector<SimilarityScore> similarity_vector(const DecisionMachine& machine, std::span<const std::int8_t> h) {
  std::vector<SimilarityScore> scores;
  scores.reserve(machine.leaf_count());
  for (std::size_t i = 0; i < machine.B.rows(); ++i)
    scores.push_back(logical_similarity(machine.B.row(i), machine.row_norms[i], h));
  return scores;
}

std::size_t first_argmax(std::span<const SimilarityScore> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[best] < scores[i]) best = i;
  return best;
}

std::vector<double> prepare_input(const DecisionMachine& machine, std::span<const double> x) {
  if (!machine.transform.empty()) return machine.transform.apply(x);
  check_feature_vector(x, machine.n);
  return {x.begin(), x.end()};
}

namespace {

TestResultVector test_results(const DecisionMachine& machine, std::span<const double> x) {
  const auto input = prepare_input(machine, x);
  return sgn_modified(margins(machine, input));
}

}  // namespace

std::size_t decide(const DecisionMachine& machine, std::span<const double> x) {
  if (machine.degenerate()) {
    prepare_input(machine, x);
    return 0;
  }
  const auto h = test_results(machine, x);
  return first_argmax(similarity_vector(machine, h));
}

LeafValue predict(const DecisionMachine& machine, std::span<const double> x) { return machine.v[decide(machine, x)]; }

LeafValue predict_delta(const DecisionMachine& machine, std::span<const double> x) {
  if (!machine.numeric()) throw InputError("predict_delta requires real-valued leaves");
  if (machine.degenerate()) {
    prepare_input(machine, x);
    return machine.v[0];
  }
  const auto scores = similarity_vector(machine, test_results(machine, x));
  // Terms with delta = 0 contribute nothing; the sum starts at the first
  // selected term so a lone -0.0 leaf value survives.
  bool any = false;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i].is_one()) continue;
    total = any ? total + machine.v[i].real : machine.v[i].real;
    any = true;
  }
  if (!any) throw InvariantError("predict_delta: no template row reached similarity 1");
  return LeafValue::Real(total);
}

// ---------------------------------------------------------------------------
// Batch

namespace {

constexpr std::size_t kBlock = 256;

// Decodes samples [begin, end) into out slots.
void decode_range(const DecisionMachine& machine, SampleMatrix X, std::size_t begin, std::size_t end,
                  std::vector<std::size_t>& leaves) {
  const std::size_t tests = machine.test_count();
  const std::size_t L = machine.leaf_count();
  std::vector<std::int8_t> H(tests * kBlock);
  std::vector<std::int32_t> scores(L * kBlock);
  std::vector<double> expanded;

  for (std::size_t base = begin; base < end; base += kBlock) {
    const std::size_t width = std::min(kBlock, end - base);
    // H[j][s] = sgn(S_j x_s - t_j)
    for (std::size_t s = 0; s < width; ++s) {
      const std::size_t r = base + s;
      std::span<const double> x = X.row(r);
      try {
        if (!machine.transform.empty()) {
          expanded = machine.transform.apply(x);
          x = expanded;
        } else {
          check_feature_vector(x, machine.n);
        }
      } catch (const InputError& e) {
        throw InputError("row " + std::to_string(r) + ": " + e.what());
      }
      for (std::size_t j = 0; j < tests; ++j) {
        const double z = machine.S.row_dot(j, x) - machine.t[j];
        if (std::isnan(z)) throw InputError("row " + std::to_string(r) + ": undefined test result");
        H[j * kBlock + s] = z > 0.0 ? 1 : -1;
      }
    }
    // scores = B H
    std::fill(scores.begin(), scores.end(), 0);
    for (std::size_t i = 0; i < L; ++i) {
      std::int32_t* out = scores.data() + i * kBlock;
      const auto brow = machine.B.row(i);
      for (std::size_t j = 0; j < tests; ++j) {
        const std::int8_t b = brow[j];
        if (b == 0) continue;
        const std::int8_t* hrow = H.data() + j * kBlock;
        for (std::size_t s = 0; s < width; ++s) out[s] += b * hrow[s];
      }
    }
    // First argmax of scores[i][s] / row_norms[i], by cross-multiplication.
    for (std::size_t s = 0; s < width; ++s) {
      std::size_t best = 0;
      std::int64_t best_num = scores[s];
      std::int64_t best_den = machine.row_norms[0];
      for (std::size_t i = 1; i < L; ++i) {
        const std::int64_t num = scores[i * kBlock + s];
        const std::int64_t den = machine.row_norms[i];
        if (num * best_den > best_num * den) {
          best = i;
          best_num = num;
          best_den = den;
        }
      }
      leaves[base + s] = best;
    }
  }
}

}  // namespace

BatchResult predict_batch(const DecisionMachine& machine, SampleMatrix X, unsigned threads) {
  const std::size_t m = X.rows();
  if (X.cols != static_cast<std::size_t>(machine.input_features()) && m > 0)
    throw InputError("predict_batch: samples have " + std::to_string(X.cols) + " columns, expected " +
                     std::to_string(machine.input_features()));
  BatchResult out;
  out.leaves.assign(m, 0);
  if (m > 0 && !machine.degenerate()) {
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, (m + kBlock - 1) / kBlock);
    if (workers == 1) {
      decode_range(machine, X, 0, m, out.leaves);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> pool;
      const std::size_t chunk = (m + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(m, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
          try {
            decode_range(machine, X, begin, end, out.leaves);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      // Workers own ascending row ranges, so the first error is the lowest row.
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
  } else if (m > 0) {
    for (std::size_t r = 0; r < m; ++r) {
      try {
        prepare_input(machine, X.row(r));
      } catch (const InputError& e) {
        throw InputError("row " + std::to_string(r) + ": " + e.what());
      }
    }
  }
  out.values.reserve(m);
  for (std::size_t leaf : out.leaves) out.values.push_back(machine.v[leaf]);
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

double forest_predict(const Forest& forest, std::span<const double> x) {
  if (forest.trees.empty()) throw InputError("forest_predict: empty forest");
  if (forest.trees.size() != forest.weights.size()) throw InputError("forest_predict: weights/trees length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < forest.trees.size(); ++i) {
    if (!forest.trees[i].numeric()) throw InputError("forest_predict: member machines need real-valued leaves");
    const double value = predict(forest.trees[i], x).real;
    total = i == 0 ? forest.weights[i] * value : total + forest.weights[i] * value;
  }
  return total;
}

CombinedMachine combine_block(const DecisionMachine& m1, const DecisionMachine& m2, double w1, double w2) {
  if (m1.n != m2.n) throw InputError("combine_block: feature-count mismatch");
  if (!m1.transform.empty() || !m2.transform.empty())
    throw InputError("combine_block: expand categorical features before combining");
  if (!m1.numeric() || !m2.numeric()) throw InputError("combine_block: machines need real-valued leaves");

  CombinedMachine c;
  c.n = m1.n;
  c.S = SelectionMatrix(static_cast<std::size_t>(c.n));
  c.w1 = w1;
  c.w2 = w2;
  c.first_leaf_count = m1.leaf_count();
  for (const DecisionMachine* m : {&m1, &m2}) {
    for (std::size_t r = 0; r < m->S.rows(); ++r) {
      auto row = m->S.row(r);
      c.S.add_row({row.begin(), row.end()});
    }
    c.t.insert(c.t.end(), m->t.begin(), m->t.end());
    c.row_norms.insert(c.row_norms.end(), m->row_norms.begin(), m->row_norms.end());
    for (const LeafValue& v : m->v) c.v.push_back(v.real);
  }
  const std::size_t rows1 = m1.B.rows(), cols1 = m1.B.cols();
  c.B = TernaryMatrix(rows1 + m2.B.rows(), cols1 + m2.B.cols());
  for (std::size_t i = 0; i < rows1; ++i)
    for (std::size_t j = 0; j < cols1; ++j) c.B.set(i, j, m1.B(i, j));
  for (std::size_t i = 0; i < m2.B.rows(); ++i)
    for (std::size_t j = 0; j < m2.B.cols(); ++j) c.B.set(rows1 + i, cols1 + j, m2.B(i, j));
  return c;
}

double CombinedMachine::evaluate(std::span<const double> x) const {
  check_feature_vector(x, n);
  std::vector<double> z(t.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = S.row_dot(j, x) - t[j];
  const auto h = sgn_modified(z);
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < B.rows(); ++i) {
    // A zero-norm row only occurs for a single-leaf part, which always fires.
    const bool selected = row_norms[i] == 0 || logical_similarity(B.row(i), row_norms[i], h).is_one();
    if (!selected) continue;
    (i < first_leaf_count ? first : second) += v[i];
  }
  return w1 * first + w2 * second;
}

}  // namespace ldm
