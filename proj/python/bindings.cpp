#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "ldm/analysis.hpp"
#include "ldm/commands.hpp"
#include "ldm/compiler.hpp"
#include "ldm/errors.hpp"
#include "ldm/inference.hpp"
#include "ldm/soft.hpp"
#include "ldm/tree.hpp"

namespace py = pybind11;
using namespace ldm;

namespace {

py::object leaf_value(const LeafValue& v) {
  if (v.tag == ValueTag::Real) return py::float_(v.real);
  return py::int_(v.id);
}

std::vector<double> as_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw InputError("expected a 1-d feature vector");
  return {a.data(), a.data() + a.size()};
}

py::dict report_dict(const StructureReport& r) {
  py::dict d;
  d["rows_distinct"] = r.rows_distinct;
  d["column_polarity_ok"] = r.column_polarity_ok;
  d["root_column"] = r.root_column ? py::object(py::int_(*r.root_column)) : py::object(py::none());
  d["per_leaf_depth"] = r.per_leaf_depth;
  d["trace_BBt"] = r.trace_BBt;
  d["max_row_nonzeros"] = r.max_row_nonzeros;
  d["rank"] = r.rank;
  d["full_column_rank"] = r.full_column_rank;
  py::list pairs;
  for (const auto& p : r.sibling_pairs) pairs.append(py::make_tuple(p.first, p.second, p.parent_column));
  d["sibling_pairs"] = pairs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Logical decision machines: exact and soft matrix forms of binary decision trees";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::class_<DecisionTree>(m, "DecisionTree")
      .def_static("from_json", [](const std::string& s) { return parse_tree(s); })
      .def("to_json", [](const DecisionTree& t) { return serialize_tree(t); })
      .def_property_readonly("feature_count", &DecisionTree::feature_count)
      .def_property_readonly("leaf_count", &DecisionTree::leaf_count)
      .def_property_readonly("internal_count", &DecisionTree::internal_count)
      .def_property_readonly("depth", &DecisionTree::depth)
      .def("traverse", [](const DecisionTree& t, py::array_t<double> x) {
        const auto r = traverse(t, as_vector(x));
        return py::make_tuple(r.leaf_id, leaf_value(r.value));
      });

  m.def(
      "random_tree",
      [](std::uint64_t seed, int max_depth, int feature_count, const std::string& leaf_tag) {
        RandomTreeConfig c;
        c.max_depth = max_depth;
        c.feature_count = feature_count;
        c.leaf_tag = leaf_tag == "label" ? ValueTag::Label : ValueTag::Real;
        return random_tree(seed, c);
      },
      py::arg("seed"), py::arg("max_depth") = 4, py::arg("feature_count") = 4, py::arg("leaf_tag") = "real");

  py::class_<DecisionMachine, std::shared_ptr<DecisionMachine>>(m, "DecisionMachine")
      .def_static("from_json", [](const std::string& s) { return std::make_shared<DecisionMachine>(parse_machine(s)); })
      .def("to_json", [](const DecisionMachine& d) { return serialize_machine(d); })
      .def_readonly("n", &DecisionMachine::n)
      .def_readonly("t", &DecisionMachine::t)
      .def_readonly("row_norms", &DecisionMachine::row_norms)
      .def_readonly("test_order", &DecisionMachine::test_order)
      .def_readonly("leaf_order", &DecisionMachine::leaf_order)
      .def_property_readonly("leaf_count", &DecisionMachine::leaf_count)
      .def_property_readonly("B", [](const DecisionMachine& d) { return d.B.to_strings(); })
      .def_property_readonly("B_array",
                             [](const DecisionMachine& d) {
                               py::array_t<std::int8_t> a({d.B.rows(), d.B.cols()});
                               std::copy(d.B.data().begin(), d.B.data().end(), a.mutable_data());
                               return a;
                             })
      .def_property_readonly("S_array",
                             [](const DecisionMachine& d) {
                               py::array_t<double> a({d.S.rows(), static_cast<std::size_t>(d.n)});
                               std::fill(a.mutable_data(), a.mutable_data() + a.size(), 0.0);
                               auto u = a.mutable_unchecked<2>();
                               for (std::size_t r = 0; r < d.S.rows(); ++r)
                                 for (const auto& e : d.S.row(r)) u(r, e.col) += e.value;
                               return a;
                             })
      .def_property_readonly("v", [](const DecisionMachine& d) {
        py::list out;
        for (const auto& v : d.v) out.append(leaf_value(v));
        return out;
      });

  m.def(
      "compile",
      [](const DecisionTree& t, const std::string& mode) {
        const auto expansion = mode == "dummy" ? ExpansionMode::Dummy : ExpansionMode::Lagrange;
        return std::make_shared<DecisionMachine>(compile(expand_categorical(t, expansion)));
      },
      py::arg("tree"), py::arg("categorical") = "lagrange");

  m.def("sgn_modified", [](py::array_t<double> z) {
    const auto h = sgn_modified(as_vector(z));
    return std::vector<int>(h.begin(), h.end());
  });
  m.def("similarity_scores", [](const DecisionMachine& d, py::array_t<double> x) {
    const auto h = sgn_modified(margins(d, prepare_input(d, as_vector(x))));
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (const auto& s : similarity_vector(d, h)) out.emplace_back(s.numerator, s.denominator);
    return out;
  });
  m.def("margins", [](const DecisionMachine& d, py::array_t<double> x) {
    return margins(d, prepare_input(d, as_vector(x)));
  });
  m.def("decide", [](const DecisionMachine& d, py::array_t<double> x) { return decide(d, as_vector(x)); });
  m.def("predict", [](const DecisionMachine& d, py::array_t<double> x) { return leaf_value(predict(d, as_vector(x))); });
  m.def("predict_delta",
        [](const DecisionMachine& d, py::array_t<double> x) { return leaf_value(predict_delta(d, as_vector(x))); });
  m.def(
      "predict_batch",
      [](const DecisionMachine& d, py::array_t<double, py::array::c_style | py::array::forcecast> X, unsigned threads) {
        if (X.ndim() != 2) throw InputError("expected a 2-d sample matrix");
        const auto rows = static_cast<std::size_t>(X.shape(0)), cols = static_cast<std::size_t>(X.shape(1));
        BatchResult r;
        {
          py::gil_scoped_release release;
          r = predict_batch(d, SampleMatrix{{X.data(), rows * cols}, cols}, threads);
        }
        py::list values;
        for (const auto& v : r.values) values.append(leaf_value(v));
        return py::make_tuple(r.leaves, values);
      },
      py::arg("machine"), py::arg("X"), py::arg("threads") = 1);
  m.def("forest_predict", [](const std::vector<std::shared_ptr<DecisionMachine>>& trees,
                             const std::vector<double>& weights, py::array_t<double> x) {
    Forest f;
    for (const auto& t : trees) f.trees.push_back(*t);
    f.weights = weights;
    return forest_predict(f, as_vector(x));
  });
  m.def("combine_block_eval", [](const DecisionMachine& a, const DecisionMachine& b, double w1, double w2,
                                 py::array_t<double> x) { return combine_block(a, b, w1, w2).evaluate(as_vector(x)); });

  // Soft relaxations
  auto config = [](const std::string& activation, double epsilon, double tau) {
    return SoftConfig{parse_activation(activation), epsilon, tau};
  };
  m.def(
      "soft_scores",
      [config](const DecisionMachine& d, py::array_t<double> x, const std::string& a, double eps, double tau) {
        return soft_scores(d, as_vector(x), config(a, eps, tau));
      },
      py::arg("machine"), py::arg("x"), py::arg("activation") = "satlin", py::arg("epsilon") = 1.0,
      py::arg("tau") = 1.0);
  m.def(
      "soft_predict",
      [config](const DecisionMachine& d, py::array_t<double> x, const std::string& a, double eps, double tau) {
        return soft_predict(d, as_vector(x), config(a, eps, tau));
      },
      py::arg("machine"), py::arg("x"), py::arg("activation") = "satlin", py::arg("epsilon") = 1.0,
      py::arg("tau") = 1.0);
  m.def(
      "soft_predict_gradient",
      [config](const DecisionMachine& d, py::array_t<double> x, const std::string& a, double eps, double tau) {
        return soft_predict_gradient(d, as_vector(x), config(a, eps, tau));
      },
      py::arg("machine"), py::arg("x"), py::arg("activation") = "tanh", py::arg("epsilon") = 1.0,
      py::arg("tau") = 1.0);
  m.def(
      "attention_eval",
      [config](const DecisionMachine& d, py::array_t<double> x, const std::string& a, double eps, double tau) {
        return attention_eval(d, as_vector(x), config(a, eps, tau));
      },
      py::arg("machine"), py::arg("x"), py::arg("activation") = "satlin", py::arg("epsilon") = 1.0,
      py::arg("tau") = 1.0);
  m.def("hard_delta_predict", [](std::shared_ptr<DecisionMachine> d, py::array_t<double> x) {
    return sp_predict(hard_delta_model(d), as_vector(x));
  });

  // Analysis
  m.def("audit", [](const DecisionMachine& d) { return report_dict(audit(d.B)); });
  m.def("exact_rank", [](const DecisionMachine& d) { return exact_rank(d.B); });
  m.def("reconstruct", [](const DecisionMachine& d) { return skeleton_json(reconstruct(d.B)); });
  m.def("subtree_template", [](const DecisionMachine& d, std::size_t column, const std::string& side) {
    const auto sub = subtree_template(d.B, column, side == "right" ? Side::Right : Side::Left);
    return py::make_tuple(sub.matrix.to_strings(), sub.rows, sub.cols);
  });

  // Command layer
  m.def("analyze", [](const DecisionMachine& d) { return analyze_command(d); });
  m.def(
      "predict_csv",
      [](const DecisionMachine& d, const std::string& csv, const std::string& mode) {
        return predict_command(d, csv, parse_predict_mode(mode));
      },
      py::arg("machine"), py::arg("csv"), py::arg("mode") = "exact");
}
