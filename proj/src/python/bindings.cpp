#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "scalenet/error.hpp"
#include "scalenet/graph_data.hpp"
#include "scalenet/models.hpp"
#include "scalenet/random.hpp"
#include "scalenet/scales.hpp"
#include "scalenet/training.hpp"
#include "scalenet/wilcoxon.hpp"

namespace py = pybind11;
using namespace scalenet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(std::size_t rows, std::size_t cols, const std::vector<double>& data) {
  Array out({rows, cols});
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

std::span<const double> as_span(const Array& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

Matrix matrix_from(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()));
}

}  // namespace

PYBIND11_MODULE(_scalenet, m) {
  m.doc() = "Multi-scale directed graph learning: sparse scales, models, training.";
  m.attr("__version__") = cli::kToolVersion;

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::class_<SparseMatrix>(m, "SparseMatrix")
      .def_static("from_edges",
                  [](std::size_t n, const std::vector<std::pair<Index, Index>>& edges) {
                    return SparseMatrix::from_edges(n, edges);
                  },
                  py::arg("n"), py::arg("edges"))
      .def_static("from_dense",
                  [](const Array& a) {
                    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
                    return SparseMatrix::from_dense(a.shape(0), a.shape(1), as_span(a));
                  })
      .def_static("identity", &SparseMatrix::identity)
      .def_property_readonly("shape", [](const SparseMatrix& s) { return py::make_tuple(s.n_rows(), s.n_cols()); })
      .def_property_readonly("nnz", &SparseMatrix::nnz)
      .def_property_readonly("indptr", [](const SparseMatrix& s) {
        auto o = s.row_offsets();
        return std::vector<std::size_t>(o.begin(), o.end());
      })
      .def_property_readonly("indices", [](const SparseMatrix& s) {
        auto c = s.col_indices();
        return std::vector<Index>(c.begin(), c.end());
      })
      .def_property_readonly("data", [](const SparseMatrix& s) {
        auto v = s.values();
        return std::vector<double>(v.begin(), v.end());
      })
      .def("to_dense", [](const SparseMatrix& s) { return to_numpy(s.n_rows(), s.n_cols(), s.to_dense()); })
      .def("pattern", &SparseMatrix::pattern)
      .def("transpose", [](const SparseMatrix& s) { return transpose(s); })
      .def("__matmul__", [](const SparseMatrix& a, const SparseMatrix& b) { return spgemm(a, b); })
      .def("__eq__", [](const SparseMatrix& a, const SparseMatrix& b) { return a == b; })
      .def("to_matrix_market", [](const SparseMatrix& s) {
        std::ostringstream out;
        write_matrix_market(out, s);
        return out.str();
      })
      .def("__repr__", [](const SparseMatrix& s) {
        return "<SparseMatrix " + std::to_string(s.n_rows()) + "x" + std::to_string(s.n_cols()) +
               " nnz=" + std::to_string(s.nnz()) + ">";
      });

  m.def("spgemm", [](const SparseMatrix& a, const SparseMatrix& b, bool pattern) {
    return spgemm(a, b, pattern ? Semiring::pattern : Semiring::counted);
  }, py::arg("a"), py::arg("b"), py::arg("pattern") = false);
  m.def("pattern_union", &pattern_union);
  m.def("pattern_intersection", &pattern_intersection);
  m.def("pattern_difference", &pattern_difference);
  m.def("apply_selfloop_mode", [](const SparseMatrix& s, const std::string& mode) {
    return apply_selfloop_mode(s, parse_selfloop_mode(mode));
  });
  m.def("sym_normalize", [](const SparseMatrix& s, const std::string& mode) {
    return sym_normalize(s, parse_selfloop_mode(mode));
  }, py::arg("s"), py::arg("selfloops") = "keep");
  m.def("degrees", [](const SparseMatrix& s, const std::string& axis) {
    if (axis != "row" && axis != "col") throw std::invalid_argument("axis must be row or col");
    return degrees(s, axis == "row" ? Axis::row : Axis::col);
  }, py::arg("s"), py::arg("axis") = "row");

  m.def("build_scaled_adjacency", [](const SparseMatrix& a, const std::string& word, const std::string& mode) {
    return build_scaled_adjacency(a, ScaleSpec::parse(word, parse_selfloop_mode(mode))).matrix;
  }, py::arg("adjacency"), py::arg("word"), py::arg("selfloops") = "keep");
  m.def("proximity_matrix", [](const SparseMatrix& a, std::size_t k, const std::string& combine, bool prune) {
    return proximity_matrix(a, k, parse_combine(combine), prune);
  }, py::arg("adjacency"), py::arg("k"), py::arg("combine") = "intersect", py::arg("prune") = true);
  m.def("remove_shared_edges", [](const SparseMatrix& s, const std::vector<SparseMatrix>& bases) {
    return remove_shared_edges(s, bases);
  });

  py::class_<Split>(m, "Split")
      .def(py::init<>())
      .def(py::init([](std::vector<std::size_t> train, std::vector<std::size_t> val, std::vector<std::size_t> test) {
        return Split{std::move(train), std::move(val), std::move(test)};
      }), py::arg("train"), py::arg("val"), py::arg("test"))
      .def_readwrite("train", &Split::train)
      .def_readwrite("val", &Split::val)
      .def_readwrite("test", &Split::test);

  py::class_<DirectedGraph>(m, "Graph")
      .def(py::init([](const SparseMatrix& adjacency, const Array& features, std::vector<int> labels,
                       std::size_t num_classes) {
        DirectedGraph g{adjacency, matrix_from(features), std::move(labels), num_classes};
        g.validate();
        return g;
      }), py::arg("adjacency"), py::arg("features"), py::arg("labels"), py::arg("num_classes"))
      .def_readonly("adjacency", &DirectedGraph::adjacency)
      .def_property_readonly("features", [](const DirectedGraph& g) {
        const auto d = g.features.data();
        return to_numpy(g.features.rows(), g.features.cols(), {d.begin(), d.end()});
      })
      .def_readonly("labels", &DirectedGraph::labels)
      .def_readonly("num_classes", &DirectedGraph::num_classes)
      .def_property_readonly("num_nodes", &DirectedGraph::num_nodes);

  m.def("load_dataset", [](const std::string& dir) {
    auto data = load_dataset(DatasetPaths::in_directory(dir));
    return py::make_tuple(std::move(data.graph), std::move(data.splits.splits));
  }, py::arg("directory"));

  m.def("generate_dsbm",
        [](std::size_t nodes, std::size_t classes, double p_in, double p_out, std::size_t class_offset,
           double receiver_fraction, double feature_noise, std::uint64_t seed) {
          DsbmParams p;
          p.num_nodes = nodes;
          p.num_classes = classes;
          p.p_in = p_in;
          p.p_out = p_out;
          p.profile.class_offset = class_offset;
          p.profile.receiver_fraction = receiver_fraction;
          p.feature_noise = feature_noise;
          p.seed = seed;
          return generate_dsbm(p);
        },
        py::arg("nodes") = 300, py::arg("classes") = 5, py::arg("p_in") = 0.05, py::arg("p_out") = 0.005,
        py::arg("class_offset") = 0, py::arg("receiver_fraction") = 1.0, py::arg("feature_noise") = 1.0,
        py::arg("seed") = 0);

  m.def("make_random_splits",
        [](const DirectedGraph& g, std::size_t count, double train_fraction, double val_fraction,
           std::uint64_t seed) {
          return make_random_splits(g.labels, g.num_classes, count, train_fraction, val_fraction, seed).splits;
        },
        py::arg("graph"), py::arg("count") = 1, py::arg("train_fraction") = 0.6,
        py::arg("val_fraction") = 0.2, py::arg("seed") = 0);

  m.def("_stats", [](const DirectedGraph& g, const Split& split) {
    return stats_to_json(compute_stats(g, split));
  });

  m.def("_train", [](const DirectedGraph& g, const Split& split, const std::string& config,
                     const std::string& hyper, std::uint64_t seed) {
    const auto cfg = ModelConfig::from_json(nlohmann::json::parse(config));
    cfg.validate();
    auto h = TrainHyper::from_json(nlohmann::json::parse(hyper));
    h.seed = seed;
    py::gil_scoped_release release;
    auto model = build_model(cfg, g, derive_seed(seed, 1));
    return train(*model, g, split, h).to_json(true).dump();
  });

  m.def("_cross_validate", [](const DirectedGraph& g, const std::vector<Split>& splits,
                              const std::string& config, const std::string& hyper, std::uint64_t seed,
                              std::size_t threads) {
    const auto cfg = ModelConfig::from_json(nlohmann::json::parse(config));
    cfg.validate();
    const auto h = TrainHyper::from_json(nlohmann::json::parse(hyper));
    py::gil_scoped_release release;
    return cross_validate(cfg, g, SplitSet{splits}, {seed}, h, threads).to_json().dump();
  });

  m.def("_default_config", [] { return ModelConfig{}.to_json().dump(); });
  m.def("_default_hyper", [] { return TrainHyper{}.to_json().dump(); });

  m.def("_wilcoxon", [](const std::vector<double>& xs, const std::vector<double>& ys) {
    return wilcoxon_signed_rank(xs, ys).to_json().dump();
  });

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "scalenet");
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command-line tool in-process. Returns (exit_code, stdout, stderr).");
}
