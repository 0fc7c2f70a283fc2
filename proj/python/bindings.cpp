#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "kenn/checkpoint.hpp"
#include "kenn/config.hpp"
#include "kenn/enhancer.hpp"
#include "kenn/trainer.hpp"

namespace py = pybind11;
using namespace kenn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array, got " + std::to_string(a.ndim()) + " dims");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Tensor(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Tensor& t) {
    Array out({t.rows(), t.cols()});
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

std::vector<Edge> to_edges(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.size() == 0) return {};
    if (a.ndim() != 2 || a.shape(1) != 2) throw ShapeError("edges must have shape (n, 2)");
    std::vector<Edge> edges;
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        const auto s = a.at(i, 0);
        const auto d = a.at(i, 1);
        if (s < 0 || d < 0) throw IndexError("negative edge endpoint");
        edges.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(d)});
    }
    return edges;
}

py::array_t<std::int64_t> from_edges(const std::vector<Edge>& edges) {
    py::array_t<std::int64_t> out({static_cast<py::ssize_t>(edges.size()), py::ssize_t{2}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        m(i, 0) = static_cast<std::int64_t>(edges[i].src);
        m(i, 1) = static_cast<std::int64_t>(edges[i].dst);
    }
    return out;
}

py::dict run_to_dict(const RunResult& r) {
    py::dict d;
    d["seed"] = r.seed;
    d["fraction"] = r.fraction;
    d["mode"] = std::string(to_string(r.mode));
    d["layers"] = r.layers;
    d["accuracy_nn"] = r.accuracy_nn;
    d["accuracy_kenn"] = r.accuracy_kenn;
    d["improvement"] = r.improvement;
    d["clause_weights"] = r.clause_weights;
    d["train_time_s"] = r.train_time_s;
    return d;
}

nlohmann::json to_json(const py::handle& obj) {
    const auto dumps = py::module_::import("json").attr("dumps");
    return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object from_json(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json checked_config(const py::dict& config, const std::filesystem::path& base_dir) {
    const ConfigCheck check = normalize_config(to_json(config), base_dir);
    if (!check.ok()) {
        std::string msg = "invalid config:";
        for (const auto& e : check.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return check.normalized;
}

}  // namespace

PYBIND11_MODULE(_kenn, m) {
    m.doc() = "Knowledge enhanced neural networks";
    m.attr("__version__") = KENN_VERSION;

    // Translators run newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<IndexError>(m, "IndexError", PyExc_IndexError);

    py::class_<Knowledge>(m, "Knowledge")
        .def_property_readonly("clauses",
                               [](const Knowledge& k) {
                                   std::vector<std::string> out;
                                   for (const auto& c : k.clauses) out.push_back(canonical_string(c));
                                   return out;
                               })
        .def_property_readonly("unary_predicates", [](const Knowledge& k) { return k.catalog.unary(); })
        .def_property_readonly("binary_predicates", [](const Knowledge& k) { return k.catalog.binary(); })
        .def_readonly("unary_clauses", &Knowledge::unary_clauses)
        .def_readonly("binary_clauses", &Knowledge::binary_clauses)
        .def("__len__", [](const Knowledge& k) { return k.clauses.size(); });

    m.def("parse_knowledge",
          [](const std::string& text, const std::vector<std::string>& unary,
             const std::vector<std::string>& binary, double init) {
              return parse_knowledge(text, unary, binary, init);
          },
          py::arg("text"), py::arg("unary"), py::arg("binary") = std::vector<std::string>{},
          py::arg("learnable_init") = kDefaultClauseWeightInit);
    m.def("homophily_knowledge",
          [](const std::vector<std::string>& unary, const std::vector<std::string>& binary) {
              return homophily_knowledge(Catalog(unary, binary));
          },
          py::arg("unary"), py::arg("binary"));
    m.def("grounding_count",
          [](const Knowledge& k, std::size_t constants, std::size_t edges) {
              const auto c = grounding_count(k, constants, edges);
              return py::make_tuple(c.unary, c.binary);
          },
          py::arg("knowledge"), py::arg("constants"), py::arg("edges"));

    m.def("boost_soft", [](const std::vector<double>& z, double t) { return boost_soft(z, t); },
          py::arg("z"), py::arg("temperature") = 1.0);
    m.def("boost_hard", [](const std::vector<double>& z) { return boost_hard(z); }, py::arg("z"));

    m.def("ke_forward",
          [](const Knowledge& k, const Array& z_u, const std::vector<double>& w, double t) {
              return to_array(ke_forward_unary(k, to_tensor(z_u), w, t));
          },
          py::arg("knowledge"), py::arg("z_unary"), py::arg("weights"), py::arg("temperature") = 1.0,
          "Residues of the unary clauses (not added to the input).");
    m.def("rke_forward",
          [](const Knowledge& k, const Array& z_u, const Array& z_b, const py::array& edges,
             const std::vector<double>& w, double t, bool brute_force) {
              const Tensor zu = to_tensor(z_u);
              const Tensor zb = to_tensor(z_b);
              const auto e = to_edges(edges);
              const auto [u, b] = brute_force
                                      ? rke_forward_bruteforce(k, zu, zb, e, w, BoostMode::Soft, t)
                                      : rke_forward(k, build_grounding_index(k, zu.rows(), e), zu, zb, w, t);
              return py::make_tuple(to_array(u), to_array(b));
          },
          py::arg("knowledge"), py::arg("z_unary"), py::arg("z_binary"), py::arg("edges"),
          py::arg("weights"), py::arg("temperature") = 1.0, py::arg("brute_force") = false,
          "One relational enhancer layer; returns the updated (z_unary, z_binary).");

    py::class_<GraphData>(m, "Graph")
        .def(py::init([](const std::vector<std::string>& unary, const std::vector<std::string>& binary,
                         const Array& features, const Array& labels, const py::array& edges,
                         std::optional<Array> binary_given) {
                 GraphData g;
                 g.catalog = Catalog(unary, binary);
                 g.features = to_tensor(features);
                 g.labels = to_tensor(labels);
                 g.edges = to_edges(edges);
                 g.binary_given = binary_given ? to_tensor(*binary_given)
                                               : Tensor(g.edges.size(), binary.size(), 1.0);
                 for (std::size_t i = 0; i < g.num_constants(); ++i) g.node_ids.push_back(std::to_string(i));
                 g.validate();
                 return g;
             }),
             py::arg("unary"), py::arg("binary"), py::arg("features"), py::arg("labels"), py::arg("edges"),
             py::arg("binary_given") = py::none())
        .def_property_readonly("features", [](const GraphData& g) { return to_array(g.features); })
        .def_property_readonly("labels", [](const GraphData& g) { return to_array(g.labels); })
        .def_property_readonly("edges", [](const GraphData& g) { return from_edges(g.edges); })
        .def_property_readonly("unary_predicates", [](const GraphData& g) { return g.catalog.unary(); })
        .def_property_readonly("binary_predicates", [](const GraphData& g) { return g.catalog.binary(); })
        .def_property_readonly("num_constants", &GraphData::num_constants)
        .def_property_readonly("num_edges", &GraphData::num_edges);

    m.def("synthetic_graph",
          [](std::size_t nodes, std::size_t classes, std::size_t feat_dim, double p_in, double p_out,
             std::uint64_t seed, std::size_t words_per_class) {
              SynthParams p;
              p.nodes = nodes;
              p.classes = classes;
              p.feat_dim = feat_dim;
              p.p_in = p_in;
              p.p_out = p_out;
              p.seed = seed;
              p.words_per_class = words_per_class;
              return synth_citation_graph(p);
          },
          py::arg("nodes") = SynthParams{}.nodes, py::arg("classes") = SynthParams{}.classes,
          py::arg("feat_dim") = SynthParams{}.feat_dim, py::arg("p_in") = SynthParams{}.p_in,
          py::arg("p_out") = SynthParams{}.p_out, py::arg("seed") = 0,
          py::arg("words_per_class") = SynthParams{}.words_per_class);
    m.def("load_graph",
          [](const std::filesystem::path& nodes, const std::filesystem::path& edges,
             const std::vector<std::string>& unary, const std::vector<std::string>& binary, bool symmetrize) {
              LoadOptions o;
              o.symmetrize = symmetrize;
              return load_graph(nodes, edges, Catalog(unary, binary), o);
          },
          py::arg("nodes"), py::arg("edges"), py::arg("unary"), py::arg("binary"), py::arg("symmetrize") = false);

    py::class_<KennModel>(m, "Model")
        .def_property_readonly("layers", [](const KennModel& k) { return k.spec().ke_layers; })
        .def_property_readonly("clause_weights", &KennModel::effective_weights)
        .def("predict", [](const KennModel& k, const GraphData& g) { return to_array(k.predict(g)); })
        .def("save", [](const KennModel& k, const std::filesystem::path& p) { save_checkpoint(k, p); })
        .def("weight_report", [](const KennModel& k) { return from_json(weight_report(k)); });
    m.def("load_model", &load_checkpoint, py::arg("path"));

    m.def("train",
          [](const Knowledge& k, const GraphData& g, const std::vector<std::size_t>& rows, std::size_t layers,
             std::size_t epochs, double lr, std::vector<std::size_t> hidden, std::uint64_t seed) {
              TrainConfig c;
              c.ke_layers = layers;
              c.epochs = epochs;
              c.optimizer.lr = lr;
              c.hidden = std::move(hidden);
              py::gil_scoped_release release;
              return train_on(c, k, g, rows, seed).model;
          },
          py::arg("knowledge"), py::arg("graph"), py::arg("rows"), py::arg("layers") = 3,
          py::arg("epochs") = 300, py::arg("lr") = 1e-3,
          py::arg("hidden") = std::vector<std::size_t>{50, 50, 50}, py::arg("seed") = 0,
          "Trains on the constants in `rows` of `graph`.");
    m.def("accuracy",
          [](const Array& pred, const Array& labels, const std::vector<std::size_t>& rows) {
              return accuracy(to_tensor(pred), to_tensor(labels), rows);
          },
          py::arg("predictions"), py::arg("labels"), py::arg("rows"));

    m.def("normalize_config",
          [](const py::dict& config, const std::filesystem::path& base_dir) {
              const ConfigCheck c = normalize_config(to_json(config), base_dir);
              return py::make_tuple(from_json(c.normalized), c.errors);
          },
          py::arg("config"), py::arg("base_dir") = std::filesystem::path("."),
          "Returns (normalized, errors).");
    m.def("run_experiment",
          [](const py::dict& config, const std::filesystem::path& base_dir) {
              const Setup s = load_setup(checked_config(config, base_dir));
              ExperimentTable t;
              {
                  py::gil_scoped_release release;
                  t = run_experiment(s.experiment, s.knowledge, s.data);
              }
              py::list runs;
              for (const auto& r : t.runs) runs.append(run_to_dict(r));
              return py::make_tuple(runs, t.failures);
          },
          py::arg("config"), py::arg("base_dir") = std::filesystem::path("."),
          "Runs the configured grid; returns (runs, failures).");

    m.def("run_cli",
          [](const std::vector<std::string>& args) {
              std::ostringstream out, err;
              int code = 0;
              {
                  py::gil_scoped_release release;
                  code = cli::run(args, out, err);
              }
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"), "Runs the command-line tool; returns (exit_code, stdout, stderr).");
}
