#include "adafamily/dataset.hpp"
#include "adafamily/error.hpp"
#include "adafamily/harness.hpp"
#include "adafamily/optim.hpp"
#include "adafamily/problems.hpp"
#include "adafamily/table.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace adafam;

namespace {

// Mutable view of a float64 C-contiguous numpy array; no silent copies.
std::span<double> mutable_span(py::array& a, const char* name) {
    if (!a.dtype().is(py::dtype::of<double>()) || !(a.flags() & py::array::c_style) || !a.writeable() ||
        a.ndim() != 1) {
        throw py::type_error(std::string(name) + " must be a writeable 1-D float64 C-contiguous array");
    }
    return {static_cast<double*>(a.mutable_data()), static_cast<std::size_t>(a.size())};
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_numpy(std::span<const double> v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
    py::array_t<double> out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

std::optional<Batch> make_batch(const std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>>& x,
                                const std::optional<std::vector<int>>& y) {
    if (!x && !y) return std::nullopt;
    if (!x || !y) throw py::value_error("features and labels must be given together");
    return Batch{to_matrix(*x), *y};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "AdaFamily optimizers, desk-scale test problems and the benchmark harness";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NumericError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const Error& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::enum_<Algorithm>(m, "Algorithm")
        .value("AdaFamily", Algorithm::AdaFamily)
        .value("Adam", Algorithm::Adam)
        .value("AdamW", Algorithm::AdamW)
        .value("AdaBelief", Algorithm::AdaBelief)
        .value("AdaMomentum", Algorithm::AdaMomentum);

    py::enum_<DecayMode>(m, "DecayMode")
        .value("None_", DecayMode::None)
        .value("Coupled", DecayMode::Coupled)
        .value("Decoupled", DecayMode::Decoupled);

    py::class_<OptimizerConfig>(m, "OptimizerConfig")
        .def(py::init<>())
        .def_readwrite("algorithm", &OptimizerConfig::algorithm)
        .def_readwrite("mu", &OptimizerConfig::mu)
        .def_readwrite("alpha", &OptimizerConfig::alpha)
        .def_readwrite("beta1", &OptimizerConfig::beta1)
        .def_readwrite("beta2", &OptimizerConfig::beta2)
        .def_readwrite("epsilon", &OptimizerConfig::epsilon)
        .def_readwrite("weight_decay", &OptimizerConfig::weight_decay)
        .def_readwrite("decay_mode", &OptimizerConfig::decay_mode)
        .def("validate", &OptimizerConfig::validate)
        .def("__repr__", [](const OptimizerConfig& c) {
            return "<OptimizerConfig " + row_label(c) + " alpha=" + std::to_string(c.alpha) + ">";
        });

    m.def("normalization_factor", &normalization_factor, py::arg("mu"));
    m.def("default_optimizer", &default_optimizer, py::arg("algorithm"), py::arg("mu") = 0.0,
          "Config with the benchmark defaults (alpha 1e-3, weight decay 1e-4).");

    py::class_<OptimizerState>(m, "OptimizerState")
        .def(py::init<std::size_t>(), py::arg("dim"))
        .def_property_readonly("dim", &OptimizerState::dim)
        .def_property_readonly("step_count", &OptimizerState::step_count)
        .def_property_readonly("c", &OptimizerState::c)
        .def_property_readonly("m", [](const OptimizerState& s) { return to_numpy(s.m()); })
        .def_property_readonly("v", [](const OptimizerState& s) { return to_numpy(s.v()); })
        .def_property_readonly("auxiliary_reals", &OptimizerState::auxiliary_reals)
        .def("reset", &OptimizerState::reset);

    py::class_<Optimizer>(m, "Optimizer")
        .def(py::init<OptimizerConfig, std::size_t>(), py::arg("config"), py::arg("dim"))
        .def(
            "step",
            [](Optimizer& opt, py::array params, const py::array_t<double, py::array::c_style | py::array::forcecast>& grad,
               double lr_scale) {
                auto p = mutable_span(params, "params");
                const auto g = to_vector(grad);
                opt.step(p, g, lr_scale);
            },
            py::arg("params"), py::arg("grad"), py::arg("lr_scale") = 1.0,
            "Update params (float64 array) in place.")
        .def("reset", &Optimizer::reset)
        .def_property_readonly("config", &Optimizer::config)
        .def_property_readonly("state", py::overload_cast<>(&Optimizer::state, py::const_),
                               py::return_value_policy::copy);

    m.def("serialize_state", [](const OptimizerState& s) {
        const auto bytes = serialize_state(s);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });
    m.def("deserialize_state", [](const py::bytes& b) {
        const std::string s = b;
        return deserialize_state(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    });

    py::class_<Problem>(m, "Problem")
        .def_static("quadratic", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                                    const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return Problem::quadratic(to_matrix(a), to_vector(b));
        })
        .def_static("rosenbrock", &Problem::rosenbrock)
        .def_static("logistic_regression", &Problem::logistic_regression, py::arg("num_features"),
                    py::arg("num_classes"))
        .def_static("mlp1", &Problem::mlp1, py::arg("num_features"), py::arg("hidden"),
                    py::arg("num_classes"))
        .def_static("random_quadratic", &make_random_quadratic, py::arg("dim"), py::arg("condition"),
                    py::arg("seed"))
        .def_property_readonly("dim", &Problem::dim)
        .def_property_readonly("kind", [](const Problem& p) { return std::string(to_string(p.kind())); })
        .def_property_readonly("analytic_minimum", &Problem::analytic_minimum);

    m.def(
        "eval_loss_grad",
        [](const Problem& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& params,
           std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>> features,
           std::optional<std::vector<int>> labels) {
            const auto batch = make_batch(features, labels);
            auto lg = eval_loss_grad(p, to_vector(params), batch ? &*batch : nullptr);
            return py::make_tuple(lg.loss, to_numpy(lg.grad));
        },
        py::arg("problem"), py::arg("params"), py::arg("features") = py::none(),
        py::arg("labels") = py::none());
    m.def(
        "finite_diff_grad",
        [](const Problem& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& params,
           std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>> features,
           std::optional<std::vector<int>> labels, double h) {
            const auto batch = make_batch(features, labels);
            return to_numpy(finite_diff_grad(p, to_vector(params), batch ? &*batch : nullptr, h));
        },
        py::arg("problem"), py::arg("params"), py::arg("features") = py::none(),
        py::arg("labels") = py::none(), py::arg("h") = 1e-6);
    m.def("init_params", [](const Problem& p, std::uint64_t seed) { return to_numpy(init_params(p, seed)); },
          py::arg("problem"), py::arg("seed"));

    m.def(
        "gen_gaussian_blobs",
        [](std::uint64_t seed, std::size_t n_per_class, std::size_t dim, int num_classes, double spread) {
            const auto ds = gen_gaussian_blobs(seed, n_per_class, dim, num_classes, spread);
            return py::make_tuple(matrix_to_numpy(ds.features), py::cast(ds.labels));
        },
        py::arg("seed"), py::arg("n_per_class"), py::arg("dim"), py::arg("num_classes"),
        py::arg("spread"), "Returns (features, labels).");

    m.def(
        "sweep_mu",
        [](const std::string& problem, const std::vector<double>& mus, std::size_t seeds,
           std::uint64_t epochs, const std::string& format) {
            GridSpec grid;
            grid.rows = default_rows(mus);
            grid.columns = {{problem, default_problem(problem)}};
            grid.seeds.clear();
            for (std::size_t s = 0; s < seeds; ++s) grid.seeds.push_back(s);
            if (problem == "quadratic" || problem == "rosenbrock") grid.protocol.metric = Metric::FinalLoss;
            if (epochs != grid.protocol.epochs) {
                grid.protocol.epochs = epochs;
                grid.protocol.schedule = StepSchedule({{epochs / 3, 0.5}, {2 * epochs / 3, 0.5}});
            }
            GridOutcome outcome;
            {
                py::gil_scoped_release release;
                outcome = run_grid(grid);
            }
            return emit_table(outcome.table, parse_table_format(format));
        },
        py::arg("problem") = "blobs-mlp", py::arg("mus") = kDefaultMus, py::arg("seeds") = 10,
        py::arg("epochs") = 30, py::arg("format") = "md",
        "Run the default optimizer grid on one problem and return the rendered table.");
}
