#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nfl/attractor.hpp"
#include "nfl/scenario.hpp"
#include "nfl/util.hpp"

namespace py = pybind11;
using namespace nfl;

namespace {

// Grids are shared immutable objects on the C++ side; python sees a value
// wrapper around the shared pointer.
struct PyGrid {
    GridPtr ptr;
};

// Force a dense, well-typed view of whatever array python hands us.
using dense_array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field field_from_array(const GridPtr& grid, const dense_array& values) {
    const auto buf = values.request();
    if (buf.ndim != 1)
        throw config_error("field values must be a one-dimensional array");
    const auto* data = static_cast<const double*>(buf.ptr);
    return Field(grid, std::vector<double>(data, data + buf.shape[0]));
}

// The count constructor of array_t derives strides from the dtype struct,
// whose field layout moved in numpy 2, so it builds broken arrays here.
// The shape+pointer constructor sizes strides from sizeof(T); use only that.
py::array_t<double> to_numpy(const std::vector<double>& v) {
    return py::array_t<double>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())},
                               v.data());
}

py::array_t<double> array_from_field(const Field& u) { return to_numpy(u.values()); }

py::dict report_to_dict(const CertificateReport& rep) {
    py::dict d;
    d["all_pass"] = rep.all_pass;
    py::list items;
    for (const auto& item : rep.items) {
        py::dict e;
        e["condition"] = item.condition;
        e["pass"] = item.pass;
        e["margin"] = item.margin;
        e["witness_t"] = item.witness_t;
        e["witness_x"] = item.witness_x;
        e["witness_y"] = item.witness_y;
        items.append(e);
    }
    d["items"] = items;
    return d;
}

} // namespace

PYBIND11_MODULE(_nflab, m) {
    m.doc() = "nonlocal field laboratory core";

    py::register_exception<config_error>(m, "ConfigError");
    py::register_exception<check_failure>(m, "CheckFailure");

    py::class_<PyGrid>(m, "Grid")
        .def_static(
            "make",
            [](int dimension, std::vector<double> extents, std::vector<std::int64_t> points) {
                return PyGrid{Grid::make(dimension, std::move(extents), std::move(points))};
            },
            py::arg("dimension"), py::arg("extents"), py::arg("points"))
        .def_property_readonly("dimension", [](const PyGrid& g) { return g.ptr->dimension(); })
        .def_property_readonly("node_count",
                               [](const PyGrid& g) { return g.ptr->node_count(); })
        .def_property_readonly("volume", [](const PyGrid& g) { return g.ptr->volume(); })
        .def("weights", [](const PyGrid& g) { return to_numpy(g.ptr->weights()); })
        .def("coordinate", [](const PyGrid& g, std::int64_t i) {
            const auto xy = g.ptr->coordinate(i);
            return py::make_tuple(xy[0], xy[1]);
        });

    py::class_<Field>(m, "Field")
        .def(py::init([](const PyGrid& grid, const dense_array& values) {
                 return field_from_array(grid.ptr, values);
             }),
             py::arg("grid"), py::arg("values"))
        .def_property_readonly("grid", [](const Field& u) { return PyGrid{u.grid()}; })
        .def("values", &array_from_field)
        .def(
            "norm", [](const Field& u, double p) { return lp_norm(u, p); }, py::arg("p"));

    m.def("lp_norm", &lp_norm, py::arg("field"), py::arg("p"));
    m.def("lp_distance", &lp_distance, py::arg("u"), py::arg("v"), py::arg("p"));
    m.def("sup_norm_gap", &sup_norm_gap, py::arg("u"), py::arg("v"));

    py::class_<Kernel>(m, "Kernel")
        .def_static(
            "constant",
            [](const PyGrid& g, double value) { return Kernel::constant(g.ptr, value); },
            py::arg("grid"), py::arg("value"))
        .def_static(
            "gaussian",
            [](const PyGrid& g, double sigma, double amplitude) {
                return Kernel::gaussian(g.ptr, sigma, amplitude);
            },
            py::arg("grid"), py::arg("sigma"), py::arg("amplitude"))
        .def_static(
            "mexican_hat",
            [](const PyGrid& g, double sigma_e, double amp_e, double sigma_i, double amp_i) {
                return Kernel::mexican_hat(g.ptr, sigma_e, amp_e, sigma_i, amp_i);
            },
            py::arg("grid"), py::arg("sigma_e"), py::arg("amp_e"), py::arg("sigma_i"),
            py::arg("amp_i"))
        .def_static(
            "bump",
            [](const PyGrid& g, double radius, double amplitude) {
                return Kernel::bump(g.ptr, radius, amplitude);
            },
            py::arg("grid"), py::arg("radius"), py::arg("amplitude"))
        .def_static(
            "load_csv",
            [](const PyGrid& g, const std::string& path) { return Kernel::load_csv(g.ptr, path); },
            py::arg("grid"), py::arg("path"))
        .def_property_readonly("name", &Kernel::name)
        .def_property_readonly("translation_invariant", &Kernel::translation_invariant)
        .def("apply", &Kernel::apply, py::arg("field"))
        .def("apply_dense", &Kernel::apply_dense, py::arg("field"))
        .def("norm", &Kernel::norm, py::arg("r"))
        .def("row_sums", &Kernel::row_sums);

    m.def(
        "verify_kernel_bounds",
        [](const Kernel& k, double p, int trials, std::uint64_t seed) {
            const auto rep = verify_kernel_bounds(k, p, trials, seed);
            py::dict d;
            d["p"] = rep.p;
            d["trials"] = rep.trials;
            d["violations"] = rep.violations;
            d["min_gap_sup_q"] = rep.min_gap_sup_q;
            d["min_gap_l1"] = rep.min_gap_l1;
            d["min_gap_lp"] = rep.min_gap_lp;
            return d;
        },
        py::arg("kernel"), py::arg("p"), py::arg("trials"), py::arg("seed"));

    py::class_<Scenario>(m, "Scenario")
        .def_property_readonly("name", [](const Scenario& s) { return s.name; })
        .def_property_readonly("p", [](const Scenario& s) { return s.p; })
        .def_property_readonly("experiment_type",
                               [](const Scenario& s) { return s.experiment.type; })
        .def_property_readonly("grid", [](const Scenario& s) { return PyGrid{s.grid}; });

    m.def("parse_scenario", &parse_scenario, py::arg("path"));
    m.def(
        "run_experiment",
        [](const Scenario& s, const std::string& out_dir, bool summary_only) {
            RunOptions opt;
            opt.out_dir = out_dir;
            opt.summary_only = summary_only;
            return run_experiment(s, opt);
        },
        py::arg("scenario"), py::arg("out_dir"), py::arg("summary_only") = false);
    m.def("run_validate", &run_validate, py::arg("scenario"), py::arg("out_dir"));
    m.def("run_norms", &run_norms, py::arg("scenario"), py::arg("out_dir"));

    m.def(
        "validate_model",
        [](const Scenario& s) {
            const ModelSpec model = scenario_model(s);
            const auto window = scenario_time_window(s);
            return report_to_dict(validate_certificates(model, window.first, window.second));
        },
        py::arg("scenario"));

    m.def(
        "evolve_scenario",
        [](const Scenario& s, double tau, double t, const dense_array& initial) {
            const ProcessHandle h = scenario_process(s);
            return array_from_field(
                evolve_final(h, tau, t, field_from_array(h.model.grid, initial)));
        },
        py::arg("scenario"), py::arg("tau"), py::arg("t"), py::arg("initial"));
}
