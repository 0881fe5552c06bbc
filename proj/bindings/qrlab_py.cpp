#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "qrlab/experiments.hpp"
#include "qrlab/geometry.hpp"
#include "qrlab/mapping.hpp"

namespace py = pybind11;

namespace {

qrlab::Vec vec_from(const std::vector<double>& coords) {
    if (coords.size() != 2 && coords.size() != 3)
        throw std::invalid_argument("points must have 2 or 3 coordinates");
    qrlab::Vec v = qrlab::Vec::zero(static_cast<int>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) v[static_cast<int>(i)] = coords[i];
    return v;
}

// None stands for the point at infinity.
qrlab::ExtendedPoint point_from(const py::object& obj, int dim_hint) {
    if (obj.is_none()) return qrlab::ExtendedPoint::infinity(dim_hint);
    return qrlab::ExtendedPoint(vec_from(obj.cast<std::vector<double>>()));
}

int dim_of(const py::object& obj, int fallback) {
    if (obj.is_none()) return fallback;
    return static_cast<int>(obj.cast<std::vector<double>>().size());
}

} // namespace

PYBIND11_MODULE(_qrlab, m) {
    m.doc() = "native core of qrlab (experiments, specimen zoo, chordal geometry)";

    // Runs one experiment and returns {"report":…, "csv": {name: text},
    // "plots": {name: svg}} as a JSON string.  A numerical failure returns
    // the partial payload with report.status == "failed" instead of raising,
    // mirroring the CLI's write-partial-then-exit-3 behavior.
    m.def(
        "run_experiment_json",
        [](const std::string& kind, const std::string& config_text) {
            qrlab::ExperimentConfig cfg = qrlab::parse_config(config_text, kind, {});
            nlohmann::json out;
            qrlab::ExperimentResult res;
            try {
                res = qrlab::run_experiment(cfg);
            } catch (const qrlab::ExperimentFailure& fail) {
                res = fail.partial;
            }
            out["report"] = res.report;
            nlohmann::json csv = nlohmann::json::object();
            for (const qrlab::CsvFile& c : res.csv) csv[c.name] = qrlab::csv_text(c);
            out["csv"] = csv;
            nlohmann::json plots = nlohmann::json::object();
            for (const qrlab::SvgFile& p : res.plots) plots[p.name] = p.content;
            out["plots"] = plots;
            return out.dump();
        },
        py::arg("kind"), py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>());

    m.def("experiment_kinds", [] { return qrlab::experiment_kinds(); });

    m.def("zoo_json", [] { return qrlab::zoo_catalog().dump(); });

    m.def(
        "chordal_distance",
        [](const py::object& a, const py::object& b) {
            int dim = dim_of(a, dim_of(b, 2));
            return qrlab::chordal_distance(point_from(a, dim), point_from(b, dim));
        },
        py::arg("a"), py::arg("b"));

    // Evaluates a zoo map at a finite point; None means the value is infinite.
    m.def(
        "evaluate_map_json",
        [](const std::string& descriptor,
           const std::vector<double>& x) -> py::object {
            qrlab::MappingPtr f =
                qrlab::make_zoo_map(nlohmann::json::parse(descriptor));
            qrlab::ExtendedPoint y = f->evaluate(vec_from(x));
            if (y.is_infinite()) return py::none();
            py::list out;
            for (int i = 0; i < y.finite().dim(); ++i) out.append(y.finite()[i]);
            return out;
        },
        py::arg("descriptor_json"), py::arg("x"));
}
