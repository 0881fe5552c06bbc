#include "qrlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qrlab/counting.hpp"
#include "qrlab/hoelder.hpp"
#include "qrlab/mapping.hpp"
#include "qrlab/rng.hpp"
#include "qrlab/sequence.hpp"

namespace qrlab {

using nlohmann::json;

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{
        "qfield", "yosida",     "pyosida", "seqdist",     "mpdetect",
        "mucheck", "separation", "afr",     "oscillation", "nprobe"};
    return kinds;
}

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

std::string fmt(double v) { return format_number(v); }

std::vector<std::string> coord_header(const std::string& prefix, int dim) {
    std::vector<std::string> h;
    for (int i = 1; i <= dim; ++i) h.push_back(prefix + std::to_string(i));
    return h;
}

void push_point(std::vector<std::string>& row, const Vec& v) {
    for (int i = 0; i < v.dim(); ++i) row.push_back(fmt(v[i]));
}

void push_value(std::vector<std::string>& row, const ExtendedPoint& v, int dim) {
    if (v.is_infinite()) {
        for (int i = 0; i < dim; ++i) row.push_back("nan");
        row.push_back("1");
    } else {
        push_point(row, v.finite());
        row.push_back("0");
    }
}

// Azimuth/polar chart coordinates of a sphere value (polar angle 0 at the
// north pole, i.e. at infinity); used by the coverage/value scatter plots.
std::pair<double, double> sphere_angles(const ExtendedPoint& v) {
    if (v.is_infinite()) return {0.0, 0.0};
    const Vec& y = v.finite();
    double n2 = y.norm_sq();
    if (!(n2 < 1e300)) return {0.0, 0.0};
    double s = 1.0 + n2;
    double polar = std::acos(std::clamp((n2 - 1.0) / s, -1.0, 1.0));
    double azimuth = std::atan2(2.0 * y[1] / s, 2.0 * y[0] / s);
    return {azimuth, polar};
}

json map_provenance(const Mapping& f) {
    return {{"kind", f.kind()},
            {"label", f.label()},
            {"dim", f.dim()},
            {"distortion", f.distortion()},
            {"alpha", f.alpha()},
            {"parameters", f.parameters()},
            {"capabilities",
             {{"jacobian", f.has_jacobian()},
              {"apoints", f.has_apoints()},
              {"complex_form", f.has_complex_form()}}},
            {"notes", f.notes()}};
}

json skeleton(const ExperimentConfig& cfg) {
    json r;
    r["schema_version"] = kReportSchemaVersion;
    r["tool"] = "qrlab";
    r["kind"] = cfg.kind;
    r["status"] = "ok";
    r["config"] = cfg.echo();
    r["results"] = json::object();
    return r;
}

// Mark the report failed and raise with everything accumulated so far.
[[noreturn]] void fail_partial(json report, ExperimentResult res,
                               const std::string& message) {
    report["status"] = "failed";
    report["error"] = message;
    res.report = std::move(report);
    throw ExperimentFailure(message, std::move(res));
}

MappingPtr map_from(const json& spec) { return make_zoo_map(spec.at("map")); }

HoelderConfig hoelder_from(const json& spec, const ExperimentConfig& cfg) {
    HoelderConfig h;
    h.scales = spec.at("scales").get<std::vector<double>>();
    h.directions = spec.at("directions").get<int>();
    h.seed = cfg.seed;
    h.threads = cfg.threads;
    return h;
}

YosidaConfig yosida_from(const json& spec, const ExperimentConfig& cfg) {
    YosidaConfig y;
    y.hoelder = hoelder_from(spec, cfg);
    y.blowup_threshold = spec.at("blowup_threshold").get<double>();
    y.trend_floor = spec.at("trend_floor").get<double>();
    y.trend_factor = spec.at("trend_factor").get<double>();
    y.trend_slack = spec.at("trend_slack").get<double>();
    y.bands = spec.at("bands").get<int>();
    return y;
}

json grid_echo(const GridSpec& grid) {
    return {{"min", json_point(grid.min)}, {"max", json_point(grid.max)},
            {"step", grid.step}};
}

json default_grid_descriptor(int dim) {
    json lo = json::array(), hi = json::array();
    for (int i = 0; i < dim; ++i) {
        lo.push_back(-5.0);
        hi.push_back(5.0);
    }
    return {{"min", lo}, {"max", hi}, {"step", dim == 3 ? 1.0 : 0.25}};
}

// ---------------------------------------------------------------------------
// Resolvers: strict validation + defaults, one per kind.  Each returns the
// normalized spec body; all failures are std::invalid_argument with a path.
// ---------------------------------------------------------------------------

void resolve_probe_params(StrictObject& obj, json& spec, int dim) {
    std::vector<double> scales =
        obj.numbers_or("scales", {1e-1, 1e-2, 1e-3, 1e-4});
    long directions = obj.integer_or("directions", dim == 3 ? 48 : 16);
    if (scales.empty()) obj.fail("scales", "must list at least one probe scale");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0) || !std::isfinite(scales[i]))
            obj.fail("scales", "entries must be positive numbers");
        if (i && !(scales[i] < scales[i - 1]))
            obj.fail("scales", "must be strictly decreasing");
    }
    if (scales.back() < 1e-8)
        obj.fail("scales", "smallest scale must be >= 1e-8");
    long min_dirs = dim == 3 ? 32 : 8;
    if (directions < min_dirs)
        obj.fail("directions",
                 "needs >= " + std::to_string(min_dirs) + " directions in dimension " +
                     std::to_string(dim));
    spec["scales"] = scales;
    spec["directions"] = directions;
}

void resolve_trend_params(StrictObject& obj, json& spec) {
    double blowup = obj.number_or("blowup_threshold", 1e3);
    double factor = obj.number_or("trend_factor", 10.0);
    double floor_v = obj.number_or("trend_floor", 1.0);
    double slack = obj.number_or("trend_slack", 1.2);
    long bands = obj.integer_or("bands", 10);
    if (!(blowup > 0.0)) obj.fail("blowup_threshold", "must be positive");
    if (!(factor > 1.0)) obj.fail("trend_factor", "must be > 1");
    if (!(floor_v > 0.0)) obj.fail("trend_floor", "must be positive");
    if (!(slack >= 1.0)) obj.fail("trend_slack", "must be >= 1");
    if (bands < 4) obj.fail("bands", "needs at least 4 radial bands");
    spec["blowup_threshold"] = blowup;
    spec["trend_factor"] = factor;
    spec["trend_floor"] = floor_v;
    spec["trend_slack"] = slack;
    spec["bands"] = bands;
}

MappingPtr resolve_map(StrictObject& obj, json& spec) {
    json descriptor = obj.node("map");
    MappingPtr f = make_zoo_map(descriptor); // strict; throws invalid_argument
    spec["map"] = descriptor;
    return f;
}

json resolve_qfield(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    GridSpec grid = parse_grid(obj.node_or("grid", default_grid_descriptor(f->dim())),
                               f->dim(), "grid");
    spec["grid"] = grid_echo(grid);
    resolve_probe_params(obj, spec, f->dim());
    obj.finish();
    return spec;
}

json resolve_yosida(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    GridSpec grid = parse_grid(obj.node_or("grid", default_grid_descriptor(f->dim())),
                               f->dim(), "grid");
    spec["grid"] = grid_echo(grid);
    resolve_probe_params(obj, spec, f->dim());
    resolve_trend_params(obj, spec);
    obj.finish();
    return spec;
}

json resolve_pyosida(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    double p = obj.number("p");
    if (!(p > 1.0))
        obj.fail("p", "must be > 1 (weighted normality is defined for p > 1)");
    spec["p"] = p;
    json anchors_desc = obj.node_or("anchors", json::object());
    std::vector<Vec> anchors = parse_anchors(anchors_desc, f->dim(), "anchors");
    double lo = anchors.front().norm(), hi = anchors.back().norm();
    if (!(hi >= 100.0 * lo * (1.0 - 1e-12)))
        obj.fail("anchors", "modulus ratio m_max/m_min must be >= 100");
    if (anchors.size() < 10) obj.fail("anchors", "needs at least 10 anchor points");
    {
        StrictObject a(anchors_desc, "anchors");
        json norm;
        norm["m_min"] = a.integer_or("m_min", 1);
        norm["m_max"] = a.integer_or("m_max", 100);
        json rays = json::array();
        if (a.has("rays")) {
            norm["rays"] = a.node("rays");
        } else {
            for (const Vec& u : default_anchor_rays(f->dim())) rays.push_back(json_point(u));
            norm["rays"] = rays;
        }
        spec["anchors"] = norm;
    }
    resolve_probe_params(obj, spec, f->dim());
    resolve_trend_params(obj, spec);
    obj.finish();
    return spec;
}

json resolve_seqdist(const json& body) {
    StrictObject obj(body, "");
    json spec;
    json xd = obj.node("x"), yd = obj.node("y");
    PointSequence X = parse_sequence(xd, "x");
    PointSequence Y = parse_sequence(yd, "y");
    if (X.points[0].dim() != Y.points[0].dim())
        obj.fail("y", "dimension differs from x");
    double p = obj.number("p");
    if (!(p >= 1.0)) obj.fail("p", "must be >= 1");
    double eps = obj.number_or("eps", 1e-3);
    if (!(eps > 0.0)) obj.fail("eps", "must be positive");
    obj.finish();
    spec["x"] = xd;
    spec["y"] = yd;
    spec["p"] = p;
    spec["eps"] = eps;
    return spec;
}

json resolve_mpdetect(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    json xd = obj.node("x");
    PointSequence X = parse_sequence(xd, "x");
    if (X.points[0].dim() != f->dim()) obj.fail("x", "dimension differs from the map");
    spec["x"] = xd;
    double p = obj.number("p");
    if (!(p > 1.0)) obj.fail("p", "must be > 1");
    double delta = obj.number("delta");
    if (!(delta > 0.0)) obj.fail("delta", "must be positive");
    long values = obj.integer_or("values", 500);
    long l = obj.integer_or("l", 2);
    double eps_cover = obj.number_or("eps_cover", 1e-2);
    double eps_cluster = obj.number_or("eps_cluster", 0.1);
    long starts = obj.integer_or("starts", 16);
    long iterations = obj.integer_or("iterations", 60);
    if (values < 16) obj.fail("values", "needs at least 16 sphere values");
    if (l < 0) obj.fail("l", "must be >= 0");
    if (!(eps_cover > 0.0)) obj.fail("eps_cover", "must be positive");
    if (!(eps_cluster > 0.0)) obj.fail("eps_cluster", "must be positive");
    if (starts < 16) obj.fail("starts", "multistart search requires >= 16 seeds");
    if (iterations < 1) obj.fail("iterations", "must be >= 1");
    obj.finish();
    spec["p"] = p;
    spec["delta"] = delta;
    spec["values"] = values;
    spec["l"] = l;
    spec["eps_cover"] = eps_cover;
    spec["eps_cluster"] = eps_cluster;
    spec["starts"] = starts;
    spec["iterations"] = iterations;
    return spec;
}

json resolve_mucheck(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    json xd = obj.node("x");
    PointSequence X = parse_sequence(xd, "x");
    if (X.points[0].dim() != f->dim()) obj.fail("x", "dimension differs from the map");
    spec["x"] = xd;
    double p = obj.number("p");
    if (!(p > 1.0)) obj.fail("p", "must be > 1");
    std::vector<double> r = obj.numbers_or("r", {1.0});
    std::vector<double> L = obj.numbers_or("L", {0.25});
    long theta_bands = obj.integer_or("theta_bands", 96);
    long l = obj.integer_or("l", 2);
    long min_depth = obj.integer_or("min_depth", 3);
    long max_depth = obj.integer_or("max_depth", 14);
    long max_evals = obj.integer_or("max_evals", 4000000);
    std::size_t late = X.points.size() / 2;
    std::size_t n_late = X.points.size() - late;
    auto check_schedule = [&](const std::vector<double>& s, const char* name) {
        if (s.empty() || (s.size() != 1 && s.size() != n_late))
            obj.fail(name, "schedule must have length 1 or one entry per late ball (" +
                               std::to_string(n_late) + ")");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!(s[i] > 0.0) || !std::isfinite(s[i]))
                obj.fail(name, "entries must be positive");
            if (i && s[i] > s[i - 1] * (1.0 + 1e-15))
                obj.fail(name, "schedule must be non-increasing");
        }
    };
    check_schedule(r, "r");
    check_schedule(L, "L");
    if (theta_bands < 8) obj.fail("theta_bands", "needs at least 8 latitude bands");
    if (l < 0) obj.fail("l", "must be >= 0");
    if (min_depth < 0) obj.fail("min_depth", "must be >= 0");
    if (max_depth < min_depth) obj.fail("max_depth", "must be >= min_depth");
    if (max_evals < 1000) obj.fail("max_evals", "must be >= 1000");
    obj.finish();
    spec["p"] = p;
    spec["r"] = r;
    spec["L"] = L;
    spec["theta_bands"] = theta_bands;
    spec["l"] = l;
    spec["min_depth"] = min_depth;
    spec["max_depth"] = max_depth;
    spec["max_evals"] = max_evals;
    return spec;
}

json resolve_separation(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    double p = obj.number("p");
    if (!(p > 1.0)) obj.fail("p", "must be > 1");
    long l = obj.integer_or("l", 2);
    if (l < 0) obj.fail("l", "must be >= 0");
    json values = obj.node("values");
    if (!values.is_array())
        obj.fail("values", "must be an array of sphere values");
    if (static_cast<long>(values.size()) < l + 2)
        obj.fail("values", "needs at least l + 2 = " + std::to_string(l + 2) +
                               " values");
    for (std::size_t i = 0; i < values.size(); ++i)
        parse_value(values[i], f->dim(), "values[" + std::to_string(i) + "]");
    Vec center = parse_point(obj.node_or("center", json_point(Vec::zero(f->dim()))),
                             f->dim(), "center");
    std::vector<double> radii = obj.numbers("radii");
    if (radii.empty()) obj.fail("radii", "must list at least one radius");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !std::isfinite(radii[i]))
            obj.fail("radii", "entries must be positive");
        if (i && !(radii[i] > radii[i - 1]))
            obj.fail("radii", "must be strictly increasing");
    }
    obj.finish();
    spec["p"] = p;
    spec["l"] = l;
    spec["values"] = values;
    spec["center"] = json_point(center);
    spec["radii"] = radii;
    return spec;
}

json resolve_afr(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    std::vector<double> radii = obj.numbers("radii");
    if (radii.empty()) obj.fail("radii", "must list at least one radius");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !std::isfinite(radii[i]))
            obj.fail("radii", "entries must be positive");
        if (i && !(radii[i] > radii[i - 1]))
            obj.fail("radii", "must be strictly increasing");
    }
    json routes;
    if (obj.has("routes")) {
        routes = obj.node("routes");
        if (!routes.is_array() || routes.empty())
            obj.fail("routes", "must be a non-empty array");
        for (const auto& r : routes) {
            if (!r.is_string() ||
                (r.get<std::string>() != "sphere" && r.get<std::string>() != "domain"))
                obj.fail("routes", "entries must be \"sphere\" or \"domain\"");
            if (r.get<std::string>() == "domain" && !f->has_jacobian())
                obj.fail("routes",
                         "the domain route needs a Jacobian, which this map lacks");
        }
    } else {
        routes = json::array({"sphere"});
        if (f->has_jacobian()) routes.push_back("domain");
    }
    long values = obj.integer_or("values", 20000);
    long samples = obj.integer_or("samples", 100000);
    bool fit = obj.flag_or("fit", true);
    if (values < 2) obj.fail("values", "needs at least 2 sphere values");
    if (samples < 16) obj.fail("samples", "needs at least 16 domain samples");
    obj.finish();
    spec["radii"] = radii;
    spec["routes"] = routes;
    spec["values"] = values;
    spec["samples"] = samples;
    spec["fit"] = fit;
    return spec;
}

json resolve_oscillation(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    GridSpec grid = parse_grid(obj.node_or("grid", default_grid_descriptor(f->dim())),
                               f->dim(), "grid");
    spec["grid"] = grid_echo(grid);
    std::vector<double> radii = obj.numbers("radii");
    if (radii.empty()) obj.fail("radii", "must list at least one radius");
    for (double r : radii)
        if (!(r > 0.0) || !std::isfinite(r))
            obj.fail("radii", "entries must be positive");
    long ball_samples = obj.integer_or("ball_samples", 64);
    if (ball_samples < 8) obj.fail("ball_samples", "needs at least 8 samples per ball");
    spec["radii"] = radii;
    spec["ball_samples"] = ball_samples;
    if (obj.has("min_radius")) {
        double mr = obj.number("min_radius");
        if (!(mr > 0.0)) obj.fail("min_radius", "must be positive");
        spec["min_radius"] = mr;
    }
    obj.finish();
    return spec;
}

json resolve_nprobe(const json& body) {
    StrictObject obj(body, "");
    json spec;
    MappingPtr f = resolve_map(obj, spec);
    std::string mode = obj.text_or("mode", "counts");
    if (mode != "counts" && mode != "sweep")
        obj.fail("mode", "must be \"counts\" or \"sweep\"");
    spec["mode"] = mode;
    if (mode == "counts") {
        Vec center = parse_point(obj.node_or("center", json_point(Vec::zero(f->dim()))),
                                 f->dim(), "center");
        double radius = obj.number("radius");
        if (!(radius > 0.0) || !std::isfinite(radius))
            obj.fail("radius", "must be positive");
        json values = obj.node("values");
        if (values.is_array()) {
            if (values.empty()) obj.fail("values", "must list at least one value");
            for (std::size_t i = 0; i < values.size(); ++i)
                parse_value(values[i], f->dim(), "values[" + std::to_string(i) + "]");
        } else if (values.is_object()) {
            StrictObject v(values, "values");
            long n = v.integer("random");
            v.finish();
            if (n < 1 || n > 100000) obj.fail("values", "random count must be in [1, 1e5]");
        } else {
            obj.fail("values", "must be an array of values or {\"random\": N}");
        }
        bool cross = obj.flag_or("cross_check", true);
        if (!f->has_apoints() && f->dim() != 2)
            obj.fail("map", "no counting route available (no enumerator, not planar)");
        obj.finish();
        spec["center"] = json_point(center);
        spec["radius"] = radius;
        spec["values"] = values;
        spec["cross_check"] = cross;
    } else {
        double radius = obj.number("radius");
        if (!(radius > 0.0) || !std::isfinite(radius))
            obj.fail("radius", "must be positive");
        long pairs = obj.integer_or("pairs", 100);
        double span = obj.number_or("span", 20.0);
        long factor = obj.integer_or("stability_factor", 10);
        if (pairs < 4) obj.fail("pairs", "needs at least 4 sampled pairs");
        if (!(span > 0.0)) obj.fail("span", "must be positive");
        if (factor < 2) obj.fail("stability_factor", "must be >= 2");
        if (pairs * factor > 1000000) obj.fail("pairs", "extended sample exceeds 1e6");
        if (!f->has_apoints() && f->dim() != 2)
            obj.fail("map", "no counting route available (no enumerator, not planar)");
        obj.finish();
        spec["radius"] = radius;
        spec["pairs"] = pairs;
        spec["span"] = span;
        spec["stability_factor"] = factor;
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

ExperimentResult run_qfield(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    GridSpec grid = parse_grid(spec.at("grid"), f->dim(), "grid");
    HoelderConfig h = hoelder_from(spec, cfg);

    std::vector<QuotientProfile> field = hoelder_field(*f, grid.points, h);

    ExperimentResult res;
    CsvFile csv;
    csv.name = "qfield.csv";
    csv.schema = "qfield/1";
    csv.header = coord_header("x", f->dim());
    csv.header.push_back("q_hat");
    double sup = 0.0;
    std::size_t arg = 0;
    std::vector<double> values;
    values.reserve(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        std::vector<std::string> row;
        push_point(row, field[i].x);
        row.push_back(fmt(field[i].q_hat));
        csv.rows.push_back(std::move(row));
        values.push_back(field[i].q_hat);
        if (field[i].q_hat > sup) {
            sup = field[i].q_hat;
            arg = i;
        }
    }
    res.csv.push_back(std::move(csv));

    report["results"] = {{"map", map_provenance(*f)},
                         {"alpha", f->alpha()},
                         {"grid_points", field.size()},
                         {"sup_q_hat", sup},
                         {"witness", json_point(field.empty() ? grid.min : field[arg].x)},
                         {"probes_per_point",
                          spec.at("directions").get<long>() *
                              static_cast<long>(spec.at("scales").size())}};
    if (cfg.plot && f->dim() == 2)
        res.plots.push_back(
            {"qfield_heatmap.svg",
             svg_heatmap("Q-field: " + f->label(), grid.shape[0], grid.shape[1], values,
                         grid.min[0], grid.max[0], grid.min[1], grid.max[1])});
    res.report = std::move(report);
    return res;
}

ExperimentResult run_yosida(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    GridSpec grid = parse_grid(spec.at("grid"), f->dim(), "grid");
    YosidaConfig ycfg = yosida_from(spec, cfg);

    YosidaIndicator ind = yosida_indicator(*f, grid.points, ycfg);

    ExperimentResult res;
    CsvFile csv;
    csv.name = "bands.csv";
    csv.schema = "bands/1";
    csv.header = {"band", "band_max"};
    for (std::size_t b = 0; b < ind.band_max.size(); ++b)
        csv.rows.push_back({std::to_string(b), fmt(ind.band_max[b])});
    res.csv.push_back(std::move(csv));

    report["results"] = {{"map", map_provenance(*f)},
                         {"verdict", ind.verdict},
                         {"yosida_consistent", ind.yosida_consistent},
                         {"sup_q_hat", ind.sup_q_hat},
                         {"witness", json_point(ind.witness)},
                         {"blowup_trigger", ind.blowup_trigger},
                         {"trend_trigger", ind.trend_trigger},
                         {"band_max", ind.band_max},
                         {"grid_points", ind.grid_points}};
    if (cfg.plot) {
        PlotSeries s;
        s.label = "band max";
        for (std::size_t b = 0; b < ind.band_max.size(); ++b)
            if (std::isfinite(ind.band_max[b]))
                s.points.emplace_back(static_cast<double>(b), ind.band_max[b]);
        res.plots.push_back({"yosida_bands.svg",
                             svg_curve("Radial band maxima: " + f->label(), "band",
                                       "max q_hat", {s}, false)});
    }
    res.report = std::move(report);
    return res;
}

ExperimentResult run_pyosida(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    double p = spec.at("p").get<double>();
    std::vector<Vec> anchors = parse_anchors(spec.at("anchors"), f->dim(), "anchors");
    YosidaConfig ycfg = yosida_from(spec, cfg);

    PYosidaIndicator ind = p_yosida_indicator(*f, p, anchors, ycfg);

    ExperimentResult res;
    CsvFile csv;
    csv.name = "weighted.csv";
    csv.schema = "pyosida/1";
    csv.header = {"index"};
    for (const auto& c : coord_header("a", f->dim())) csv.header.push_back(c);
    csv.header.push_back("modulus");
    csv.header.push_back("weighted");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        std::vector<std::string> row{std::to_string(i)};
        push_point(row, anchors[i]);
        row.push_back(fmt(anchors[i].norm()));
        row.push_back(fmt(ind.weighted[i]));
        csv.rows.push_back(std::move(row));
    }
    res.csv.push_back(std::move(csv));

    report["results"] = {{"map", map_provenance(*f)},
                         {"p", p},
                         {"verdict", ind.verdict},
                         {"consistent", ind.consistent},
                         {"limsup_estimate", ind.limsup_estimate},
                         {"witness", json_point(ind.witness)},
                         {"blowup_trigger", ind.blowup_trigger},
                         {"trend_trigger", ind.trend_trigger},
                         {"anchor_count", anchors.size()}};
    if (cfg.plot) {
        PlotSeries s;
        s.label = "|a|^((2-p)a) q_hat";
        for (std::size_t i = 0; i < anchors.size(); ++i)
            s.points.emplace_back(anchors[i].norm(), ind.weighted[i]);
        res.plots.push_back({"pyosida_weighted.svg",
                             svg_curve("Weighted quotients: " + f->label(), "|a|",
                                       "weighted q_hat", {s}, true)});
    }
    res.report = std::move(report);
    return res;
}

ExperimentResult run_seqdist(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    PointSequence X = parse_sequence(spec.at("x"), "x");
    PointSequence Y = parse_sequence(spec.at("y"), "y");
    double p = spec.at("p").get<double>();
    double eps = spec.at("eps").get<double>();

    SequenceDistance xy = D_p(X, Y, p);
    SequenceDistance yx = D_p(Y, X, p);
    SequenceDistance sym = d_p(X, Y, p);
    BothZeroReport bz = both_zero_check(X, Y, p, eps);

    ExperimentResult res;
    CsvFile csv;
    csv.name = "trend.csv";
    csv.schema = "seqdist/1";
    csv.header = {"truncation", "xy", "yx"};
    for (std::size_t i = 0; i < bz.truncations.size(); ++i)
        csv.rows.push_back(
            {std::to_string(bz.truncations[i]), fmt(bz.xy[i]), fmt(bz.yx[i])});
    res.csv.push_back(std::move(csv));

    auto dist_json = [](const SequenceDistance& d) {
        return json{{"value", d.value}, {"m", d.m}, {"k", d.k}, {"swapped", d.swapped}};
    };
    report["results"] = {{"p", p},
                         {"eps", eps},
                         {"lengths", {X.points.size(), Y.points.size()}},
                         {"D_xy", dist_json(xy)},
                         {"D_yx", dist_json(yx)},
                         {"d_p", dist_json(sym)},
                         {"both_zero",
                          {{"agree", bz.agree},
                           {"both_below", bz.both_below},
                           {"trend", bz.trend},
                           {"final_xy", bz.final_xy},
                           {"final_yx", bz.final_yx}}}};
    if (cfg.plot) {
        PlotSeries sx{"D_p(X,Y)", {}}, sy{"D_p(Y,X)", {}};
        for (std::size_t i = 0; i < bz.truncations.size(); ++i) {
            sx.points.emplace_back(static_cast<double>(bz.truncations[i]), bz.xy[i]);
            sy.points.emplace_back(static_cast<double>(bz.truncations[i]), bz.yx[i]);
        }
        res.plots.push_back({"seqdist_trend.svg",
                             svg_curve("One-sided distances vs truncation", "truncation",
                                       "D_p", {sx, sy}, false)});
    }
    res.report = std::move(report);
    return res;
}

ExperimentResult run_mpdetect(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    PointSequence X = parse_sequence(spec.at("x"), "x");
    MpConfig mcfg;
    mcfg.eps_cover = spec.at("eps_cover").get<double>();
    mcfg.eps_cluster = spec.at("eps_cluster").get<double>();
    mcfg.value_count = spec.at("values").get<int>();
    mcfg.l = spec.at("l").get<int>();
    mcfg.starts = spec.at("starts").get<int>();
    mcfg.iterations = spec.at("iterations").get<int>();
    mcfg.seed = cfg.seed;
    mcfg.threads = cfg.threads;

    MpReport rep = mp_detect(*f, X, spec.at("p").get<double>(),
                             spec.at("delta").get<double>(), mcfg);

    ExperimentResult res;
    CsvFile csv;
    csv.name = "per_value.csv";
    csv.schema = "mpdetect/1";
    csv.header = coord_header("v", f->dim());
    csv.header.push_back("infinite");
    csv.header.push_back("attained");
    csv.header.push_back("worst_gap");
    csv.header.push_back("companion_dp");
    for (const ValueEvidence& ev : rep.per_value) {
        std::vector<std::string> row;
        push_value(row, ev.value, f->dim());
        row.push_back(ev.attained ? "1" : "0");
        row.push_back(fmt(ev.worst_gap));
        row.push_back(fmt(ev.companion_dp));
        csv.rows.push_back(std::move(row));
    }
    res.csv.push_back(std::move(csv));

    report["results"] = {{"map", map_provenance(*f)},
                         {"verdict", rep.verdict},
                         {"evidence", rep.evidence},
                         {"p", rep.p},
                         {"delta", rep.delta},
                         {"late_start", rep.late_start},
                         {"failing_values", rep.failing_values},
                         {"clusters", rep.clusters},
                         {"within_l", rep.within_l},
                         {"within_l_plus_1", rep.within_l_plus_1},
                         {"cluster_diameters", rep.cluster_diameters},
                         {"values_sampled", rep.per_value.size()}};
    if (cfg.plot) {
        std::vector<std::pair<double, double>> pts;
        for (const ValueEvidence& ev : rep.per_value)
            if (!ev.attained) pts.push_back(sphere_angles(ev.value));
        res.plots.push_back(
            {"mpdetect_values.svg",
             svg_scatter("Unattained values: " + f->label(), "azimuth", "polar angle",
                         pts, -3.2, 3.2, 0.0, 3.2)});
    }
    res.report = std::move(report);
    return res;
}

ExperimentResult run_mucheck(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    PointSequence X = parse_sequence(spec.at("x"), "x");
    MuConfig mcfg;
    mcfg.theta_bands = spec.at("theta_bands").get<int>();
    mcfg.l = spec.at("l").get<int>();
    mcfg.min_depth = spec.at("min_depth").get<int>();
    mcfg.max_depth = spec.at("max_depth").get<int>();
    mcfg.max_evals = spec.at("max_evals").get<long>();
    mcfg.threads = cfg.threads;

    CoverageReport rep = mu_p_cover_check(*f, X, spec.at("p").get<double>(),
                                          spec.at("r").get<std::vector<double>>(),
                                          spec.at("L").get<std::vector<double>>(), mcfg);

    ExperimentResult res;
    CsvFile csv;
    csv.name = "per_ball.csv";
    csv.schema = "mucheck/1";
    csv.header = {"index",    "r",        "L",          "covered_fraction",
                  "clusters", "max_cluster_diameter", "evaluations"};
    long total_evals = 0;
    for (std::size_t i = 0; i < rep.covered_fraction.size(); ++i) {
        csv.rows.push_back({std::to_string(i), fmt(rep.radii[i]),
                            fmt(rep.cluster_bound[i]), fmt(rep.covered_fraction[i]),
                            std::to_string(rep.cluster_count[i]),
                            fmt(rep.max_cluster_diameter[i]),
                            std::to_string(rep.evaluations[i])});
        total_evals += rep.evaluations[i];
    }
    res.csv.push_back(std::move(csv));

    report["results"] = {{"map", map_provenance(*f)},
                         {"verdict", rep.verdict},
                         {"evidence", rep.evidence},
                         {"p", rep.p},
                         {"l", rep.l},
                         {"late_start", rep.late_start},
                         {"cell_diameter", rep.cell_diameter},
                         {"late_balls", rep.covered_fraction.size()},
                         {"total_evaluations", total_evals},
                         {"final_uncovered_cells", rep.final_uncovered.size()}};
    if (cfg.plot) {
        std::vector<std::pair<double, double>> pts;
        for (const ExtendedPoint& c : rep.final_uncovered)
            pts.push_back(sphere_angles(c));
        res.plots.push_back(
            {"mucheck_uncovered.svg",
             svg_scatter("Uncovered cells, last ball: " + f->label(), "azimuth",
                         "polar angle", pts, -3.2, 3.2, 0.0, 3.2)});
    }
    res.report = std::move(report);
    return res;
}

ExperimentResult run_separation(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    double p = spec.at("p").get<double>();
    int l = spec.at("l").get<int>();
    Vec center = parse_point(spec.at("center"), f->dim(), "center");
    std::vector<double> radii = spec.at("radii").get<std::vector<double>>();
    std::vector<ExtendedPoint> values;
    for (std::size_t i = 0; i < spec.at("values").size(); ++i)
        values.push_back(parse_value(spec.at("values")[i], f->dim(),
                                     "values[" + std::to_string(i) + "]"));

    ExperimentResult res;
    CsvFile csv;
    csv.name = "separation.csv";
    csv.schema = "separation/1";
    csv.header = {"radius", "value", "value_j", "value_i"};
    for (const auto& c : coord_header("aj", f->dim())) csv.header.push_back(c);
    for (const auto& c : coord_header("ai", f->dim())) csv.header.push_back(c);
    csv.header.push_back("preimage_counts");

    json per_radius = json::array();
    PlotSeries curve{"separation", {}};
    for (double r : radii) {
        SeparationReport sep;
        try {
            sep = separation_statistic(*f, values, center, r, p, l);
        } catch (const NumericalError& err) {
            report["results"] = {{"map", map_provenance(*f)},
                                 {"p", p},
                                 {"l", l},
                                 {"per_radius", per_radius},
                                 {"failed_radius", r}};
            res.csv.push_back(std::move(csv));
            fail_partial(std::move(report), std::move(res),
                         "separation at radius " + fmt(r) + ": " + err.what());
        }
        std::vector<std::string> row{fmt(r), fmt(sep.value),
                                     std::to_string(sep.value_j),
                                     std::to_string(sep.value_i)};
        push_point(row, sep.apoint_j);
        push_point(row, sep.apoint_i);
        std::string counts;
        for (std::size_t i = 0; i < sep.preimage_counts.size(); ++i) {
            if (i) counts.push_back(';');
            counts += std::to_string(sep.preimage_counts[i]);
        }
        row.push_back(counts);
        csv.rows.push_back(std::move(row));
        per_radius.push_back({{"radius", r},
                              {"value", sep.value},
                              {"value_j", sep.value_j},
                              {"value_i", sep.value_i},
                              {"apoint_j", json_point(sep.apoint_j)},
                              {"apoint_i", json_point(sep.apoint_i)},
                              {"preimage_counts", sep.preimage_counts}});
        curve.points.emplace_back(r, sep.value);
    }
    res.csv.push_back(std::move(csv));

    double min_value = INFINITY;
    for (const auto& e : per_radius)
        min_value = std::min(min_value, e.at("value").get<double>());
    report["results"] = {{"map", map_provenance(*f)},
                         {"p", p},
                         {"l", l},
                         {"values", spec.at("values")},
                         {"per_radius", per_radius},
                         {"min_over_radii", min_value}};
    if (cfg.plot)
        res.plots.push_back({"separation_curve.svg",
                             svg_curve("Weighted separation vs region: " + f->label(),
                                       "radius", "sigma_p", {curve}, false)});
    res.report = std::move(report);
    return res;
}

ExperimentResult run_afr(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    std::vector<double> radii = spec.at("radii").get<std::vector<double>>();
    std::vector<std::string> routes = spec.at("routes").get<std::vector<std::string>>();
    long values = spec.at("values").get<long>();
    long samples = spec.at("samples").get<long>();
    bool fit = spec.at("fit").get<bool>();

    ExperimentResult res;
    CsvFile csv;
    csv.name = "afr.csv";
    csv.schema = "afr/1";
    csv.header = {"radius", "method", "value", "std_error", "samples", "jittered"};

    json curves = json::object();
    std::vector<PlotSeries> series;
    for (const std::string& route : routes) {
        std::uint64_t route_seed =
            hash_combine(cfg.seed, route == "sphere" ? 0xA51ull : 0xA52ull);
        std::vector<double> estimates;
        PlotSeries s{route, {}};
        for (double r : radii) {
            AfrEstimate est;
            try {
                est = route == "sphere"
                          ? afr_sphere(*f, r, values, route_seed, cfg.threads)
                          : afr_domain(*f, r, samples, route_seed, cfg.threads);
            } catch (const NumericalError& err) {
                report["results"] = {{"map", map_provenance(*f)},
                                     {"curves", curves},
                                     {"failed_radius", r},
                                     {"failed_route", route}};
                res.csv.push_back(std::move(csv));
                fail_partial(std::move(report), std::move(res),
                             "afr " + route + " at radius " + fmt(r) + ": " +
                                 err.what());
            }
            csv.rows.push_back({fmt(r), est.method, fmt(est.value), fmt(est.std_error),
                                std::to_string(est.samples),
                                std::to_string(est.jittered)});
            estimates.push_back(est.value);
            s.points.emplace_back(r, est.value);
        }
        json entry;
        entry["radii"] = radii;
        entry["values"] = estimates;
        if (fit && radii.size() >= 5 && radii.back() >= 8.0 * radii.front()) {
            GrowthFit g;
            try {
                g = growth_fit(radii, estimates);
            } catch (const NumericalError& err) {
                report["results"] = {{"map", map_provenance(*f)}, {"curves", curves}};
                res.csv.push_back(std::move(csv));
                fail_partial(std::move(report), std::move(res),
                             "afr growth fit (" + route + "): " + err.what());
            }
            entry["fit"] = {{"exponent", g.exponent},
                            {"log_coefficient", g.log_coefficient},
                            {"residual", g.residual},
                            {"points_used", g.points_used}};
        } else if (fit) {
            entry["fit_note"] = "skipped: needs >= 5 radii spanning a factor >= 8";
        }
        curves[route] = entry;
        series.push_back(std::move(s));
    }
    res.csv.push_back(std::move(csv));

    report["results"] = {{"map", map_provenance(*f)}, {"curves", curves}};
    if (cfg.plot)
        res.plots.push_back({"afr_curve.svg",
                             svg_curve("Averaged counting function: " + f->label(), "r",
                                       "A_f(r)", series, true)});
    res.report = std::move(report);
    return res;
}

ExperimentResult run_oscillation(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    GridSpec grid = parse_grid(spec.at("grid"), f->dim(), "grid");
    std::vector<double> radii = spec.at("radii").get<std::vector<double>>();
    int ball_samples = spec.at("ball_samples").get<int>();

    OscillationProfile prof =
        oscillation_profile(*f, grid.points, radii, ball_samples, cfg.threads);

    ExperimentResult res;
    CsvFile csv;
    csv.name = "oscillation.csv";
    csv.schema = "oscillation/1";
    csv.header = {"radius", "sup_diameter"};
    for (const auto& c : coord_header("w", f->dim())) csv.header.push_back(c);
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
        std::vector<std::string> row{fmt(prof.radii[i]), fmt(prof.sup_diameter[i])};
        push_point(row, prof.witnesses[i]);
        csv.rows.push_back(std::move(row));
    }
    res.csv.push_back(std::move(csv));

    report["results"] = {{"map", map_provenance(*f)},
                         {"grid_points", grid.points.size()},
                         {"radii", prof.radii},
                         {"sup_diameter", prof.sup_diameter},
                         {"ball_samples", ball_samples}};
    if (spec.contains("min_radius")) {
        MinOscillation mo = min_oscillation(*f, grid.points,
                                            spec.at("min_radius").get<double>(),
                                            ball_samples, cfg.threads);
        report["results"]["min_oscillation"] = {{"radius", mo.radius},
                                                {"value", mo.value},
                                                {"witness", json_point(mo.witness)}};
    }
    if (cfg.plot) {
        PlotSeries s{"sup diameter", {}};
        for (std::size_t i = 0; i < prof.radii.size(); ++i)
            s.points.emplace_back(prof.radii[i], prof.sup_diameter[i]);
        res.plots.push_back({"oscillation_curve.svg",
                             svg_curve("Spherical oscillation: " + f->label(), "r",
                                       "sup diameter", {s}, false)});
    }
    res.report = std::move(report);
    return res;
}

Vec random_in_ball(Rng& rng, int dim, double radius) {
    Vec u = Vec::zero(dim);
    if (dim == 2) {
        double rho = radius * std::sqrt(rng.uniform());
        double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        u[0] = rho * std::cos(phi);
        u[1] = rho * std::sin(phi);
    } else {
        double rho = radius * std::cbrt(rng.uniform());
        double z = rng.uniform(-1.0, 1.0);
        double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        u[0] = rho * s * std::cos(phi);
        u[1] = rho * s * std::sin(phi);
        u[2] = rho * z;
    }
    return u;
}

ExperimentResult run_nprobe(const ExperimentConfig& cfg, json report) {
    const json& spec = cfg.spec;
    MappingPtr f = map_from(spec);
    const std::string mode = spec.at("mode").get<std::string>();

    ExperimentResult res;
    if (mode == "counts") {
        Vec center = parse_point(spec.at("center"), f->dim(), "center");
        double radius = spec.at("radius").get<double>();
        bool cross = spec.at("cross_check").get<bool>();

        std::vector<ExtendedPoint> values;
        if (spec.at("values").is_array()) {
            for (std::size_t i = 0; i < spec.at("values").size(); ++i)
                values.push_back(parse_value(spec.at("values")[i], f->dim(),
                                             "values[" + std::to_string(i) + "]"));
        } else {
            long n = spec.at("values").at("random").get<long>();
            values = sample_sphere_values(f->dim(), static_cast<int>(n),
                                          hash_combine(cfg.seed, 0x11bull));
        }

        bool can_cross = cross && f->has_apoints() && f->dim() == 2;
        CsvFile csv;
        csv.name = "counts.csv";
        csv.schema = "nprobe-counts/1";
        csv.header = coord_header("v", f->dim());
        csv.header.push_back("infinite");
        csv.header.push_back("radius");
        csv.header.push_back("count");
        csv.header.push_back("method");
        csv.header.push_back("cross_count");
        csv.header.push_back("agree");

        long mismatches = 0, crossed = 0;
        json rows = json::array();
        for (const ExtendedPoint& v : values) {
            CountingSample primary;
            long cross_count = 0;
            bool have_cross = false;
            try {
                primary = count_apoints(*f, center, radius, v);
                if (can_cross) {
                    CountingSample other =
                        count_apoints(*f, center, radius, v,
                                      primary.method == CountMethod::Analytic
                                          ? CountMethod::ArgumentPrinciple
                                          : CountMethod::Analytic);
                    cross_count = other.count;
                    have_cross = true;
                    ++crossed;
                    if (other.count != primary.count) ++mismatches;
                }
            } catch (const NumericalError& err) {
                report["results"] = {{"map", map_provenance(*f)},
                                     {"mode", mode},
                                     {"rows", rows},
                                     {"mismatches", mismatches}};
                res.csv.push_back(std::move(csv));
                fail_partial(std::move(report), std::move(res),
                             std::string("nprobe count: ") + err.what());
            }
            std::vector<std::string> row;
            push_value(row, v, f->dim());
            row.push_back(fmt(radius));
            row.push_back(std::to_string(primary.count));
            row.push_back(primary.method == CountMethod::Analytic ? "analytic"
                                                                  : "winding");
            row.push_back(have_cross ? std::to_string(cross_count) : "nan");
            row.push_back(have_cross ? (cross_count == primary.count ? "1" : "0")
                                     : "nan");
            csv.rows.push_back(std::move(row));
            rows.push_back({{"value", json_value(v)},
                            {"count", primary.count},
                            {"method", primary.method == CountMethod::Analytic
                                           ? "analytic"
                                           : "winding"},
                            {"cross_count", have_cross ? json(cross_count) : json()},
                            {"agree", have_cross ? json(cross_count == primary.count)
                                                 : json()}});
        }
        res.csv.push_back(std::move(csv));
        report["results"] = {{"map", map_provenance(*f)},
                             {"mode", mode},
                             {"center", json_point(center)},
                             {"radius", radius},
                             {"values_probed", values.size()},
                             {"cross_checked", crossed},
                             {"mismatches", mismatches},
                             {"rows", rows}};
    } else {
        double radius = spec.at("radius").get<double>();
        long pairs = spec.at("pairs").get<long>();
        double span = spec.at("span").get<double>();
        long factor = spec.at("stability_factor").get<long>();
        long total = pairs * factor;

        std::vector<ExtendedPoint> values = sample_sphere_values(
            f->dim(), static_cast<int>(total), hash_combine(cfg.seed, 0x22cull));
        Rng rng(hash_combine(cfg.seed, 0x33dull));

        CsvFile csv;
        csv.name = "sweep.csv";
        csv.schema = "nprobe-sweep/1";
        csv.header = coord_header("a", f->dim());
        for (const auto& c : coord_header("y", f->dim())) csv.header.push_back(c);
        csv.header.push_back("infinite");
        csv.header.push_back("count");
        csv.header.push_back("batch");

        long base_max = -1, ext_max = -1;
        json argmax;
        for (long k = 0; k < total; ++k) {
            Vec a = random_in_ball(rng, f->dim(), span);
            const ExtendedPoint& y = values[static_cast<std::size_t>(k)];
            long count = 0;
            try {
                count = multiplicity_sum(*f, y, a, radius);
            } catch (const NumericalError& err) {
                report["results"] = {{"map", map_provenance(*f)},
                                     {"mode", mode},
                                     {"pairs_done", k}};
                res.csv.push_back(std::move(csv));
                fail_partial(std::move(report), std::move(res),
                             std::string("nprobe sweep: ") + err.what());
            }
            std::vector<std::string> row;
            push_point(row, a);
            push_value(row, y, f->dim());
            row.push_back(std::to_string(count));
            row.push_back(k < pairs ? "0" : "1");
            csv.rows.push_back(std::move(row));
            if (k < pairs && count > base_max) base_max = count;
            if (count > ext_max) {
                ext_max = count;
                argmax = {{"a", json_point(a)}, {"y", json_value(y)}, {"count", count}};
            }
        }
        res.csv.push_back(std::move(csv));
        report["results"] = {{"map", map_provenance(*f)},
                             {"mode", mode},
                             {"radius", radius},
                             {"span", span},
                             {"base_pairs", pairs},
                             {"extended_pairs", total},
                             {"base_max", base_max},
                             {"extended_max", ext_max},
                             {"stable", base_max == ext_max},
                             {"argmax", argmax}};
    }
    res.report = std::move(report);
    return res;
}

using Resolver = json (*)(const json&);
using Runner = ExperimentResult (*)(const ExperimentConfig&, json);

const std::map<std::string, std::pair<Resolver, Runner>>& registry() {
    static const std::map<std::string, std::pair<Resolver, Runner>> table{
        {"qfield", {resolve_qfield, run_qfield}},
        {"yosida", {resolve_yosida, run_yosida}},
        {"pyosida", {resolve_pyosida, run_pyosida}},
        {"seqdist", {resolve_seqdist, run_seqdist}},
        {"mpdetect", {resolve_mpdetect, run_mpdetect}},
        {"mucheck", {resolve_mucheck, run_mucheck}},
        {"separation", {resolve_separation, run_separation}},
        {"afr", {resolve_afr, run_afr}},
        {"oscillation", {resolve_oscillation, run_oscillation}},
        {"nprobe", {resolve_nprobe, run_nprobe}}};
    return table;
}

void attach_files(ExperimentResult& res) {
    json files = json::array();
    for (const CsvFile& c : res.csv)
        files.push_back({{"name", c.name}, {"schema", c.schema}});
    for (const SvgFile& p : res.plots)
        files.push_back({{"name", p.name}, {"schema", "svg"}});
    res.report["files"] = files;
}

} // namespace

json resolve_spec(const std::string& kind, const json& body) {
    auto it = registry().find(kind);
    if (it == registry().end())
        throw std::invalid_argument("unknown experiment kind '" + kind + "'");
    if (!body.is_object())
        throw std::invalid_argument("experiment config must be a JSON object");
    return it->second.first(body);
}

ExperimentConfig parse_config(const std::string& text, const std::string& kind,
                              const CliOverrides& overrides) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                    err.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");

    std::string requested = kind;
    if (doc.contains("kind")) {
        if (!doc["kind"].is_string())
            throw std::invalid_argument("kind: must be a string");
        std::string declared = doc["kind"].get<std::string>();
        if (requested.empty())
            requested = declared;
        else if (declared != requested)
            throw std::invalid_argument("kind: config declares '" + declared +
                                        "' but the requested experiment is '" +
                                        requested + "'");
        doc.erase("kind");
    }
    if (requested.empty())
        throw std::invalid_argument(
            "kind: missing (pass a subcommand or a 'kind' field)");

    ExperimentConfig cfg;
    cfg.kind = requested;
    if (doc.contains("seed")) {
        const json& s = doc["seed"];
        if (s.is_number_unsigned())
            cfg.seed = s.get<std::uint64_t>();
        else if (s.is_number_integer() && s.get<long>() >= 0)
            cfg.seed = static_cast<std::uint64_t>(s.get<long>());
        else
            throw std::invalid_argument("seed: must be a non-negative integer");
        doc.erase("seed");
    }
    if (doc.contains("threads")) {
        const json& t = doc["threads"];
        if (!t.is_number_integer() && !t.is_number_unsigned())
            throw std::invalid_argument("threads: must be an integer");
        long n = t.get<long>();
        if (n < 1 || n > 1024)
            throw std::invalid_argument("threads: must be in [1, 1024]");
        cfg.threads = static_cast<int>(n);
        doc.erase("threads");
    }
    if (doc.contains("out")) {
        if (!doc["out"].is_string())
            throw std::invalid_argument("out: must be a string");
        cfg.out_dir = doc["out"].get<std::string>();
        doc.erase("out");
    }
    if (doc.contains("plot")) {
        if (!doc["plot"].is_boolean())
            throw std::invalid_argument("plot: must be a boolean");
        cfg.plot = doc["plot"].get<bool>();
        doc.erase("plot");
    }

    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.threads) {
        if (*overrides.threads < 1 || *overrides.threads > 1024)
            throw std::invalid_argument("threads: must be in [1, 1024]");
        cfg.threads = *overrides.threads;
    }
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.plot) cfg.plot = *overrides.plot;

    cfg.spec = resolve_spec(cfg.kind, doc);
    return cfg;
}

json zoo_catalog() {
    json out = json::array();
    for (const MapInfo& info : list_zoo())
        out.push_back({{"kind", info.kind},
                       {"summary", info.summary},
                       {"dim", info.dim},
                       {"distortion", info.distortion},
                       {"yosida_expected", info.yosida_expected},
                       {"capabilities",
                        {{"jacobian", info.has_jacobian},
                         {"apoints", info.has_apoints},
                         {"complex_form", info.has_complex_form}}},
                       {"parameters", info.parameters},
                       {"notes", info.notes}});
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    auto it = registry().find(cfg.kind);
    if (it == registry().end())
        throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");

    ExperimentConfig norm = cfg;
    norm.spec = resolve_spec(cfg.kind, cfg.spec);
    json report = skeleton(norm);
    try {
        ExperimentResult res = it->second.second(norm, std::move(report));
        attach_files(res);
        return res;
    } catch (ExperimentFailure& fail) {
        attach_files(fail.partial);
        throw;
    } catch (const NumericalError& err) {
        ExperimentResult partial;
        partial.report = skeleton(norm);
        partial.report["status"] = "failed";
        partial.report["error"] = err.what();
        attach_files(partial);
        throw ExperimentFailure(err.what(), std::move(partial));
    }
}

std::vector<std::filesystem::path> write_artifacts(const ExperimentConfig& cfg,
                                                   const ExperimentResult& result,
                                                   double seconds) {
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    json report = result.report;
    report["timing"] = {{"seconds", seconds}}; // volatile; not covered by the
                                               // determinism contract
    std::vector<std::filesystem::path> written;
    std::filesystem::path report_path = dir / "report.json";
    write_json_atomic(report_path, report);
    written.push_back(report_path);
    for (const CsvFile& c : result.csv) {
        std::filesystem::path p = dir / c.name;
        write_file_atomic(p, csv_text(c));
        written.push_back(p);
    }
    for (const SvgFile& s : result.plots) {
        std::filesystem::path p = dir / s.name;
        write_file_atomic(p, s.content);
        written.push_back(p);
    }
    return written;
}

} // namespace qrlab
