#include "qrlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace qrlab {

namespace {

std::string join_path(const std::string& parent, const std::string& key) {
    if (parent.empty()) return key;
    return parent + "." + key;
}

[[noreturn]] void fail_at(const std::string& path, const std::string& message) {
    throw std::invalid_argument(path.empty() ? message : path + ": " + message);
}

} // namespace

StrictObject::StrictObject(const nlohmann::json& object, std::string path)
    : object_(&object), path_(std::move(path)) {
    if (!object.is_object())
        fail_at(path_, "expected a JSON object");
}

bool StrictObject::has(const std::string& key) const { return object_->contains(key); }

std::string StrictObject::child_path(const std::string& key) const {
    return join_path(path_, key);
}

void StrictObject::fail(const std::string& key, const std::string& message) const {
    fail_at(child_path(key), message);
}

const nlohmann::json& StrictObject::raw(const std::string& key) {
    auto it = object_->find(key);
    if (it == object_->end()) fail(key, "required field is missing");
    consumed_.insert(key);
    return *it;
}

double StrictObject::number(const std::string& key) {
    const nlohmann::json& v = raw(key);
    if (!v.is_number()) fail(key, "must be a number");
    return v.get<double>();
}

double StrictObject::number_or(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return number(key);
}

long StrictObject::integer(const std::string& key) {
    const nlohmann::json& v = raw(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(key, "must be an integer");
    return v.get<long>();
}

long StrictObject::integer_or(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    return integer(key);
}

std::uint64_t StrictObject::seed_or(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const nlohmann::json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        long s = v.get<long>();
        if (s < 0) fail(key, "must be a non-negative integer");
        return static_cast<std::uint64_t>(s);
    }
    fail(key, "must be a non-negative integer");
}

bool StrictObject::flag_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const nlohmann::json& v = raw(key);
    if (!v.is_boolean()) fail(key, "must be a boolean");
    return v.get<bool>();
}

std::string StrictObject::text(const std::string& key) {
    const nlohmann::json& v = raw(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
}

std::string StrictObject::text_or(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return text(key);
}

std::vector<double> StrictObject::numbers(const std::string& key) {
    const nlohmann::json& v = raw(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_number()) fail(key, "must be an array of numbers");
        out.push_back(item.get<double>());
    }
    return out;
}

std::vector<double> StrictObject::numbers_or(const std::string& key,
                                             std::vector<double> fallback) {
    if (!has(key)) return fallback;
    return numbers(key);
}

nlohmann::json StrictObject::node(const std::string& key) { return raw(key); }

nlohmann::json StrictObject::node_or(const std::string& key, nlohmann::json fallback) {
    if (!has(key)) return fallback;
    return raw(key);
}

void StrictObject::finish() const {
    std::vector<std::string> unknown;
    for (auto it = object_->begin(); it != object_->end(); ++it)
        if (!consumed_.count(it.key())) unknown.push_back(it.key());
    if (unknown.empty()) return;
    std::sort(unknown.begin(), unknown.end());
    std::ostringstream msg;
    msg << "unknown field" << (unknown.size() > 1 ? "s" : "") << ": ";
    for (std::size_t i = 0; i < unknown.size(); ++i) {
        if (i) msg << ", ";
        msg << join_path(path_, unknown[i]);
    }
    throw std::invalid_argument(msg.str());
}

nlohmann::json ExperimentConfig::echo() const {
    nlohmann::json out = spec;
    out["kind"] = kind;
    out["seed"] = seed;
    out["threads"] = threads;
    out["plot"] = plot;
    return out;
}

// ---------------------------------------------------------------------------
// Point / value / grid descriptors
// ---------------------------------------------------------------------------

Vec parse_point(const nlohmann::json& descriptor, int dim, const std::string& path) {
    if (!descriptor.is_array())
        fail_at(path, "expected a coordinate array");
    if (static_cast<int>(descriptor.size()) != dim)
        fail_at(path, "expected " + std::to_string(dim) + " coordinates, got " +
                          std::to_string(descriptor.size()));
    Vec v = Vec::zero(dim);
    for (int i = 0; i < dim; ++i) {
        if (!descriptor[i].is_number()) fail_at(path, "coordinates must be numbers");
        v[i] = descriptor[i].get<double>();
        if (!std::isfinite(v[i])) fail_at(path, "coordinates must be finite");
    }
    return v;
}

ExtendedPoint parse_value(const nlohmann::json& descriptor, int dim,
                          const std::string& path) {
    if (descriptor.is_string()) {
        std::string s = descriptor.get<std::string>();
        if (s == "infinity" || s == "inf")
            return ExtendedPoint::infinity(dim);
        fail_at(path, "expected a coordinate array or \"infinity\"");
    }
    return ExtendedPoint(parse_point(descriptor, dim, path));
}

GridSpec parse_grid(const nlohmann::json& descriptor, int dim, const std::string& path) {
    StrictObject obj(descriptor, path);
    GridSpec grid;
    grid.min = parse_point(obj.node("min"), dim, obj.child_path("min"));
    grid.max = parse_point(obj.node("max"), dim, obj.child_path("max"));
    grid.step = obj.number("step");
    obj.finish();

    if (!(grid.step > 0.0) || !std::isfinite(grid.step))
        obj.fail("step", "must be a positive number");
    long total = 1;
    for (int d = 0; d < dim; ++d) {
        if (grid.max[d] < grid.min[d]) obj.fail("max", "must be >= min on every axis");
        long n = static_cast<long>(std::floor((grid.max[d] - grid.min[d]) / grid.step +
                                              1e-9)) +
                 1;
        grid.shape.push_back(static_cast<int>(n));
        total *= n;
        if (total > 4000000) obj.fail("step", "grid exceeds 4e6 points");
    }
    grid.points.reserve(static_cast<std::size_t>(total));
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (long k = 0; k < total; ++k) {
        Vec v = Vec::zero(dim);
        for (int d = 0; d < dim; ++d) v[d] = grid.min[d] + grid.step * idx[d];
        grid.points.push_back(v);
        for (int d = 0; d < dim; ++d) { // first axis fastest
            if (++idx[static_cast<std::size_t>(d)] < grid.shape[static_cast<std::size_t>(d)])
                break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
    }
    return grid;
}

std::vector<Vec> default_anchor_rays(int dim) {
    const double s2 = 1.0 / std::sqrt(2.0);
    std::vector<Vec> rays;
    Vec e1 = Vec::zero(dim), e2 = Vec::zero(dim);
    e1[0] = 1.0;
    e2[1] = 1.0;
    Vec diag = Vec::zero(dim), anti = Vec::zero(dim);
    diag[0] = s2;
    diag[1] = s2;
    anti[0] = s2;
    anti[1] = -s2;
    rays = {e1, e2, diag, anti};
    if (dim == 3) {
        Vec e3 = Vec::zero(3), body = Vec::zero(3);
        e3[2] = 1.0;
        const double s3 = 1.0 / std::sqrt(3.0);
        body[0] = s3;
        body[1] = s3;
        body[2] = s3;
        rays.push_back(e3);
        rays.push_back(body);
    }
    return rays;
}

std::vector<Vec> parse_anchors(const nlohmann::json& descriptor, int dim,
                               const std::string& path) {
    StrictObject obj(descriptor, path);
    long m_min = obj.integer_or("m_min", 1);
    long m_max = obj.integer_or("m_max", 100);
    std::vector<Vec> rays;
    if (obj.has("rays")) {
        nlohmann::json list = obj.node("rays");
        if (!list.is_array() || list.empty())
            obj.fail("rays", "must be a non-empty array of direction vectors");
        for (std::size_t i = 0; i < list.size(); ++i) {
            Vec u = parse_point(list[i], dim,
                                obj.child_path("rays[" + std::to_string(i) + "]"));
            double n = u.norm();
            if (!(n > 0.0))
                obj.fail("rays", "direction vectors must be nonzero");
            rays.push_back(u * (1.0 / n));
        }
    } else {
        rays = default_anchor_rays(dim);
    }
    obj.finish();
    if (m_min < 1) obj.fail("m_min", "must be >= 1");
    if (m_max < m_min) obj.fail("m_max", "must be >= m_min");
    if ((m_max - m_min + 1) * static_cast<long>(rays.size()) > 1000000)
        obj.fail("m_max", "anchor set exceeds 1e6 points");

    std::vector<Vec> anchors;
    anchors.reserve(static_cast<std::size_t>(m_max - m_min + 1) * rays.size());
    for (long m = m_min; m <= m_max; ++m)
        for (const Vec& u : rays) anchors.push_back(u * static_cast<double>(m));
    return anchors;
}

// ---------------------------------------------------------------------------
// Sequence descriptors
// ---------------------------------------------------------------------------

namespace {

struct SequenceTerm {
    double coefficient = 1.0;
    int m_power = 0;
    int basis = -1; // 0-based axis
};

// One '*'-separated factor: coefficient, m / m^k, or e1|e2|e3.
void apply_factor(SequenceTerm& term, const std::string& factor,
                  const std::string& path) {
    if (factor.empty()) fail_at(path, "empty factor in sequence expression");
    if (factor == "m") {
        term.m_power += 1;
        return;
    }
    if (factor.rfind("m^", 0) == 0) {
        const std::string exp = factor.substr(2);
        char* end = nullptr;
        long k = std::strtol(exp.c_str(), &end, 10);
        if (exp.empty() || *end != '\0' || std::abs(k) > 64)
            fail_at(path, "bad exponent in '" + factor + "'");
        term.m_power += static_cast<int>(k);
        return;
    }
    if (factor.size() == 2 && factor[0] == 'e' && factor[1] >= '1' && factor[1] <= '3') {
        if (term.basis >= 0)
            fail_at(path, "a term may contain only one basis vector");
        term.basis = factor[1] - '1';
        return;
    }
    char* end = nullptr;
    double c = std::strtod(factor.c_str(), &end);
    if (*end != '\0' || !std::isfinite(c))
        fail_at(path, "cannot parse factor '" + factor + "'");
    term.coefficient *= c;
}

std::vector<SequenceTerm> parse_expression(const std::string& expr,
                                           const std::string& path) {
    std::string compact;
    for (char c : expr)
        if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
    if (compact.empty()) fail_at(path, "empty sequence expression");

    std::vector<SequenceTerm> terms;
    std::size_t pos = 0;
    double sign = 1.0;
    if (compact[0] == '+' || compact[0] == '-') {
        sign = compact[0] == '-' ? -1.0 : 1.0;
        pos = 1;
    }
    while (pos < compact.size()) {
        // Scan one term: up to the next top-level +/- that is not part of an
        // exponent (m^-2) or a number sign after 'e'... the grammar has no
        // scientific notation inside expressions, so only 'm^' needs care.
        std::size_t end = pos;
        while (end < compact.size()) {
            char c = compact[end];
            if ((c == '+' || c == '-') && end > pos && compact[end - 1] != '^') break;
            ++end;
        }
        std::string body = compact.substr(pos, end - pos);
        SequenceTerm term;
        term.coefficient = sign;
        std::size_t start = 0;
        while (start <= body.size()) {
            std::size_t star = body.find('*', start);
            if (star == std::string::npos) star = body.size();
            apply_factor(term, body.substr(start, star - start), path);
            if (star == body.size()) break;
            start = star + 1;
        }
        if (term.basis < 0)
            fail_at(path, "term '" + body + "' lacks a basis vector (e1, e2 or e3)");
        terms.push_back(term);
        if (end >= compact.size()) break;
        sign = compact[end] == '-' ? -1.0 : 1.0;
        pos = end + 1;
        if (pos >= compact.size()) fail_at(path, "trailing operator in expression");
    }
    return terms;
}

} // namespace

PointSequence parse_sequence(const nlohmann::json& descriptor, const std::string& path) {
    StrictObject obj(descriptor, path);
    PointSequence seq;

    if (obj.has("points")) {
        nlohmann::json list = obj.node("points");
        obj.finish();
        if (!list.is_array() || list.empty())
            obj.fail("points", "must be a non-empty array of points");
        if (!list[0].is_array())
            obj.fail("points", "entries must be coordinate arrays");
        int dim = static_cast<int>(list[0].size());
        if (dim != 2 && dim != 3)
            obj.fail("points", "points must have dimension 2 or 3");
        for (std::size_t i = 0; i < list.size(); ++i)
            seq.points.push_back(parse_point(
                list[i], dim, obj.child_path("points[" + std::to_string(i) + "]")));
        seq.generator = "explicit";
    } else {
        std::string expr = obj.text("expr");
        long truncation = obj.integer_or("truncation", 100);
        long dim_override = obj.integer_or("dim", 0);
        obj.finish();
        if (truncation < 2 || truncation > 100000)
            obj.fail("truncation", "must be between 2 and 100000");
        if (dim_override != 0 && dim_override != 2 && dim_override != 3)
            obj.fail("dim", "must be 2 or 3");

        std::vector<SequenceTerm> terms =
            parse_expression(expr, obj.child_path("expr"));
        int dim = 2;
        for (const SequenceTerm& t : terms) dim = std::max(dim, t.basis + 1);
        if (dim_override != 0) {
            if (dim > dim_override)
                obj.fail("dim", "expression uses a higher axis than dim allows");
            dim = static_cast<int>(dim_override);
        }
        for (long m = 1; m <= truncation; ++m) {
            Vec x = Vec::zero(dim);
            for (const SequenceTerm& t : terms)
                x[t.basis] += t.coefficient *
                              std::pow(static_cast<double>(m), t.m_power);
            seq.points.push_back(x);
        }
        seq.generator = expr;
    }

    try {
        validate_sequence(seq);
    } catch (const std::exception& err) {
        fail_at(path, err.what());
    }
    return seq;
}

} // namespace qrlab
