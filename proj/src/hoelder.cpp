#include "qrlab/hoelder.hpp"

#include "qrlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qrlab {

namespace {

void validate_hoelder(const HoelderConfig& cfg, int dim) {
    if (cfg.scales.empty()) throw std::invalid_argument("scale ladder must be non-empty");
    for (std::size_t i = 0; i < cfg.scales.size(); ++i) {
        if (!(cfg.scales[i] > 0.0) || !std::isfinite(cfg.scales[i]))
            throw std::invalid_argument("scale ladder entries must be positive finite");
        if (i > 0 && !(cfg.scales[i] < cfg.scales[i - 1]))
            throw std::invalid_argument("scale ladder must be strictly decreasing");
    }
    if (cfg.scales.back() < 1e-8)
        throw std::invalid_argument("smallest ladder scale must be >= 1e-8");
    int min_dirs = (dim == 2) ? 8 : 32;
    if (cfg.directions < min_dirs)
        throw std::invalid_argument("direction count must be >= " + std::to_string(min_dirs) +
                                    " for dimension " + std::to_string(dim));
}

double quotient_at(const Mapping& f, const ExtendedPoint& fx, const Vec& x, double scale,
                   const Vec& u, double alpha) {
    ExtendedPoint fy = f.evaluate(x + u * scale);
    return chordal_distance(fy, fx) / std::pow(scale, alpha);
}

} // namespace

double alpha_of(int n, double K) {
    if (n < 2) throw std::invalid_argument("alpha_of: dimension must be >= 2");
    if (!(K >= 1.0) || !std::isfinite(K)) throw std::invalid_argument("alpha_of: K must be >= 1");
    return std::pow(K, 1.0 / (1.0 - n));
}

QuotientProfile quotient_profile(const Mapping& f, const Vec& x, const HoelderConfig& cfg) {
    validate_hoelder(cfg, f.dim());
    if (x.dim() != f.dim()) throw std::invalid_argument("quotient_profile: point dimension mismatch");

    const double alpha = f.alpha();
    const auto dirs = sphere_directions(f.dim(), cfg.directions, cfg.seed);
    const ExtendedPoint fx = f.evaluate(x);

    QuotientProfile prof;
    prof.x = x;
    prof.alpha = alpha;
    prof.entries.reserve(cfg.scales.size());
    for (double scale : cfg.scales) {
        ScaleEntry entry{scale, 0.0, dirs.front()};
        for (const Vec& u : dirs) {
            double q = quotient_at(f, fx, x, scale, u, alpha);
            if (q > entry.max_quotient) {
                entry.max_quotient = q;
                entry.witness_direction = u;
            }
        }
        prof.entries.push_back(entry);
    }
    // limsup estimator: max over the two smallest scales (the ladder is
    // validated decreasing, so those are the last two entries).
    std::size_t m = prof.entries.size();
    prof.q_hat = prof.entries[m - 1].max_quotient;
    if (m >= 2) prof.q_hat = std::max(prof.q_hat, prof.entries[m - 2].max_quotient);
    return prof;
}

std::vector<QuotientProfile> hoelder_field(const Mapping& f, const std::vector<Vec>& grid,
                                           const HoelderConfig& cfg) {
    validate_hoelder(cfg, f.dim());
    if (grid.empty()) throw std::invalid_argument("hoelder_field: grid must be non-empty");
    std::vector<QuotientProfile> out(grid.size());
    HoelderConfig point_cfg = cfg;
    point_cfg.threads = 1;
    parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
        out[i] = quotient_profile(f, grid[i], point_cfg);
    });
    return out;
}

namespace {

// Shared trigger logic for the two indicators: band maxima of a non-negative
// series laid out from inner to outer.
struct TrendOutcome {
    bool trigger = false;
};

TrendOutcome trend_trigger(const std::vector<double>& band_max, const YosidaConfig& cfg) {
    std::vector<double> bands;
    for (double b : band_max)
        if (!std::isnan(b)) bands.push_back(b);
    TrendOutcome out;
    if (bands.size() < 4) return out;
    // Monotone (within slack) over the outer half.
    for (std::size_t i = bands.size() / 2; i + 1 < bands.size(); ++i)
        if (bands[i + 1] < bands[i] / cfg.trend_slack) return out;
    out.trigger = bands.back() >= cfg.trend_factor * std::max(cfg.trend_floor, bands.front());
    return out;
}

} // namespace

YosidaIndicator yosida_indicator(const Mapping& f, const std::vector<Vec>& grid,
                                 const YosidaConfig& cfg) {
    if (grid.empty()) throw std::invalid_argument("yosida_indicator: grid must be non-empty");
    if (cfg.bands < 2) throw std::invalid_argument("yosida_indicator: need at least 2 bands");
    auto profiles = hoelder_field(f, grid, cfg.hoelder);

    YosidaIndicator ind;
    ind.grid_points = grid.size();
    ind.witness = grid.front();
    double max_norm = 0.0;
    for (const Vec& x : grid) max_norm = std::max(max_norm, x.norm());

    ind.band_max.assign(static_cast<std::size_t>(cfg.bands),
                        std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double q = profiles[i].q_hat;
        if (q > ind.sup_q_hat) {
            ind.sup_q_hat = q;
            ind.witness = grid[i];
        }
        int band = (max_norm == 0.0)
                       ? 0
                       : std::min(cfg.bands - 1,
                                  static_cast<int>(grid[i].norm() / max_norm * cfg.bands));
        double& slot = ind.band_max[static_cast<std::size_t>(band)];
        if (std::isnan(slot) || q > slot) slot = q;
    }

    ind.blowup_trigger = ind.sup_q_hat > cfg.blowup_threshold;
    ind.trend_trigger = trend_trigger(ind.band_max, cfg).trigger;
    ind.yosida_consistent = !ind.blowup_trigger && !ind.trend_trigger;
    ind.verdict = ind.yosida_consistent ? "yosida-consistent" : "non-yosida-evidence";
    return ind;
}

PYosidaIndicator p_yosida_indicator(const Mapping& f, double p, const std::vector<Vec>& anchors,
                                    const YosidaConfig& cfg) {
    if (!(p > 1.0)) throw std::invalid_argument("p_yosida_indicator: requires p > 1");
    if (anchors.size() < 10) throw std::invalid_argument("p_yosida_indicator: need >= 10 anchors");
    double prev = -1.0;
    for (const Vec& a : anchors) {
        double n = a.norm();
        if (!(n > 0.0)) throw std::invalid_argument("p_yosida_indicator: anchors must be nonzero");
        if (n < prev - 1e-12)
            throw std::invalid_argument("p_yosida_indicator: anchors must be sorted by |a|");
        prev = std::max(prev, n);
    }
    if (anchors.back().norm() < 100.0 * anchors.front().norm() * (1.0 - 1e-12))
        throw std::invalid_argument("p_yosida_indicator: anchors must span |a| ratio >= 100");

    const double alpha = f.alpha();
    auto profiles = hoelder_field(f, anchors, cfg.hoelder);

    PYosidaIndicator ind;
    ind.weighted.resize(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i)
        ind.weighted[i] = std::pow(anchors[i].norm(), (2.0 - p) * alpha) * profiles[i].q_hat;

    // limsup surrogate: max over the top decile by |a| (anchors are sorted).
    std::size_t top_start = anchors.size() - std::max<std::size_t>(1, anchors.size() / 10);
    ind.witness = anchors[top_start];
    for (std::size_t i = top_start; i < anchors.size(); ++i) {
        if (ind.weighted[i] >= ind.limsup_estimate) {
            ind.limsup_estimate = ind.weighted[i];
            ind.witness = anchors[i];
        }
    }

    double sup_all = 0.0;
    for (double w : ind.weighted) sup_all = std::max(sup_all, w);
    ind.blowup_trigger = sup_all > cfg.blowup_threshold;

    // Bands over the anchor index (anchors sorted by |a|).
    std::vector<double> band_max(static_cast<std::size_t>(cfg.bands),
                                 std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        int band = std::min(cfg.bands - 1,
                            static_cast<int>(i * static_cast<std::size_t>(cfg.bands) /
                                             anchors.size()));
        double& slot = band_max[static_cast<std::size_t>(band)];
        if (std::isnan(slot) || ind.weighted[i] > slot) slot = ind.weighted[i];
    }
    ind.trend_trigger = trend_trigger(band_max, cfg).trigger;
    ind.consistent = !ind.blowup_trigger && !ind.trend_trigger;
    ind.verdict = ind.consistent ? "p-yosida-consistent" : "non-p-yosida-evidence";
    return ind;
}

double rescale_identity_check(const Mapping& f, const Vec& a, double p, double scale,
                              int directions, std::uint64_t seed) {
    double an = a.norm();
    if (!(an > 0.0)) throw std::invalid_argument("rescale_identity_check: a must be nonzero");
    if (!(scale > 0.0)) throw std::invalid_argument("rescale_identity_check: scale must be positive");
    if (!(p >= 1.0)) throw std::invalid_argument("rescale_identity_check: p must be >= 1");

    const double alpha = f.alpha();
    const double s = std::pow(an, 2.0 - p); // identical expression to p_rescale's factor
    MappingPtr fa = p_rescale(std::shared_ptr<const Mapping>(&f, [](const Mapping*) {}), a, p);

    const auto dirs = sphere_directions(f.dim(), directions, seed);
    const ExtendedPoint fa0 = fa->evaluate(Vec::zero(f.dim()));
    const ExtendedPoint f_at_a = f.evaluate(a);

    double worst = 0.0;
    for (const Vec& u : dirs) {
        // Left: quotient of the rescaled map at 0. Right: weighted quotient of
        // f at a. The probe point a + (u*scale)*s is constructed with exactly
        // the float operations p_rescale applies, so both sides evaluate f at
        // bitwise-identical points and the identity survives at 1e-12.
        double lhs = chordal_distance(fa->evaluate(u * scale), fa0) / std::pow(scale, alpha);
        double rhs = std::pow(an, (2.0 - p) * alpha) *
                     chordal_distance(f.evaluate(a + (u * scale) * s), f_at_a) /
                     std::pow(scale * s, alpha);
        double ref = std::max({lhs, rhs, 1e-300});
        worst = std::max(worst, std::abs(lhs - rhs) / ref);
    }
    return worst;
}

NormalityConstant normality_constant(const std::vector<MappingPtr>& family,
                                     const std::vector<Vec>& grid,
                                     const std::vector<Vec>& probes, const HoelderConfig& cfg) {
    if (family.empty() || grid.empty() || probes.empty())
        throw std::invalid_argument("normality_constant: family, grid and probes must be non-empty");
    (void)cfg;

    NormalityConstant best;
    best.x1 = grid.front();
    best.x2 = probes.front();
    for (std::size_t fi = 0; fi < family.size(); ++fi) {
        const Mapping& f = *family[fi];
        const double alpha = f.alpha();
        std::vector<ExtendedPoint> fg(grid.size());
        parallel_for(grid.size(), cfg.threads,
                     [&](std::size_t i) { fg[i] = f.evaluate(grid[i]); });
        std::vector<ExtendedPoint> fp(probes.size());
        parallel_for(probes.size(), cfg.threads,
                     [&](std::size_t i) { fp[i] = f.evaluate(probes[i]); });
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (std::size_t j = 0; j < probes.size(); ++j) {
                double sep = (grid[i] - probes[j]).norm();
                if (sep < 1e-12) continue; // coincident pair
                double v = chordal_distance(fg[i], fp[j]) / std::pow(sep, alpha);
                if (v > best.value) {
                    best.value = v;
                    best.family_index = fi;
                    best.x1 = grid[i];
                    best.x2 = probes[j];
                }
            }
        }
    }
    return best;
}

LimitInequality limit_inequality_check(const Mapping& f, double p,
                                       const std::vector<Vec>& anchors, const Vec& x,
                                       std::size_t stage, const HoelderConfig& cfg,
                                       double tol) {
    if (!(p > 1.0)) throw std::invalid_argument("limit_inequality_check: requires p > 1");
    if (stage == 0 || stage > anchors.size())
        throw std::invalid_argument("limit_inequality_check: stage out of range");
    validate_hoelder(cfg, f.dim());

    const double alpha = f.alpha();
    const auto dirs = sphere_directions(f.dim(), cfg.directions, cfg.seed);

    // Weighted quotient of f at the translated base point y_m = a_m + s_m x,
    // probed at the matched scales s_m * delta.
    auto weighted_at = [&](const Vec& a) {
        double an = a.norm();
        if (!(an > 0.0))
            throw std::invalid_argument("limit_inequality_check: anchors must be nonzero");
        double s = std::pow(an, 2.0 - p);
        Vec y = a + x * s;
        double yn = y.norm();
        if (!(yn > 0.0)) return 0.0; // translated point at the origin: weight undefined -> skip
        ExtendedPoint fy = f.evaluate(y);
        double best = 0.0;
        std::size_t m = cfg.scales.size();
        for (std::size_t si = (m >= 2 ? m - 2 : 0); si < m; ++si) {
            double h = cfg.scales[si] * s;
            for (const Vec& u : dirs)
                best = std::max(best, chordal_distance(f.evaluate(y + u * h), fy) /
                                          std::pow(h, alpha));
        }
        return std::pow(yn, (2.0 - p) * alpha) * best;
    };

    double qf_indicator = 0.0;
    for (std::size_t m = 0; m < stage; ++m) qf_indicator = std::max(qf_indicator, weighted_at(anchors[m]));

    const Vec& a = anchors[stage - 1];
    double an = a.norm();
    MappingPtr fa = p_rescale(std::shared_ptr<const Mapping>(&f, [](const Mapping*) {}), a, p);
    double lhs = quotient_profile(*fa, x, cfg).q_hat;

    Vec e_a = a * (1.0 / an);
    double factor_arg = (e_a + x * std::pow(an, 1.0 - p)).norm();
    double factor = std::pow(factor_arg, (p - 2.0) * alpha);

    LimitInequality res;
    res.lhs = lhs;
    res.factor = factor;
    res.bound = qf_indicator * factor + tol;
    res.slack = res.bound - lhs;
    res.holds = res.slack >= 0.0;
    return res;
}

} // namespace qrlab
