#include "qrlab/sequence.hpp"

#include "qrlab/parallel.hpp"
#include "qrlab/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qrlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double weight_of(const Vec& x, double p) { return std::pow(x.norm(), 2.0 - p); }

// inf over m < nx, k < ny of |x_m - y_k| / |x_m|^(2-p); no validation here so
// truncated prefixes (which may break the growth invariant) can be probed.
SequenceDistance one_sided(const std::vector<Vec>& X, std::size_t nx,
                           const std::vector<Vec>& Y, std::size_t ny, double p) {
    SequenceDistance best;
    best.value = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < nx; ++m) {
        double w = weight_of(X[m], p);
        for (std::size_t k = 0; k < ny; ++k) {
            double v = (X[m] - Y[k]).norm() / w;
            if (v < best.value) {
                best.value = v;
                best.m = m;
                best.k = k;
            }
        }
    }
    return best;
}

void check_pair(const PointSequence& X, const PointSequence& Y, double p) {
    validate_sequence(X);
    validate_sequence(Y);
    if (X.points.front().dim() != Y.points.front().dim())
        throw std::invalid_argument("sequence distance: dimension mismatch");
    if (!(p >= 1.0)) throw std::invalid_argument("sequence distance: requires p >= 1");
}

} // namespace

void validate_sequence(const PointSequence& X) {
    const auto& pts = X.points;
    if (pts.empty()) throw std::invalid_argument("sequence: empty");
    int dim = pts.front().dim();
    for (const Vec& x : pts) {
        if (x.dim() != dim) throw std::invalid_argument("sequence: mixed dimensions");
        double n = x.norm();
        if (!std::isfinite(n)) throw std::invalid_argument("sequence: non-finite point");
        if (!(n > 0.0)) throw std::invalid_argument("sequence: contains the origin");
    }
    for (std::size_t i = pts.size() / 2; i + 1 < pts.size(); ++i)
        if (!(pts[i + 1].norm() > pts[i].norm()))
            throw std::invalid_argument(
                "sequence: |x_m| must be strictly increasing over the last half");
    if (pts.back().norm() < 10.0 * pts.front().norm())
        throw std::invalid_argument("sequence: |x_M| must be >= 10 |x_1| (escape surrogate)");
}

SequenceDistance D_p(const PointSequence& X, const PointSequence& Y, double p) {
    check_pair(X, Y, p);
    return one_sided(X.points, X.points.size(), Y.points, Y.points.size(), p);
}

SequenceDistance d_p(const PointSequence& X, const PointSequence& Y, double p) {
    check_pair(X, Y, p);
    SequenceDistance xy = one_sided(X.points, X.points.size(), Y.points, Y.points.size(), p);
    SequenceDistance yx = one_sided(Y.points, Y.points.size(), X.points, X.points.size(), p);
    if (yx.value < xy.value) {
        yx.swapped = true;
        return yx;
    }
    return xy;
}

std::vector<double> companion_gaps(const PointSequence& X, const PointSequence& Y, double p) {
    validate_sequence(X);
    validate_sequence(Y);
    if (X.points.size() != Y.points.size())
        throw std::invalid_argument("companion_gaps: sequences must have equal length");
    if (!(p >= 1.0)) throw std::invalid_argument("companion_gaps: requires p >= 1");
    std::vector<double> gaps(X.points.size());
    for (std::size_t m = 0; m < gaps.size(); ++m)
        gaps[m] = (X.points[m] - Y.points[m]).norm() / weight_of(Y.points[m], p);
    return gaps;
}

BothZeroReport both_zero_check(const PointSequence& X, const PointSequence& Y, double p,
                               double eps) {
    check_pair(X, Y, p);
    if (!(eps > 0.0)) throw std::invalid_argument("both_zero_check: eps must be positive");

    BothZeroReport rep;
    std::size_t mx = X.points.size(), my = Y.points.size();
    for (double frac : {0.25, 0.5, 0.75, 1.0}) {
        std::size_t nx = std::max<std::size_t>(1, static_cast<std::size_t>(frac * mx));
        std::size_t ny = std::max<std::size_t>(1, static_cast<std::size_t>(frac * my));
        if (!rep.truncations.empty() && nx == rep.truncations.back()) continue;
        rep.truncations.push_back(nx);
        rep.xy.push_back(one_sided(X.points, nx, Y.points, ny, p).value);
        rep.yx.push_back(one_sided(Y.points, ny, X.points, nx, p).value);
    }
    rep.final_xy = rep.xy.back();
    rep.final_yx = rep.yx.back();
    rep.both_below = rep.final_xy < eps && rep.final_yx < eps;
    bool both_above = rep.final_xy >= eps && rep.final_yx >= eps;
    rep.agree = rep.both_below || both_above;
    rep.trend = rep.both_below ? "both-vanishing" : (both_above ? "both-positive" : "split");
    return rep;
}

SeparationReport separation_from_sets(const std::vector<std::vector<Vec>>& sets, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("separation: requires p >= 1");
    std::size_t nonempty = 0;
    for (const auto& s : sets) nonempty += !s.empty();
    if (nonempty < 2)
        throw NumericalError("separation: fewer than 2 values have a-points in the region");

    SeparationReport rep;
    rep.value = std::numeric_limits<double>::infinity();
    for (const auto& s : sets) rep.preimage_counts.push_back(s.size());

    bool found = false;
    for (std::size_t j = 0; j < sets.size(); ++j) {
        for (const Vec& a : sets[j]) {
            double an = a.norm();
            if (an < 1e-15) continue; // zero points carry no weight, excluded
            double w = std::pow(an, 2.0 - p);
            for (std::size_t i = 0; i < sets.size(); ++i) {
                if (i == j) continue;
                for (const Vec& b : sets[i]) {
                    double v = (a - b).norm() / w;
                    if (v < rep.value) {
                        rep.value = v;
                        rep.value_j = j;
                        rep.value_i = i;
                        rep.apoint_j = a;
                        rep.apoint_i = b;
                        found = true;
                    }
                }
            }
        }
    }
    if (!found) throw NumericalError("separation: no admissible a-point pair");
    return rep;
}

SeparationReport separation_statistic(const Mapping& f, const std::vector<ExtendedPoint>& values,
                                      const Vec& center, double radius, double p, int l) {
    if (l < 0) throw std::invalid_argument("separation_statistic: l must be non-negative");
    if (values.size() < static_cast<std::size_t>(l) + 2)
        throw std::invalid_argument("separation_statistic: need at least l + 2 values");
    if (center.dim() != f.dim())
        throw std::invalid_argument("separation_statistic: center dimension mismatch");
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("separation_statistic: radius must be positive finite");
    for (const auto& v : values)
        if (v.dim() != f.dim())
            throw std::invalid_argument("separation_statistic: value dimension mismatch");

    std::vector<std::vector<Vec>> sets(values.size());
    for (std::size_t j = 0; j < values.size(); ++j)
        for (const auto& hit : enumerate_apoints(f, values[j], center, radius))
            sets[j].push_back(hit.location);
    return separation_from_sets(sets, p);
}

ClusterSummary greedy_clusters(const std::vector<ExtendedPoint>& points, double diameter_bound,
                               std::size_t cap) {
    if (!(diameter_bound > 0.0))
        throw std::invalid_argument("greedy_clusters: diameter bound must be positive");
    ClusterSummary sum;
    std::vector<char> assigned(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (assigned[i]) continue;
        ++sum.count;
        if (sum.count > cap) {
            sum.capped = true;
            break;
        }
        std::vector<std::size_t> members{i};
        assigned[i] = 1;
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (assigned[j]) continue;
            if (chordal_distance(points[j], points[i]) <= diameter_bound / 2.0) {
                assigned[j] = 1;
                members.push_back(j);
            }
        }
        double diam = 0.0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b)
                diam = std::max(diam,
                                chordal_distance(points[members[a]], points[members[b]]));
        sum.diameters.push_back(diam);
    }
    return sum;
}

// --- mp_detect ----------------------------------------------------------------

namespace {

struct SearchResult {
    double gap = 1.0;
    Vec argmin;
};

Vec ball_point(const Vec& center, double R, int dim, const std::array<double, 3>& u) {
    if (dim == 2) {
        double rho = R * std::sqrt(u[0]);
        double t = kTwoPi * u[1];
        return center + Vec(rho * std::cos(t), rho * std::sin(t));
    }
    double rho = R * std::cbrt(u[0]);
    double z = 2.0 * u[1] - 1.0;
    double t = kTwoPi * u[2];
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return center + Vec(rho * s * std::cos(t), rho * s * std::sin(t), rho * z);
}

// Multistart coordinate descent of x -> q(f(x), c) over the closed Euclidean
// ball B(center, R). Deterministic given the salt.
SearchResult ball_search(const Mapping& f, const ExtendedPoint& c, const Vec& center, double R,
                         const MpConfig& cfg, std::uint64_t salt) {
    const int dim = f.dim();
    auto objective = [&](const Vec& y) { return chordal_distance(f.evaluate(y), c); };

    SearchResult best{objective(center), center};
    const double early_exit = cfg.eps_cover * 0.25;

    KroneckerSequence<3> seq(salt);
    for (int s = 0; s < cfg.starts && best.gap > early_exit; ++s) {
        Vec x = center;
        if (s > 0) {
            auto u = seq.point(static_cast<std::uint64_t>(s));
            x = ball_point(center, R, dim, u);
        }
        double fx = objective(x);
        double step = 0.25 * R;
        for (int it = 0; it < cfg.iterations; ++it) {
            int best_axis = -1;
            double best_sign = 0.0, best_val = fx;
            for (int d = 0; d < dim; ++d) {
                for (double sign : {1.0, -1.0}) {
                    Vec y = x;
                    y[d] += sign * step;
                    if ((y - center).norm() > R) continue;
                    double fy = objective(y);
                    if (fy < best_val) {
                        best_val = fy;
                        best_axis = d;
                        best_sign = sign;
                    }
                }
            }
            if (best_axis >= 0) {
                x[best_axis] += best_sign * step;
                fx = best_val;
            } else {
                step *= 0.5;
                if (step < R * 1e-9) break;
            }
        }
        if (fx < best.gap) best = {fx, x};
    }
    return best;
}

} // namespace

MpReport mp_detect(const Mapping& f, const PointSequence& X, double p, double delta,
                   const MpConfig& cfg) {
    validate_sequence(X);
    if (X.points.front().dim() != f.dim())
        throw std::invalid_argument("mp_detect: sequence dimension mismatch");
    if (!(p >= 1.0)) throw std::invalid_argument("mp_detect: requires p >= 1");
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("mp_detect: delta must be positive finite");
    if (cfg.value_count < 16) throw std::invalid_argument("mp_detect: need >= 16 values");
    if (cfg.starts < 16)
        throw std::invalid_argument("mp_detect: the multistart search requires >= 16 seeds");
    if (cfg.l < 0) throw std::invalid_argument("mp_detect: l must be non-negative");
    if (!(cfg.eps_cover > 0.0) || !(cfg.eps_cluster > 0.0))
        throw std::invalid_argument("mp_detect: tolerances must be positive");

    const std::size_t M = X.points.size();
    const std::size_t late = M / 2;
    const auto values = sample_sphere_values(f.dim(), cfg.value_count, cfg.seed);

    std::vector<double> radii(M);
    for (std::size_t m = late; m < M; ++m) radii[m] = delta * weight_of(X.points[m], p);

    std::vector<Vec> late_points(X.points.begin() + static_cast<std::ptrdiff_t>(late),
                                 X.points.end());

    MpReport rep;
    rep.p = p;
    rep.delta = delta;
    rep.late_start = late;
    rep.per_value.resize(values.size());

    parallel_for(values.size(), cfg.threads, [&](std::size_t vi) {
        ValueEvidence ev;
        ev.value = values[vi];
        ev.attained = true;
        ev.companion_dp = std::numeric_limits<double>::quiet_NaN();
        std::vector<Vec> companions;
        companions.reserve(M - late);
        for (std::size_t m = late; m < M; ++m) {
            SearchResult res = ball_search(f, values[vi], X.points[m], radii[m], cfg,
                                           hash_combine(cfg.seed, (vi << 20) ^ m));
            if (res.gap > cfg.eps_cover) {
                ev.attained = false;
                ev.worst_gap = res.gap; // gap at the first ball that misses
                break;
            }
            ev.worst_gap = std::max(ev.worst_gap, res.gap);
            companions.push_back(res.argmin);
        }
        if (ev.attained) {
            double xy = one_sided(late_points, late_points.size(), companions,
                                  companions.size(), p)
                            .value;
            double yx = one_sided(companions, companions.size(), late_points,
                                  late_points.size(), p)
                            .value;
            ev.companion_dp = std::min(xy, yx);
        }
        rep.per_value[vi] = std::move(ev);
    });

    std::vector<ExtendedPoint> failing;
    for (const auto& ev : rep.per_value)
        if (!ev.attained) failing.push_back(ev.value);
    rep.failing_values = failing.size();

    ClusterSummary clusters =
        greedy_clusters(failing, cfg.eps_cluster, static_cast<std::size_t>(cfg.l) + 1);
    rep.clusters = clusters.count;
    rep.cluster_diameters = clusters.diameters;
    rep.within_l = !clusters.capped && clusters.count <= static_cast<std::size_t>(cfg.l);
    rep.within_l_plus_1 = !clusters.capped;
    rep.evidence = rep.within_l;
    rep.verdict = rep.evidence ? "M_p-evidence" : "not M_p at this resolution";
    return rep;
}

// --- mu_p_cover_check ----------------------------------------------------------

namespace {

// Unit-sphere model of the value space: R^n ∪ {inf} embeds into S^n ⊂ R^(n+1)
// by inverse stereographic projection, under which the chordal distance is
// exactly half the Euclidean distance of the images.
std::array<double, 4> unit_embed(const ExtendedPoint& y) {
    std::array<double, 4> u{0.0, 0.0, 0.0, 0.0};
    int north = y.dim() + 1 - 1; // index of the polar coordinate
    if (y.is_infinite()) {
        u[static_cast<std::size_t>(north)] = 1.0;
        return u;
    }
    const Vec& v = y.finite();
    double n2 = v.norm_sq();
    if (n2 > 1e300) { // far enough that the embedding saturates numerically
        u[static_cast<std::size_t>(north)] = 1.0;
        return u;
    }
    double denom = 1.0 + n2;
    for (int i = 0; i < y.dim(); ++i) u[static_cast<std::size_t>(i)] = 2.0 * v[i] / denom;
    u[static_cast<std::size_t>(north)] = (n2 - 1.0) / denom;
    return u;
}

ExtendedPoint unit_unembed(const std::array<double, 4>& u, int dim) {
    double north = u[static_cast<std::size_t>(dim)];
    if (1.0 - north < 1e-12) return ExtendedPoint::infinity(dim);
    double s = 1.0 / (1.0 - north);
    if (dim == 2) return ExtendedPoint(Vec(u[0] * s, u[1] * s));
    return ExtendedPoint(Vec(u[0] * s, u[1] * s, u[2] * s));
}

double unit_chordal(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    double ss = 0.0;
    for (int i = 0; i < 4; ++i) {
        double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
        ss += d * d;
    }
    return 0.5 * std::sqrt(ss);
}

double clamp_unit(double t) { return std::min(1.0, std::max(-1.0, t)); }

// Latitude-band raster of S^2 (dim 2) or S^3 (dim 3). Bands subdivide the
// polar angle; per band, azimuthal counts track the ring radius so cells stay
// roughly square. Cell sizes are chordal (unit-sphere Euclidean / 2).
class SphereRaster {
public:
    SphereRaster(int dim, int theta_bands) : dim_(dim), bands_(theta_bands) {
        if (theta_bands < 8) throw std::invalid_argument("raster: need >= 8 bands");
        double h = std::sin(kPi / (2.0 * bands_)); // chordal band height
        if (dim_ == 2) {
            offsets_.push_back(0);
            for (int b = 0; b < bands_; ++b) {
                double smax = band_smax(b, bands_);
                int m = std::max(1, static_cast<int>(std::llround(2.0 * bands_ * smax)));
                counts_.push_back(m);
                offsets_.push_back(offsets_.back() + static_cast<std::size_t>(m));
                double w = (m >= 2) ? smax * std::sin(kPi / m) : smax;
                max_diameter_ = std::max(max_diameter_, std::sqrt(h * h + w * w));
            }
        } else {
            offsets_.push_back(0);
            for (int b1 = 0; b1 < bands_; ++b1) {
                double s1 = band_smax(b1, bands_);
                int m2 = std::max(1, static_cast<int>(std::llround(bands_ * s1)));
                sub_counts_.push_back(m2);
                sub_offsets_.push_back(counts_.size());
                for (int b2 = 0; b2 < m2; ++b2) {
                    double s2 = band_smax(b2, m2);
                    int m3 = std::max(
                        1, static_cast<int>(std::llround(2.0 * bands_ * s1 * s2)));
                    counts_.push_back(m3);
                    offsets_.push_back(offsets_.back() + static_cast<std::size_t>(m3));
                    double h2 = (m2 >= 2) ? s1 * std::sin(kPi / (2.0 * m2)) : s1;
                    double w = (m3 >= 2) ? s1 * s2 * std::sin(kPi / m3) : s1 * s2;
                    max_diameter_ =
                        std::max(max_diameter_, std::sqrt(h * h + h2 * h2 + w * w));
                }
            }
        }
        centers_.resize(cells());
        for (std::size_t c = 0; c < centers_.size(); ++c) centers_[c] = compute_center(c);
    }

    std::size_t cells() const { return offsets_.back(); }
    double max_cell_diameter() const { return max_diameter_; }

    std::size_t index_of(const std::array<double, 4>& u) const {
        if (dim_ == 2) {
            double theta = std::acos(clamp_unit(u[2]));
            int b = band_index(theta, bands_);
            int m = counts_[static_cast<std::size_t>(b)];
            return offsets_[static_cast<std::size_t>(b)] + azimuth_index(u[0], u[1], m);
        }
        double theta1 = std::acos(clamp_unit(u[3]));
        int b1 = band_index(theta1, bands_);
        double s1 = std::sqrt(std::max(0.0, 1.0 - u[3] * u[3]));
        double theta2 = s1 > 1e-300 ? std::acos(clamp_unit(u[2] / s1)) : 0.0;
        int m2 = sub_counts_[static_cast<std::size_t>(b1)];
        int b2 = band_index(theta2, m2);
        std::size_t row = sub_offsets_[static_cast<std::size_t>(b1)] +
                          static_cast<std::size_t>(b2);
        int m3 = counts_[row];
        return offsets_[row] + azimuth_index(u[0], u[1], m3);
    }

    const std::array<double, 4>& center_of(std::size_t cell) const { return centers_[cell]; }

    std::array<double, 4> compute_center(std::size_t cell) const {
        // Locate the row by binary search over the flattened offsets.
        std::size_t row = static_cast<std::size_t>(
            std::upper_bound(offsets_.begin(), offsets_.end(), cell) - offsets_.begin() - 1);
        int m = counts_[row];
        double phi = (static_cast<double>(cell - offsets_[row]) + 0.5) * kTwoPi / m;
        std::array<double, 4> u{0.0, 0.0, 0.0, 0.0};
        if (dim_ == 2) {
            double theta = (static_cast<double>(row) + 0.5) * kPi / bands_;
            u[0] = std::sin(theta) * std::cos(phi);
            u[1] = std::sin(theta) * std::sin(phi);
            u[2] = std::cos(theta);
            return u;
        }
        std::size_t b1 = static_cast<std::size_t>(
            std::upper_bound(sub_offsets_.begin(), sub_offsets_.end(), row) -
            sub_offsets_.begin() - 1);
        std::size_t b2 = row - sub_offsets_[b1];
        double theta1 = (static_cast<double>(b1) + 0.5) * kPi / bands_;
        int m2 = sub_counts_[b1];
        double theta2 = (static_cast<double>(b2) + 0.5) * kPi / m2;
        double s1 = std::sin(theta1);
        u[3] = std::cos(theta1);
        u[2] = s1 * std::cos(theta2);
        u[0] = s1 * std::sin(theta2) * std::cos(phi);
        u[1] = s1 * std::sin(theta2) * std::sin(phi);
        return u;
    }

    // Marks every cell whose center lies chordally within rho of u. Candidate
    // cells come from separable windows (the squared unit-sphere distance
    // splits into non-negative polar and azimuthal terms), then an exact test.
    void mark_near(const std::array<double, 4>& u, double rho, std::vector<char>& covered) const {
        covered[index_of(u)] = 1;
        const double euclid_sq = 16.0 * rho * rho; // (2 * 2 rho)^2 budget per term
        double dtheta = 2.0 * std::asin(std::min(1.0, rho)) + kPi / bands_;
        if (dim_ == 2) {
            double theta = std::acos(clamp_unit(u[2]));
            double su = std::sqrt(std::max(0.0, 1.0 - u[2] * u[2]));
            double phi = azimuth_of(u[0], u[1]);
            int lo = std::max(0, static_cast<int>((theta - dtheta) * bands_ / kPi));
            int hi = std::min(bands_ - 1, static_cast<int>((theta + dtheta) * bands_ / kPi));
            for (int b = lo; b <= hi; ++b) {
                mark_row(offsets_[static_cast<std::size_t>(b)],
                         counts_[static_cast<std::size_t>(b)], phi,
                         su * band_smin(b, bands_), euclid_sq, u, rho, covered);
            }
            return;
        }
        double theta1 = std::acos(clamp_unit(u[3]));
        double s1u = std::sqrt(std::max(0.0, 1.0 - u[3] * u[3]));
        double theta2 = s1u > 1e-300 ? std::acos(clamp_unit(u[2] / s1u)) : 0.0;
        double s2u = std::sin(theta2);
        double phi = azimuth_of(u[0], u[1]);
        int lo = std::max(0, static_cast<int>((theta1 - dtheta) * bands_ / kPi));
        int hi = std::min(bands_ - 1, static_cast<int>((theta1 + dtheta) * bands_ / kPi));
        for (int b1 = lo; b1 <= hi; ++b1) {
            int m2 = sub_counts_[static_cast<std::size_t>(b1)];
            double s1c = band_smin(b1, bands_);
            // theta2 window: 2 s1 s1' (1 - cos(dtheta2)) <= euclid budget.
            double prod1 = s1u * s1c;
            double dtheta2 = kPi;
            if (prod1 * euclid_sq > 0.0 && euclid_sq < 4.0 * prod1)
                dtheta2 = std::acos(clamp_unit(1.0 - euclid_sq / (2.0 * prod1)));
            dtheta2 += kPi / m2;
            int lo2 = std::max(0, static_cast<int>((theta2 - dtheta2) * m2 / kPi));
            int hi2 = std::min(m2 - 1, static_cast<int>((theta2 + dtheta2) * m2 / kPi));
            for (int b2 = lo2; b2 <= hi2; ++b2) {
                std::size_t row = sub_offsets_[static_cast<std::size_t>(b1)] +
                                  static_cast<std::size_t>(b2);
                mark_row(offsets_[row], counts_[row], phi,
                         prod1 * s2u * band_smin(b2, m2), euclid_sq, u, rho, covered);
            }
        }
    }

private:
    // Exact test over one azimuthal row, restricted to the candidate window
    // implied by 2 * ring_product * (1 - cos g) <= euclid_sq.
    void mark_row(std::size_t row_offset, int m, double phi, double ring_product,
                  double euclid_sq, const std::array<double, 4>& u, double rho,
                  std::vector<char>& covered) const {
        double g = kPi;
        if (ring_product > 0.0 && euclid_sq < 4.0 * ring_product)
            g = std::acos(clamp_unit(1.0 - euclid_sq / (2.0 * ring_product)));
        int halfwidth = static_cast<int>(g * m / kTwoPi) + 1;
        int jc = static_cast<int>(phi * m / kTwoPi);
        int lo = jc - halfwidth, hi = jc + halfwidth;
        if (hi - lo + 1 >= m) {
            lo = 0;
            hi = m - 1;
        }
        for (int j = lo; j <= hi; ++j) {
            int jw = ((j % m) + m) % m;
            std::size_t cell = row_offset + static_cast<std::size_t>(jw);
            if (covered[cell]) continue;
            if (unit_chordal(centers_[cell], u) <= rho) covered[cell] = 1;
        }
    }

    static double azimuth_of(double x, double y) {
        double phi = std::atan2(y, x);
        return phi < 0.0 ? phi + kTwoPi : phi;
    }

    static double band_smax(int b, int total) {
        double t0 = static_cast<double>(b) * kPi / total;
        double t1 = static_cast<double>(b + 1) * kPi / total;
        if (t0 <= kPi / 2.0 && t1 >= kPi / 2.0) return 1.0;
        return std::max(std::sin(t0), std::sin(t1));
    }
    static double band_smin(int b, int total) {
        double t0 = static_cast<double>(b) * kPi / total;
        double t1 = static_cast<double>(b + 1) * kPi / total;
        return std::min(std::sin(t0), std::sin(t1));
    }
    static int band_index(double theta, int total) {
        int b = static_cast<int>(theta * total / kPi);
        return std::min(total - 1, std::max(0, b));
    }
    static std::size_t azimuth_index(double x, double y, int m) {
        double phi = std::atan2(y, x);
        if (phi < 0.0) phi += kTwoPi;
        int j = static_cast<int>(phi * m / kTwoPi);
        return static_cast<std::size_t>(std::min(m - 1, std::max(0, j)));
    }

    int dim_;
    int bands_;
    std::vector<int> counts_;            // azimuthal count per row
    std::vector<std::size_t> offsets_;   // prefix sums over rows (+ sentinel)
    std::vector<int> sub_counts_;        // dim 3: theta2 bands per theta1 band
    std::vector<std::size_t> sub_offsets_; // dim 3: first row of each theta1 band
    std::vector<std::array<double, 4>> centers_;
    double max_diameter_ = 0.0;
};

struct BallRaster {
    const Mapping* f = nullptr;
    const SphereRaster* raster = nullptr;
    std::vector<char>* covered = nullptr;
    Vec center;
    double radius = 0.0;
    double eta = 0.0; // image-spread refinement threshold
    int min_depth = 3, max_depth = 14;
    long max_evals = 0;
    long evals = 0;

    std::array<double, 4> sample(const Vec& x) {
        ++evals;
        std::array<double, 4> u = unit_embed(f->evaluate(x));
        if ((x - center).norm() <= radius) raster->mark_near(u, eta, *covered);
        return u;
    }

    // Recursive quadtree/octree over the bounding box of the ball. A box is
    // refined while its sampled images spread wider than eta, so evaluation
    // density follows the image geometry instead of the domain measure.
    void visit(const Vec& lo, double size, int depth) {
        // Skip boxes that cannot touch the ball.
        double dist_sq = 0.0;
        for (int d = 0; d < center.dim(); ++d) {
            double q = std::min(lo[d] + size, std::max(lo[d], center[d]));
            dist_sq += (center[d] - q) * (center[d] - q);
        }
        if (dist_sq > radius * radius) return;

        const int dim = center.dim();
        const int corners = 1 << dim;
        double spread = 0.0;
        std::array<std::array<double, 4>, 9> img;
        for (int ci = 0; ci < corners; ++ci) {
            Vec x = lo;
            for (int d = 0; d < dim; ++d)
                if (ci & (1 << d)) x[d] += size;
            img[static_cast<std::size_t>(ci)] = sample(x);
        }
        Vec mid = lo;
        for (int d = 0; d < dim; ++d) mid[d] += 0.5 * size;
        img[static_cast<std::size_t>(corners)] = sample(mid);
        for (int a = 0; a <= corners; ++a)
            for (int b = a + 1; b <= corners; ++b)
                spread = std::max(spread, unit_chordal(img[static_cast<std::size_t>(a)],
                                                       img[static_cast<std::size_t>(b)]));

        bool refine = depth < min_depth || spread > eta;
        if (depth >= max_depth || evals >= max_evals) refine = false;
        if (!refine) return;
        double half = 0.5 * size;
        for (int ci = 0; ci < corners; ++ci) {
            Vec child = lo;
            for (int d = 0; d < dim; ++d)
                if (ci & (1 << d)) child[d] += half;
            visit(child, half, depth + 1);
        }
    }
};

} // namespace

CoverageReport mu_p_cover_check(const Mapping& f, const PointSequence& X, double p,
                                const std::vector<double>& r_schedule,
                                const std::vector<double>& L_schedule,
                                const MuConfig& cfg) {
    validate_sequence(X);
    if (X.points.front().dim() != f.dim())
        throw std::invalid_argument("mu_p_cover_check: sequence dimension mismatch");
    if (!(p >= 1.0)) throw std::invalid_argument("mu_p_cover_check: requires p >= 1");
    if (cfg.l < 0) throw std::invalid_argument("mu_p_cover_check: l must be non-negative");

    const std::size_t M = X.points.size();
    const std::size_t late = M / 2;
    const std::size_t n_late = M - late;

    auto expand = [&](const std::vector<double>& sched, const char* name) {
        if (sched.empty() || (sched.size() != 1 && sched.size() != n_late))
            throw std::invalid_argument(std::string("mu_p_cover_check: ") + name +
                                        " schedule must have 1 entry or one per late ball");
        std::vector<double> out(n_late);
        for (std::size_t i = 0; i < n_late; ++i) {
            double v = sched.size() == 1 ? sched[0] : sched[i];
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument(std::string("mu_p_cover_check: ") + name +
                                            " schedule entries must be positive finite");
            if (i > 0 && v > out[i - 1] + 1e-15)
                throw std::invalid_argument(std::string("mu_p_cover_check: ") + name +
                                            " schedule must be non-increasing");
            out[i] = v;
        }
        return out;
    };
    const std::vector<double> radii = expand(r_schedule, "r");
    const std::vector<double> bounds = expand(L_schedule, "L");

    SphereRaster raster(f.dim(), cfg.theta_bands);
    double min_bound = *std::min_element(bounds.begin(), bounds.end());
    if (raster.max_cell_diameter() > min_bound / 3.0)
        throw std::invalid_argument(
            "mu_p_cover_check: raster too coarse for the requested cluster bounds "
            "(cell diameter must be <= min(L)/3)");

    CoverageReport rep;
    rep.p = p;
    rep.l = cfg.l;
    rep.late_start = late;
    rep.cell_diameter = raster.max_cell_diameter();
    rep.radii = radii;
    rep.cluster_bound = bounds;
    rep.covered_fraction.resize(n_late);
    rep.cluster_count.resize(n_late);
    rep.max_cluster_diameter.resize(n_late);
    rep.evaluations.resize(n_late);

    std::vector<char> ball_ok(n_late, 0);
    parallel_for(n_late, cfg.threads, [&](std::size_t i) {
        const Vec& xm = X.points[late + i];
        double eff_radius = radii[i] * weight_of(xm, p);

        std::vector<char> covered(raster.cells(), 0);
        BallRaster walker;
        walker.f = &f;
        walker.raster = &raster;
        walker.covered = &covered;
        walker.center = xm;
        walker.radius = eff_radius;
        walker.eta = raster.max_cell_diameter();
        walker.min_depth = cfg.min_depth;
        walker.max_depth = cfg.max_depth;
        walker.max_evals = cfg.max_evals;
        Vec lo = xm;
        for (int d = 0; d < f.dim(); ++d) lo[d] -= eff_radius;
        walker.visit(lo, 2.0 * eff_radius, 0);

        std::size_t marked = 0;
        std::vector<ExtendedPoint> uncovered;
        for (std::size_t cell = 0; cell < covered.size(); ++cell) {
            if (covered[cell])
                ++marked;
            else
                uncovered.push_back(unit_unembed(raster.center_of(cell), f.dim()));
        }
        rep.covered_fraction[i] =
            static_cast<double>(marked) / static_cast<double>(covered.size());
        rep.evaluations[i] = walker.evals;

        ClusterSummary clusters =
            greedy_clusters(uncovered, bounds[i], static_cast<std::size_t>(cfg.l));
        rep.cluster_count[i] = clusters.count;
        rep.max_cluster_diameter[i] =
            clusters.diameters.empty()
                ? 0.0
                : *std::max_element(clusters.diameters.begin(), clusters.diameters.end());
        ball_ok[i] = !clusters.capped && clusters.count <= static_cast<std::size_t>(cfg.l);
        if (i + 1 == n_late) rep.final_uncovered = std::move(uncovered);
    });

    rep.evidence = std::all_of(ball_ok.begin(), ball_ok.end(), [](char c) { return c != 0; });
    rep.verdict = rep.evidence ? "mu_p-evidence" : "no mu_p-evidence";
    return rep;
}

} // namespace qrlab
