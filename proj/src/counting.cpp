#include "qrlab/counting.hpp"

#include "qrlab/parallel.hpp"
#include "qrlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qrlab {

namespace {

using cplx = std::complex<double>;

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMarginFloor = 1e-6;
constexpr std::size_t kBoundarySamples = 1024;
constexpr int kMaxRefineDepth = 48;
constexpr double kArgStep = 0.5; // refine a segment while |delta arg| exceeds this

void check_ball(const Mapping& f, const Vec& center, double radius) {
    if (center.dim() != f.dim())
        throw std::invalid_argument("counting: center dimension does not match the map");
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("counting: radius must be positive and finite");
}

ExtendedPoint capped_point(cplx w) {
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag()) || std::abs(w) > kPoleCap)
        return ExtendedPoint::infinity(2);
    return ExtendedPoint(Vec(w.real(), w.imag()));
}

cplx unit_of(cplx w) {
    double m = std::abs(w);
    if (!(m > 0.0))
        throw NumericalError("winding integrand vanished on the boundary despite the margin gate");
    if (!std::isfinite(m))
        throw NumericalError("boundary evaluation overflowed; reduce the radius");
    return {w.real() / m, w.imag() / m};
}

// Accumulates the total argument change of g around the circle. g returns the
// (non-normalized) integrand value at parameter t in [0, 1).
class WindingIntegrator {
public:
    explicit WindingIntegrator(std::function<cplx(double)> g) : g_(std::move(g)) {}

    double total_arg(const std::vector<cplx>& coarse, std::size_t& samples) {
        double total = 0.0;
        std::size_t n = coarse.size();
        std::vector<cplx> units(n);
        for (std::size_t j = 0; j < n; ++j) units[j] = unit_of(coarse[j]);
        for (std::size_t j = 0; j < n; ++j) {
            double t0 = static_cast<double>(j) / static_cast<double>(n);
            double t1 = static_cast<double>(j + 1) / static_cast<double>(n);
            segment(t0, t1, units[j], units[(j + 1) % n], 0, total, samples);
        }
        return total;
    }

private:
    void segment(double t0, double t1, cplx v0, cplx v1, int depth, double& total,
                 std::size_t& samples) {
        double d = std::arg(v1 * std::conj(v0));
        if (std::abs(d) <= kArgStep) {
            total += d;
            return;
        }
        if (depth >= kMaxRefineDepth)
            throw NumericalError("winding quadrature did not converge (argument jump persists)");
        double tm = 0.5 * (t0 + t1);
        cplx vm = unit_of(g_(tm));
        ++samples;
        segment(t0, tm, v0, vm, depth + 1, total, samples);
        segment(tm, t1, vm, v1, depth + 1, total, samples);
    }

    std::function<cplx(double)> g_;
};

long integral_winding(double total_arg) {
    double w = total_arg / kTwoPi;
    double rounded = std::round(w);
    if (std::abs(w - rounded) > 0.05)
        throw NumericalError("winding number is not near an integer; quadrature unreliable");
    return static_cast<long>(rounded);
}

long pole_count_in(const Mapping& f, const Vec& center, double radius) {
    if (f.pole_free()) return 0;
    if (!f.has_apoints())
        throw std::invalid_argument(
            "argument principle needs a pole enumerator for maps with poles");
    long total = 0;
    for (const auto& hit : f.apoints(ExtendedPoint::infinity(f.dim()), center, radius))
        total += hit.multiplicity;
    return total;
}

} // namespace

WindingOutcome winding_count(const Mapping& f, const Vec& center, double radius,
                             const ExtendedPoint& a) {
    check_ball(f, center, radius);
    if (f.dim() != 2)
        throw std::invalid_argument("argument principle is implemented for n = 2 only");
    if (a.dim() != 2) throw std::invalid_argument("counting: value dimension mismatch");

    const Mapping::RationalData* rd = f.rational_data();
    if (!rd && !f.has_complex_form())
        throw std::invalid_argument("argument principle requires a planar complex form");

    const cplx c = to_complex(center);
    auto boundary = [&](double t) { return c + std::polar(radius, kTwoPi * t); };

    WindingOutcome out;

    // Structural short-circuit: a pole-free map never attains infinity, so
    // n(infinity) = 0 no matter how close the boundary image creeps to the
    // north pole (exp at r = 40 sits chordally ~4e-18 from it). The margin
    // gate must not veto a count that does not depend on the boundary at all.
    if (a.is_infinite() && f.pole_free()) {
        out.count = 0;
        out.boundary_margin = std::numeric_limits<double>::quiet_NaN();
        out.samples = 0;
        return out;
    }

    std::function<cplx(double)> integrand;
    long correction = 0;
    std::vector<cplx> coarse(kBoundarySamples);
    double margin = std::numeric_limits<double>::infinity();

    if (rd) {
        // Pole-free polynomial windings: zeros of P - aQ are exactly the
        // a-points (P, Q coprime), and zeros of Q are the poles. The chordal
        // margin has the closed form |P - aQ| / (sqrt(|P|^2+|Q|^2) sqrt(1+|a|^2)).
        const Polynomial& P = rd->numerator;
        const Polynomial& Q = rd->denominator;
        Polynomial target = a.is_infinite() ? Q : P.axpy(-to_complex(a.finite()), Q);
        if (target.is_zero())
            throw NumericalError("map is identically equal to the requested value");
        if (target.degree() < 1) {
            out.count = 0;
            out.boundary_margin = std::numeric_limits<double>::infinity();
            out.samples = 0;
            return out;
        }
        double ascale = a.is_infinite() ? 1.0 : std::sqrt(1.0 + to_complex(a.finite()).real() *
                                                                    to_complex(a.finite()).real() +
                                                          to_complex(a.finite()).imag() *
                                                              to_complex(a.finite()).imag());
        for (std::size_t j = 0; j < kBoundarySamples; ++j) {
            double t = static_cast<double>(j) / kBoundarySamples;
            cplx z = boundary(t);
            cplx p = P.eval(z), q = Q.eval(z);
            double h = std::sqrt(std::norm(p) + std::norm(q));
            cplx tv = target.eval(z);
            coarse[j] = tv;
            margin = std::min(margin, std::abs(tv) / (h * ascale));
        }
        integrand = [target, boundary](double t) { return target.eval(boundary(t)); };
    } else {
        const bool at_infinity = a.is_infinite();
        const cplx av = at_infinity ? cplx{} : to_complex(a.finite());
        for (std::size_t j = 0; j < kBoundarySamples; ++j) {
            double t = static_cast<double>(j) / kBoundarySamples;
            cplx w = f.complex_value(boundary(t));
            if (std::isnan(w.real()) || std::isnan(w.imag()))
                throw NumericalError("boundary evaluation produced NaN");
            coarse[j] = at_infinity ? w : w - av;
            margin = std::min(margin, chordal_distance(capped_point(w), a));
        }
        if (at_infinity) {
            // Map with poles, target infinity: the count is the pole count
            // itself; the boundary scan above only validates the margin.
            if (margin < kMarginFloor)
                throw MarginViolation("requested value lies within 1e-6 chordal of f(boundary)");
            out.count = pole_count_in(f, center, radius);
            out.boundary_margin = margin;
            out.samples = kBoundarySamples;
            return out;
        }
        correction = pole_count_in(f, center, radius);
        integrand = [&f, boundary, av](double t) { return f.complex_value(boundary(t)) - av; };
    }

    if (margin < kMarginFloor)
        throw MarginViolation("requested value lies within 1e-6 chordal of f(boundary)");

    std::size_t samples = kBoundarySamples;
    WindingIntegrator integrator(integrand);
    double total = integrator.total_arg(coarse, samples);
    long w = integral_winding(total);

    out.count = w + correction;
    out.boundary_margin = margin;
    out.samples = samples;
    if (out.count < 0)
        throw NumericalError("argument principle produced a negative count");
    return out;
}

CountingSample count_apoints(const Mapping& f, const Vec& x, double r, const ExtendedPoint& a,
                             std::optional<CountMethod> force) {
    check_ball(f, x, r);
    if (a.dim() != f.dim()) throw std::invalid_argument("counting: value dimension mismatch");

    const bool analytic_ok = f.has_apoints();
    const bool winding_ok = f.dim() == 2 && (f.has_complex_form() || f.rational_data());

    CountMethod method;
    if (force) {
        method = *force;
        if (method == CountMethod::Analytic && !analytic_ok)
            throw std::invalid_argument("count_apoints: map has no analytic enumerator");
        if (method == CountMethod::ArgumentPrinciple && !winding_ok)
            throw std::invalid_argument(
                "count_apoints: argument principle unavailable (needs n = 2 complex form)");
    } else if (analytic_ok) {
        method = CountMethod::Analytic;
    } else if (winding_ok) {
        method = CountMethod::ArgumentPrinciple;
    } else {
        throw std::invalid_argument("count_apoints: no counting route available for this map");
    }

    CountingSample sample;
    sample.x = x;
    sample.r = r;
    sample.a = a;
    sample.method = method;
    if (method == CountMethod::Analytic) {
        long total = 0;
        for (const auto& hit : f.apoints(a, x, r)) total += hit.multiplicity;
        sample.count = total;
    } else {
        sample.count = winding_count(f, x, r, a).count;
    }
    if (sample.count < 0) throw NumericalError("counting produced a negative total");
    return sample;
}

long multiplicity_sum(const Mapping& f, const ExtendedPoint& y, const Vec& a, double r) {
    return count_apoints(f, a, r, y).count;
}

namespace {

Vec random_direction(int dim, Rng& rng) {
    if (dim == 2) {
        double t = kTwoPi * rng.uniform();
        return Vec(std::cos(t), std::sin(t));
    }
    double z = rng.uniform(-1.0, 1.0);
    double t = kTwoPi * rng.uniform();
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec(s * std::cos(t), s * std::sin(t), z);
}

// Chordal perturbation of size <= 1e-5, used when a sampled value lands on the
// boundary image. For a finite value the Euclidean step (1+|y|^2) * eps moves
// it by ~eps chordally; infinity is replaced by a far finite point at chordal
// distance 1/sqrt(1+R^2).
ExtendedPoint jitter_value(const ExtendedPoint& y, int dim, Rng& rng) {
    Vec u = random_direction(dim, rng);
    if (y.is_infinite()) {
        double radius = 1e5 * (1.0 + rng.uniform());
        return ExtendedPoint(u * radius);
    }
    const Vec& base = y.finite();
    double eps = (0.3 + 0.6 * rng.uniform()) * 1e-5;
    double step = eps * (1.0 + base.norm_sq());
    return ExtendedPoint(base + u * step);
}

AfrEstimate reduce_mean(std::vector<double>& values, double factor, const char* method) {
    double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                  static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    AfrEstimate est;
    est.value = factor * mean;
    est.std_error = factor * sd / std::sqrt(static_cast<double>(values.size()));
    est.samples = static_cast<long>(values.size());
    est.method = method;
    return est;
}

} // namespace

AfrEstimate afr_sphere(const Mapping& f, double r, long value_count, std::uint64_t seed,
                       int threads) {
    check_ball(f, Vec::zero(f.dim()), r);
    if (value_count < 2) throw std::invalid_argument("afr_sphere: need at least 2 values");

    const auto values = sample_sphere_values(f.dim(), static_cast<int>(value_count), seed);
    const Vec origin = Vec::zero(f.dim());

    std::vector<double> counts(values.size());
    std::vector<unsigned char> jittered(values.size(), 0);
    parallel_for(values.size(), threads, [&](std::size_t i) {
        ExtendedPoint y = values[i];
        Rng rng(hash_combine(seed, 0xAF5EEDull + i));
        for (int attempt = 0;; ++attempt) {
            try {
                counts[i] = static_cast<double>(count_apoints(f, origin, r, y).count);
                if (attempt > 0) jittered[i] = 1;
                break;
            } catch (const MarginViolation&) {
                if (attempt >= 4) throw;
                y = jitter_value(values[i], f.dim(), rng);
            }
        }
    });

    AfrEstimate est = reduce_mean(counts, 1.0, "sphere");
    est.jittered = static_cast<int>(
        std::count(jittered.begin(), jittered.end(), static_cast<unsigned char>(1)));
    return est;
}

AfrEstimate afr_local(const Mapping& f, const Vec& x, double r, long samples,
                      std::uint64_t seed, int threads) {
    check_ball(f, x, r);
    if (samples < 2) throw std::invalid_argument("afr_local: need at least 2 samples");
    if (!f.has_jacobian())
        throw std::invalid_argument("domain route requires a Jacobian evaluator");

    const int dim = f.dim();
    std::vector<double> density(static_cast<std::size_t>(samples));
    if (dim == 2) {
        KroneckerSequence<2> seq(seed);
        parallel_for(density.size(), threads, [&](std::size_t i) {
            auto u = seq.point(i);
            double rho = r * std::sqrt(u[0]);
            double t = kTwoPi * u[1];
            density[i] = f.chordal_density(x + Vec(rho * std::cos(t), rho * std::sin(t)));
        });
    } else {
        KroneckerSequence<3> seq(seed);
        parallel_for(density.size(), threads, [&](std::size_t i) {
            auto u = seq.point(i);
            double rho = r * std::cbrt(u[0]);
            double z = 2.0 * u[1] - 1.0;
            double t = kTwoPi * u[2];
            double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            density[i] =
                f.chordal_density(x + Vec(rho * s * std::cos(t), rho * s * std::sin(t), rho * z));
        });
    }

    const double pi = 3.14159265358979323846;
    double volume = dim == 2 ? pi * r * r : 4.0 / 3.0 * pi * r * r * r;
    return reduce_mean(density, volume / lambda_n(dim), "domain");
}

AfrEstimate afr_domain(const Mapping& f, double r, long samples, std::uint64_t seed,
                       int threads) {
    return afr_local(f, Vec::zero(f.dim()), r, samples, seed, threads);
}

GrowthFit growth_fit(const std::vector<double>& radii, const std::vector<double>& values) {
    if (radii.size() != values.size())
        throw std::invalid_argument("growth_fit: radii and values must align");
    if (radii.size() < 5) throw std::invalid_argument("growth_fit: need at least 5 radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1]) || !(radii[i - 1] > 0.0))
            throw std::invalid_argument("growth_fit: radii must be positive and increasing");
    if (radii.back() < 8.0 * radii.front())
        throw std::invalid_argument("growth_fit: radii must span a factor >= 8");

    // Fit over the upper half of the radius grid only; the small-r end of an
    // A_f curve carries transient behavior, the growth law lives at the top.
    std::vector<double> lx, ly;
    for (std::size_t i = radii.size() / 2; i < radii.size(); ++i) {
        if (!(values[i] > 0.0)) continue; // excluded, as documented
        lx.push_back(std::log(radii[i]));
        ly.push_back(std::log(values[i]));
    }
    if (lx.size() < 3)
        throw std::invalid_argument("growth_fit: fewer than 3 usable (positive) points");

    double n = static_cast<double>(lx.size());
    double sx = std::accumulate(lx.begin(), lx.end(), 0.0);
    double sy = std::accumulate(ly.begin(), ly.end(), 0.0);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw NumericalError("growth_fit: degenerate radius grid");

    GrowthFit fit;
    fit.exponent = (n * sxy - sx * sy) / denom;
    fit.log_coefficient = (sy - fit.exponent * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double res = ly[i] - (fit.exponent * lx[i] + fit.log_coefficient);
        ss += res * res;
    }
    fit.residual = std::sqrt(ss / n);
    fit.points_used = static_cast<int>(lx.size());
    return fit;
}

namespace {

// Offsets shared by every grid point (and every call): the sampled image of a
// translated ball is then the exact translate of the sample pattern, so
// periodic maps report identical diameters on lattice-translate grids.
std::vector<Vec> ball_offsets(int dim, double radius, int count) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count));
    if (dim == 2) {
        KroneckerSequence<2> seq(0x0B5CULL);
        for (int i = 0; i < count; ++i) {
            auto u = seq.point(static_cast<std::uint64_t>(i));
            // Every 4th point sits exactly on the boundary sphere: the target
            // is the closed ball and the extremes usually live there.
            double rho = (i % 4 == 0) ? radius : radius * std::sqrt(u[0]);
            double t = kTwoPi * u[1];
            out.emplace_back(rho * std::cos(t), rho * std::sin(t));
        }
    } else {
        KroneckerSequence<3> seq(0x0B5CULL);
        for (int i = 0; i < count; ++i) {
            auto u = seq.point(static_cast<std::uint64_t>(i));
            double rho = (i % 4 == 0) ? radius : radius * std::cbrt(u[0]);
            double z = 2.0 * u[1] - 1.0;
            double t = kTwoPi * u[2];
            double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            out.emplace_back(rho * s * std::cos(t), rho * s * std::sin(t), rho * z);
        }
    }
    return out;
}

} // namespace

OscillationProfile oscillation_profile(const Mapping& f, const std::vector<Vec>& grid,
                                       std::vector<double> radii, int ball_samples,
                                       int threads) {
    if (grid.empty()) throw std::invalid_argument("oscillation_profile: grid must be non-empty");
    if (radii.empty()) throw std::invalid_argument("oscillation_profile: radii must be non-empty");
    if (ball_samples < 8) throw std::invalid_argument("oscillation_profile: need >= 8 samples");
    for (const Vec& x : grid)
        if (x.dim() != f.dim())
            throw std::invalid_argument("oscillation_profile: grid dimension mismatch");
    for (double r : radii)
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::invalid_argument("oscillation_profile: radii must be positive finite");
    std::sort(radii.begin(), radii.end());

    std::vector<std::vector<Vec>> offsets;
    offsets.reserve(radii.size());
    for (double r : radii) offsets.push_back(ball_offsets(f.dim(), r, ball_samples));

    // Per grid point, grow one cumulative value set radius by radius: points
    // sampled in a smaller closed ball stay valid samples of every larger one,
    // so the per-point diameter sequence is monotone by construction.
    std::vector<std::vector<double>> diam(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t gi) {
        const Vec& x = grid[gi];
        std::vector<ExtendedPoint> values;
        values.reserve(1 + radii.size() * static_cast<std::size_t>(ball_samples));
        values.push_back(f.evaluate(x));
        double d = 0.0;
        diam[gi].resize(radii.size());
        for (std::size_t ri = 0; ri < radii.size(); ++ri) {
            for (const Vec& off : offsets[ri]) {
                ExtendedPoint v = f.evaluate(x + off);
                for (const ExtendedPoint& prev : values)
                    d = std::max(d, chordal_distance(v, prev));
                values.push_back(v);
            }
            diam[gi][ri] = d;
        }
    });

    OscillationProfile profile;
    profile.radii = radii;
    profile.sup_diameter.assign(radii.size(), 0.0);
    profile.witnesses.assign(radii.size(), grid.front());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        for (std::size_t ri = 0; ri < radii.size(); ++ri) {
            if (diam[gi][ri] > profile.sup_diameter[ri]) {
                profile.sup_diameter[ri] = diam[gi][ri];
                profile.witnesses[ri] = grid[gi];
            }
        }
    }
    return profile;
}

MinOscillation min_oscillation(const Mapping& f, const std::vector<Vec>& grid, double r,
                               int ball_samples, int threads) {
    if (grid.empty()) throw std::invalid_argument("min_oscillation: grid must be non-empty");
    check_ball(f, grid.front(), r);
    if (ball_samples < 8) throw std::invalid_argument("min_oscillation: need >= 8 samples");

    const auto offsets = ball_offsets(f.dim(), r, ball_samples);
    std::vector<double> diam(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t gi) {
        const Vec& x = grid[gi];
        std::vector<ExtendedPoint> values;
        values.reserve(1 + offsets.size());
        values.push_back(f.evaluate(x));
        double d = 0.0;
        for (const Vec& off : offsets) {
            ExtendedPoint v = f.evaluate(x + off);
            for (const ExtendedPoint& prev : values) d = std::max(d, chordal_distance(v, prev));
            values.push_back(v);
        }
        diam[gi] = d;
    });

    MinOscillation out;
    out.radius = r;
    out.value = diam.front();
    out.witness = grid.front();
    for (std::size_t gi = 1; gi < grid.size(); ++gi) {
        if (diam[gi] < out.value) {
            out.value = diam[gi];
            out.witness = grid[gi];
        }
    }
    return out;
}

} // namespace qrlab
