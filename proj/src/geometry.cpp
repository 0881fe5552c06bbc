#include "qrlab/geometry.hpp"

#include "qrlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qrlab {

namespace {

constexpr double kHugeNorm = 1e100; // above this, 1+|a|^2 is |a|^2 to 1e-200

void check_dim(int n, const char* where) {
    if (n < 2 || n > 3) {
        throw std::invalid_argument(std::string(where) +
                                    ": dimension must be 2 or 3, got " + std::to_string(n));
    }
}

void check_same_dim(int a, int b, const char* where) {
    if (a != b) {
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

// sqrt(1+|a|^2) without squaring huge norms.
double chordal_scale(double norm) {
    if (norm <= kHugeNorm) return std::sqrt(1.0 + norm * norm);
    return norm;
}

} // namespace

namespace detail {

double stable_norm(double x, double y) { return std::hypot(x, y); }
double stable_norm(double x, double y, double z) { return std::hypot(x, y, z); }

double point_distance(const Vec& a, const Vec& b) {
    check_same_dim(a.dim(), b.dim(), "point_distance");
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i) m = std::max(m, std::max(std::abs(a[i]), std::abs(b[i])));
    if (m <= 1e150) {
        if (a.dim() == 2) return stable_norm(a[0] - b[0], a[1] - b[1]);
        return stable_norm(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    }
    // Divide before subtracting so no intermediate overflows.
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        double d = a[i] / m - b[i] / m;
        s += d * d;
    }
    return m * std::sqrt(s);
}

} // namespace detail

Vec::Vec(std::span<const double> coords) : n_(static_cast<int>(coords.size())), c_{0.0, 0.0, 0.0} {
    check_dim(n_, "Vec");
    for (int i = 0; i < n_; ++i) {
        if (!std::isfinite(coords[static_cast<std::size_t>(i)])) {
            throw std::invalid_argument("Vec: coordinate is not finite");
        }
        c_[static_cast<std::size_t>(i)] = coords[static_cast<std::size_t>(i)];
    }
}

Vec Vec::zero(int n) {
    check_dim(n, "Vec::zero");
    return n == 2 ? Vec(0.0, 0.0) : Vec(0.0, 0.0, 0.0);
}

double Vec::norm_sq() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += c_[static_cast<std::size_t>(i)] * c_[static_cast<std::size_t>(i)];
    return s;
}

double Vec::norm() const {
    return n_ == 2 ? detail::stable_norm(c_[0], c_[1]) : detail::stable_norm(c_[0], c_[1], c_[2]);
}

Vec& Vec::operator+=(const Vec& o) {
    check_same_dim(n_, o.n_, "Vec::operator+=");
    for (int i = 0; i < n_; ++i) c_[static_cast<std::size_t>(i)] += o.c_[static_cast<std::size_t>(i)];
    return *this;
}

Vec& Vec::operator-=(const Vec& o) {
    check_same_dim(n_, o.n_, "Vec::operator-=");
    for (int i = 0; i < n_; ++i) c_[static_cast<std::size_t>(i)] -= o.c_[static_cast<std::size_t>(i)];
    return *this;
}

Vec& Vec::operator*=(double s) {
    for (int i = 0; i < n_; ++i) c_[static_cast<std::size_t>(i)] *= s;
    return *this;
}

std::string Vec::str() const {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < n_; ++i) os << (i ? ", " : "") << c_[static_cast<std::size_t>(i)];
    os << ')';
    return os.str();
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator*(double s, Vec a) { return a *= s; }

double dot(const Vec& a, const Vec& b) {
    check_same_dim(a.dim(), b.dim(), "dot");
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

ExtendedPoint::ExtendedPoint(const Vec& v) : finite_(v), infinite_(false) {}

ExtendedPoint ExtendedPoint::infinity(int n) {
    check_dim(n, "ExtendedPoint::infinity");
    ExtendedPoint p;
    p.finite_ = Vec::zero(n);
    p.infinite_ = true;
    return p;
}

const Vec& ExtendedPoint::finite() const {
    if (infinite_) throw std::invalid_argument("ExtendedPoint: point is infinite");
    return finite_;
}

std::string ExtendedPoint::str() const { return infinite_ ? "inf" : finite_.str(); }

double chordal_distance(const ExtendedPoint& a, const ExtendedPoint& b) {
    check_same_dim(a.dim(), b.dim(), "chordal_distance");
    if (a.is_infinite() && b.is_infinite()) return 0.0;
    if (a.is_infinite() || b.is_infinite()) {
        const Vec& v = (a.is_infinite() ? b : a).finite();
        double n = v.norm();
        if (n <= kHugeNorm) return 1.0 / std::sqrt(1.0 + n * n);
        return 1.0 / n;
    }
    const Vec& va = a.finite();
    const Vec& vb = b.finite();
    double na = va.norm();
    double nb = vb.norm();
    double q;
    if (na <= 1e75 && nb <= 1e75) {
        // One rounding for the whole denominator keeps antipodal pairs (and
        // symmetry in the arguments) exact: q(e1, -e1) = 2 / sqrt(4) = 1.
        q = detail::point_distance(va, vb) / std::sqrt((1.0 + na * na) * (1.0 + nb * nb));
    } else {
        q = (detail::point_distance(va, vb) / chordal_scale(na)) / chordal_scale(nb);
    }
    return std::min(q, 1.0);
}

double spherical_diameter(std::span<const ExtendedPoint> points) {
    if (points.empty()) throw std::invalid_argument("spherical_diameter: empty point set");
    double d = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            d = std::max(d, chordal_distance(points[i], points[j]));
        }
    }
    return d;
}

WeightedBall::WeightedBall(const Vec& a, double r, double p_) : center(a), radius(r), p(p_) {
    if (a.norm() == 0.0) throw std::invalid_argument("WeightedBall: center must be nonzero");
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("WeightedBall: radius must be positive");
    if (!(p_ >= 1.0) || !std::isfinite(p_)) throw std::invalid_argument("WeightedBall: p must be >= 1");
}

double WeightedBall::effective_radius() const {
    return radius * std::pow(center.norm(), 2.0 - p);
}

bool WeightedBall::contains(const Vec& x) const {
    check_same_dim(x.dim(), center.dim(), "WeightedBall::contains");
    return detail::point_distance(x, center) < effective_radius();
}

double lambda_n(int n) {
    if (n < 2) throw std::invalid_argument("lambda_n: n must be >= 2");
    double nd = static_cast<double>(n);
    return std::exp(0.5 * nd * std::log(M_PI) + std::lgamma(0.5 * nd) - std::lgamma(nd));
}

namespace {

// CDF of the polar angle on S^3 (density proportional to sin^2): monotone, so
// a plain bisection is enough and is bit-stable across platforms.
double s3_polar_from_uniform(double u) {
    double lo = 0.0, hi = M_PI;
    for (int it = 0; it < 70; ++it) {
        double mid = 0.5 * (lo + hi);
        double cdf = (mid - std::sin(mid) * std::cos(mid)) / M_PI;
        (cdf < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double chordal_radius_quantile(int n, double u) {
    check_dim(n, "chordal_radius_quantile");
    if (!(u >= 0.0) || !(u < 1.0)) {
        throw std::invalid_argument("chordal_radius_quantile: u must lie in [0,1)");
    }
    if (n == 2) return std::sqrt(u / (1.0 - u));
    return std::tan(0.5 * s3_polar_from_uniform(u));
}

std::vector<ExtendedPoint> sample_sphere_values(int n, int count, std::uint64_t seed) {
    check_dim(n, "sample_sphere_values");
    if (count < 1) throw std::invalid_argument("sample_sphere_values: count must be >= 1");
    std::vector<ExtendedPoint> out;
    out.reserve(static_cast<std::size_t>(count));
    if (n == 2) {
        // Fibonacci lattice on S^2, stereographically projected to the plane.
        Rng rng(hash_combine(seed, 0x5f0e));
        double offset = rng.uniform();
        const double golden = 0.6180339887498949;
        for (int i = 0; i < count; ++i) {
            double z = 1.0 - (2.0 * i + 1.0) / count;
            double t = golden * i + offset;
            double phi = 2.0 * M_PI * (t - std::floor(t));
            double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            // |y| = sqrt((1+z)/(1-z)) is the stereographic radius.
            double r = rho / (1.0 - z);
            out.emplace_back(Vec(r * std::cos(phi), r * std::sin(phi)));
        }
        return out;
    }
    KroneckerSequence<3> seq(hash_combine(seed, 0x5f0f));
    for (int i = 0; i < count; ++i) {
        auto u = seq.point(static_cast<std::uint64_t>(i));
        double r = std::tan(0.5 * s3_polar_from_uniform(std::min(u[0], 1.0 - 1e-12)));
        double ctheta = 1.0 - 2.0 * u[1];
        double stheta = std::sqrt(std::max(0.0, 1.0 - ctheta * ctheta));
        double phi = 2.0 * M_PI * u[2];
        out.emplace_back(Vec(r * stheta * std::cos(phi), r * stheta * std::sin(phi), r * ctheta));
    }
    return out;
}

std::vector<Vec> sphere_directions(int n, int count, std::uint64_t seed) {
    check_dim(n, "sphere_directions");
    if (count < 1) throw std::invalid_argument("sphere_directions: count must be >= 1");
    Rng rng(hash_combine(seed, 0xd18));
    double offset = rng.uniform();
    std::vector<Vec> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    if (n == 2) {
        for (int j = 0; j < count; ++j) {
            double th = 2.0 * M_PI * (j + offset) / count;
            dirs.emplace_back(std::cos(th), std::sin(th));
        }
        return dirs;
    }
    const double golden = 0.6180339887498949;
    for (int j = 0; j < count; ++j) {
        double z = 1.0 - (2.0 * j + 1.0) / count;
        double t = golden * j + offset;
        double phi = 2.0 * M_PI * (t - std::floor(t));
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        dirs.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
    }
    return dirs;
}

} // namespace qrlab
