#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrlab {

// Error taxonomy shared by all modules.
//  - std::invalid_argument: precondition/config violations (CLI exit code 2).
//  - NumericalError: a numeric routine could not deliver its contract
//    (CLI exit code 3). MarginViolation is the boundary-margin special case.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MarginViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Finite point of R^n. Dimensions 2 and 3 cover the whole laboratory; the
// coordinates live inline so bulk sampling never touches the heap.
class Vec {
public:
    Vec() : n_(2), c_{0.0, 0.0, 0.0} {}
    Vec(double x, double y) : n_(2), c_{x, y, 0.0} {}
    Vec(double x, double y, double z) : n_(3), c_{x, y, z} {}
    explicit Vec(std::span<const double> coords);

    static Vec zero(int n);

    int dim() const { return n_; }
    double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

    double norm_sq() const;
    double norm() const; // overflow-safe

    Vec& operator+=(const Vec& o);
    Vec& operator-=(const Vec& o);
    Vec& operator*=(double s);

    std::string str() const;

private:
    int n_;
    std::array<double, 3> c_;
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator*(double s, Vec a);
inline Vec operator*(Vec a, double s) {
    a *= s;
    return a;
}
double dot(const Vec& a, const Vec& b);

inline std::complex<double> to_complex(const Vec& v) {
    if (v.dim() != 2) throw std::invalid_argument("to_complex: point is not planar");
    return {v[0], v[1]};
}
inline Vec from_complex(std::complex<double> z) { return {z.real(), z.imag()}; }

// Point of the compactified space R^n ∪ {infinity}; the universal value and
// argument type. Finite coordinates are checked: NaN/Inf never leak in.
class ExtendedPoint {
public:
    ExtendedPoint() : finite_(Vec::zero(2)), infinite_(false) {}
    ExtendedPoint(const Vec& v); // implicit: finite points promote freely
    static ExtendedPoint infinity(int n);

    bool is_infinite() const { return infinite_; }
    int dim() const { return finite_.dim(); }
    const Vec& finite() const; // throws if infinite

    std::string str() const;

private:
    Vec finite_;
    bool infinite_;
};

// Chordal distance q(a,b) = |a-b| / (sqrt(1+|a|^2) sqrt(1+|b|^2)),
// q(a,inf) = 1 / sqrt(1+|a|^2). Symmetric, bounded by 1, and exact for
// coordinates up to 1e150 (large norms are factored out, never squared raw).
double chordal_distance(const ExtendedPoint& a, const ExtendedPoint& b);

// Largest pairwise chordal distance of a finite point set (diameter of the
// spherical image). Errors on an empty set.
double spherical_diameter(std::span<const ExtendedPoint> points);

// Weighted ball B_p(a, r) = { x : |x - a| < r |a|^(2-p) }, a != 0, p >= 1.
// p = 2 is the Euclidean ball; p < 2 grows and p > 2 shrinks with |a|.
struct WeightedBall {
    Vec center;
    double radius;
    double p;

    WeightedBall(const Vec& a, double r, double p);
    double effective_radius() const;
    bool contains(const Vec& x) const;
};

// Deterministic low-discrepancy point set on the chordal sphere, returned in
// R^n ∪ {inf} coordinates (large-norm points approach infinity). For n = 2 a
// Fibonacci lattice on S^2 is pushed through stereographic projection; n = 3
// uses an R_3 Kronecker sequence through the S^3 area parametrization.
std::vector<ExtendedPoint> sample_sphere_values(int n, int count, std::uint64_t seed);

// Deterministic near-uniform unit directions of R^n (probe directions for the
// Hoelder ladder). The set depends only on (n, count, seed).
std::vector<Vec> sphere_directions(int n, int count, std::uint64_t seed);

// lambda_n = ∫_{R^n} (1+|y|^2)^(-n) dm(y) = pi^(n/2) Gamma(n/2) / Gamma(n);
// lambda_2 = pi, lambda_3 = pi^2/4. Errors when n < 2.
double lambda_n(int n);

// Radius t >= 0 with P(|Y| <= t) = u for Y distributed by the normalized
// chordal measure on R^n; the inverse-transform kernel behind value sampling.
double chordal_radius_quantile(int n, double u);

namespace detail {
// Stable |a-b| and norm helpers shared by geometry and mapping code.
double stable_norm(double x, double y);
double stable_norm(double x, double y, double z);
double point_distance(const Vec& a, const Vec& b);
} // namespace detail

} // namespace qrlab
