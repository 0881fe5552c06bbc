#include "qrlab/mapping.hpp"

#include "qrlab/counting.hpp"
#include "qrlab/elliptic.hpp"
#include "qrlab/polynomial.hpp"
#include "qrlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace qrlab {

namespace {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
// Argument beyond which exp() is certainly past the pole cap.
constexpr double kExpArgCap = 700.0;

double clamp_unit(double t) { return std::max(-1.0, std::min(1.0, t)); }

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string fmt(const cplx& z) {
    std::ostringstream os;
    os << z.real();
    if (z.imag() >= 0.0)
        os << "+" << z.imag() << "i";
    else
        os << z.imag() << "i";
    return os.str();
}

// log |w| that survives component overflow.
double safe_log_abs(const cplx& w) {
    double a = std::abs(w.real()), b = std::abs(w.imag());
    double m = std::max(a, b);
    if (m == 0.0) return -std::numeric_limits<double>::infinity();
    double s = std::min(a, b) / m;
    return std::log(m) + 0.5 * std::log1p(s * s);
}

// Merge near-coincident hits. `sum` accumulates multiplicities (branches of an
// analytic family landing on the same point); otherwise duplicates keep the
// maximum (the same geometric point reached twice by the search).
std::vector<ApointHit> dedup_hits(std::vector<ApointHit> hits, double tol, bool sum) {
    std::vector<ApointHit> out;
    for (const auto& h : hits) {
        bool merged = false;
        for (auto& o : out) {
            if ((h.location - o.location).norm() <= tol * (1.0 + o.location.norm())) {
                if (sum)
                    o.multiplicity += h.multiplicity;
                else
                    o.multiplicity = std::max(o.multiplicity, h.multiplicity);
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(h);
    }
    return out;
}

// Every enumerator ends here: each claimed a-point must actually map onto a.
void validate_hits(const Mapping& f, const ExtendedPoint& a, const std::vector<ApointHit>& hits) {
    for (const auto& h : hits) {
        if (h.multiplicity < 1)
            throw NumericalError("a-point enumeration produced a non-positive multiplicity");
        double gap = chordal_distance(f.evaluate(h.location), a);
        if (!(gap <= 1e-8))
            throw NumericalError("a-point enumeration failed residual check: q(f(x), a) = " +
                                 fmt(gap));
    }
}

ExtendedPoint cplx_point(const cplx& w) { return ExtendedPoint(Vec(w.real(), w.imag())); }

} // namespace

// ---------------------------------------------------------------------------
// Mapping base
// ---------------------------------------------------------------------------

Mapping::Mapping(int dim, double distortion, std::string kind, std::string label)
    : dim_(dim), distortion_(distortion), kind_(std::move(kind)), label_(std::move(label)) {
    if (dim_ != 2 && dim_ != 3)
        throw std::invalid_argument("mapping dimension must be 2 or 3, got " + std::to_string(dim_));
    if (!(distortion_ >= 1.0) || !std::isfinite(distortion_))
        throw std::invalid_argument("distortion must be a finite number >= 1");
}

double Mapping::alpha() const { return std::pow(distortion_, 1.0 / (1.0 - dim_)); }

void Mapping::check_point(const Vec& x) const {
    if (x.dim() != dim_)
        throw std::invalid_argument("mapping '" + kind_ + "' expects dimension " +
                                    std::to_string(dim_) + ", got point of dimension " +
                                    std::to_string(x.dim()));
}

ExtendedPoint Mapping::evaluate_unclamped(const Vec& x) const {
    check_point(x);
    return evaluate_raw(x);
}

ExtendedPoint Mapping::evaluate(const Vec& x) const {
    ExtendedPoint v = evaluate_unclamped(x);
    if (v.is_infinite()) return v;
    const Vec& w = v.finite();
    for (int i = 0; i < w.dim(); ++i)
        if (std::isnan(w[i])) throw NumericalError("mapping evaluation produced NaN");
    double n = w.norm();
    if (!std::isfinite(n) || n > kPoleCap) return ExtendedPoint::infinity(dim_);
    return v;
}

double Mapping::jacobian(const Vec&) const {
    throw std::invalid_argument("mapping '" + kind_ + "' does not expose a Jacobian");
}

std::vector<ApointHit> Mapping::apoints(const ExtendedPoint&, const Vec&, double) const {
    throw std::invalid_argument("mapping '" + kind_ + "' has no analytic a-point enumerator");
}

cplx Mapping::complex_value(cplx) const {
    throw std::invalid_argument("mapping '" + kind_ + "' has no complex form");
}

cplx Mapping::complex_derivative(cplx) const {
    throw std::invalid_argument("mapping '" + kind_ + "' has no complex derivative");
}

double Mapping::chordal_density(const Vec& x) const {
    double J = jacobian(x);
    ExtendedPoint v = evaluate(x);
    if (v.is_infinite()) return 0.0; // capped neighborhoods contribute below 1e-24
    double s = 1.0 + v.finite().norm_sq();
    return J / std::pow(s, static_cast<double>(dim_));
}

// ---------------------------------------------------------------------------
// Planar specimens (complex coordinates)
// ---------------------------------------------------------------------------

namespace {

// Common scaffolding for dim-2 maps defined through a complex formula.
class ComplexMap : public Mapping {
public:
    ComplexMap(double distortion, std::string kind, std::string label)
        : Mapping(2, distortion, std::move(kind), std::move(label)) {}

    bool has_jacobian() const override { return true; }
    bool has_complex_form() const override { return true; }

    double jacobian(const Vec& x) const override {
        cplx d = complex_derivative(to_complex(x));
        double m = std::abs(d);
        return m * m;
    }

protected:
    ExtendedPoint evaluate_raw(const Vec& x) const override {
        cplx w = complex_value(to_complex(x));
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
            return ExtendedPoint::infinity(2);
        return cplx_point(w);
    }
};

// --- exp(z) ---------------------------------------------------------------

class ExpMap final : public ComplexMap {
public:
    ExpMap() : ComplexMap(1.0, "exponential", "exp(z)") {}

    cplx complex_value(cplx z) const override {
        if (z.real() > kExpArgCap) return {std::numeric_limits<double>::infinity(), 0.0};
        return std::exp(z);
    }
    cplx complex_derivative(cplx z) const override { return complex_value(z); }

    bool has_apoints() const override { return true; }
    bool pole_free() const override { return true; }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> hits;
        if (a.is_infinite()) return hits;                     // omitted value
        cplx av = to_complex(a.finite());
        if (av == cplx(0.0, 0.0)) return hits;                // omitted value
        cplx base = std::log(av);                             // principal branch
        Vec c = center;
        if (std::abs(base.real() - c[0]) > radius) return hits;
        double lo = (c[1] - radius - base.imag()) / kTwoPi;
        double hi = (c[1] + radius - base.imag()) / kTwoPi;
        for (long k = static_cast<long>(std::floor(lo)) - 1;
             k <= static_cast<long>(std::ceil(hi)) + 1; ++k) {
            Vec z(base.real(), base.imag() + kTwoPi * static_cast<double>(k));
            if ((z - c).norm() < radius) hits.push_back({z, 1});
        }
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        // f# = |f'| / (1 + |f|^2) = 1 / (2 cosh x); stable at both ends.
        double c = std::cosh(x[0]);
        if (!std::isfinite(c)) return 0.0;
        return 1.0 / (4.0 * c * c);
    }

    std::string notes() const override {
        return "entire, omits {0, infinity}; a-points climb the vertical 2*pi ladder";
    }
};

// --- sin(z) ---------------------------------------------------------------

class SineMap final : public ComplexMap {
public:
    SineMap() : ComplexMap(1.0, "sine", "sin(z)") {}

    cplx complex_value(cplx z) const override {
        if (std::abs(z.imag()) > kExpArgCap) return {std::numeric_limits<double>::infinity(), 0.0};
        return std::sin(z);
    }
    cplx complex_derivative(cplx z) const override {
        if (std::abs(z.imag()) > kExpArgCap) return {std::numeric_limits<double>::infinity(), 0.0};
        return std::cos(z);
    }

    bool has_apoints() const override { return true; }
    bool pole_free() const override { return true; }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> hits;
        if (a.is_infinite()) return hits;
        cplx av = to_complex(a.finite());
        // Solutions of sin z = a: z = asin(a) + 2 pi k and z = pi - asin(a) + 2 pi k.
        cplx s = std::asin(av);
        const cplx branch[2] = {s, cplx(kPi, 0.0) - s};
        Vec c = center;
        for (int b = 0; b < 2; ++b) {
            double lo = (c[0] - radius - branch[b].real()) / kTwoPi;
            double hi = (c[0] + radius - branch[b].real()) / kTwoPi;
            for (long k = static_cast<long>(std::floor(lo)) - 1;
                 k <= static_cast<long>(std::ceil(hi)) + 1; ++k) {
                Vec z(branch[b].real() + kTwoPi * static_cast<double>(k), branch[b].imag());
                if ((z - c).norm() >= radius) continue;
                // Critical values a = +-1 merge the two branches into double points.
                int mult = (std::abs(std::cos(to_complex(z))) <= 1e-9) ? 2 : 1;
                hits.push_back({z, mult});
            }
        }
        hits = dedup_hits(std::move(hits), 1e-9, /*sum=*/false);
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        double y = x[1];
        if (std::abs(y) > 300.0) {
            // |cos z|^2 ~ |sin z|^2 ~ e^{2|y|}/4; the quotient tends to 4 e^{-2|y|}.
            double t = 2.0 * std::exp(-2.0 * std::abs(y));
            return t * t;
        }
        double sh = std::sinh(y), ch = std::cosh(y);
        double sx = std::sin(x[0]), cx = std::cos(x[0]);
        double num = cx * cx * ch * ch + sx * sx * sh * sh; // |cos z|^2
        double den = 1.0 + sx * sx * ch * ch + cx * cx * sh * sh;
        return num / (den * den);
    }

    std::string notes() const override {
        return "entire, omits only infinity; double a-points over the critical values +-1";
    }
};

// --- exp(z^2) ---------------------------------------------------------------

class ExpSquareMap final : public ComplexMap {
public:
    ExpSquareMap() : ComplexMap(1.0, "exp_square", "exp(z^2)") {}

    cplx complex_value(cplx z) const override {
        cplx z2 = square(z);
        if (z2.real() > kExpArgCap) return {std::numeric_limits<double>::infinity(), 0.0};
        return std::exp(z2);
    }
    cplx complex_derivative(cplx z) const override {
        cplx z2 = square(z);
        if (z2.real() > kExpArgCap) return {std::numeric_limits<double>::infinity(), 0.0};
        return 2.0 * z * std::exp(z2);
    }

    bool has_apoints() const override { return true; }
    bool pole_free() const override { return true; }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> hits;
        if (a.is_infinite()) return hits;
        cplx av = to_complex(a.finite());
        if (av == cplx(0.0, 0.0)) return hits;
        cplx base = std::log(av);
        Vec c = center;
        double cn = c.norm();
        // z^2 = base + 2 pi i k must satisfy |z| < |c| + r, i.e. a bounded |k| window.
        double m2 = (cn + radius) * (cn + radius);
        long kmax = static_cast<long>(std::ceil((m2 + std::abs(base.real())) / kTwoPi)) + 1;
        for (long k = -kmax; k <= kmax; ++k) {
            cplx w = base + cplx(0.0, kTwoPi * static_cast<double>(k));
            cplx root = std::sqrt(w);
            for (int sgn = 0; sgn < 2; ++sgn) {
                cplx zc = (sgn == 0) ? root : -root;
                Vec z(zc.real(), zc.imag());
                if ((z - c).norm() >= radius) continue;
                // z = 0 is the lone critical point (f' = 2 z e^{z^2}).
                int mult = (std::abs(zc) <= 1e-12) ? 2 : 1;
                hits.push_back({z, mult});
            }
        }
        hits = dedup_hits(std::move(hits), 1e-9, /*sum=*/false);
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        // f# = |z| / cosh(Re z^2); exact and pole-stable.
        double re2 = (x[0] - x[1]) * (x[0] + x[1]);
        double c = std::cosh(re2);
        if (!std::isfinite(c)) return 0.0;
        double t = x.norm() / c;
        return t * t;
    }

    std::string notes() const override {
        return "non-Yosida specimen: blows up chordally along the diagonals Re z^2 = 0, "
               "degenerates toward the omitted values {0, infinity} along the axes; "
               "the a-point enumerator covers exactly the quadratic-in-exponent family "
               "z = +-sqrt(log a + 2 pi i k) and nothing beyond it";
    }

private:
    static cplx square(const cplx& z) {
        double x = std::abs(z.real()), y = std::abs(z.imag());
        if (std::max(x, y) < 1e150) return z * z;
        // Componentwise overflow territory: only the sign of Re z^2 matters.
        if (x > y) return {std::numeric_limits<double>::infinity(), 0.0};
        if (y > x) return {-std::numeric_limits<double>::infinity(), 0.0};
        return {0.0, 0.0}; // |Re z^2| unresolvable; modulus 1 is the honest limit
    }
};

// --- z^k and the identity ----------------------------------------------------

cplx ipow(cplx z, int k) {
    cplx r(1.0, 0.0);
    while (k > 0) {
        if (k & 1) r *= z;
        z *= z;
        k >>= 1;
    }
    return r;
}

class PowerMap final : public ComplexMap {
public:
    explicit PowerMap(int exponent)
        : ComplexMap(1.0, exponent == 1 ? "identity" : "power",
                     exponent == 1 ? "z" : "z^" + std::to_string(exponent)),
          k_(exponent) {
        if (exponent < 1 || exponent > 64)
            throw std::invalid_argument("power exponent must lie in [1, 64], got " +
                                        std::to_string(exponent));
    }

    cplx complex_value(cplx z) const override { return ipow(z, k_); }
    cplx complex_derivative(cplx z) const override {
        return static_cast<double>(k_) * ipow(z, k_ - 1);
    }

    bool has_apoints() const override { return true; }
    bool pole_free() const override { return true; }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> hits;
        if (a.is_infinite()) return hits;
        cplx av = to_complex(a.finite());
        Vec c = center;
        if (av == cplx(0.0, 0.0)) {
            Vec origin(0.0, 0.0);
            if ((origin - c).norm() < radius) hits.push_back({origin, k_});
        } else {
            double rho = std::pow(std::abs(av), 1.0 / k_);
            double theta = std::arg(av) / k_;
            bool centred = c[0] == 0.0 && c[1] == 0.0;
            for (int j = 0; j < k_; ++j) {
                double ang = theta + kTwoPi * j / k_;
                Vec z(rho * std::cos(ang), rho * std::sin(ang));
                // Every k-th root sits at |z| = rho algebraically; for a
                // centred ball use that distance so boundary roots do not
                // leak into the open ball through cos/sin rounding.
                double dist = centred ? rho : (z - c).norm();
                if (dist < radius) hits.push_back({z, 1});
            }
        }
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        double n = x.norm();
        if (n == 0.0) return (k_ == 1) ? 1.0 : 0.0;
        double L = std::log(n);
        if (2.0 * k_ * std::abs(L) < 600.0) {
            double fk = static_cast<double>(k_) * std::pow(n, k_ - 1.0);
            double den = 1.0 + std::pow(n, 2.0 * k_);
            double t = fk / den;
            return t * t;
        }
        // log-space once n^{2k} would overflow/underflow
        double logt = std::log(static_cast<double>(k_)) + (k_ - 1.0) * L -
                      (std::max(0.0, 2.0 * k_ * L) +
                       std::log1p(std::exp(-std::abs(2.0 * k_ * L))));
        return std::exp(2.0 * logt);
    }

    int exponent() const { return k_; }

    nlohmann::json parameters() const override {
        return {{"exponent", k_}};
    }

private:
    int k_;
};

// --- rational P/Q ------------------------------------------------------------

std::string poly_str(const Polynomial& p) {
    if (p.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (int d = 0; d <= p.degree(); ++d) {
        cplx c = p.coeffs()[static_cast<std::size_t>(d)];
        if (c == cplx(0.0, 0.0)) continue;
        if (!first) os << " + ";
        first = false;
        if (c.imag() == 0.0)
            os << c.real();
        else
            os << "(" << fmt(c) << ")";
        if (d >= 1) os << "*z";
        if (d >= 2) os << "^" << d;
    }
    return os.str();
}

class RationalMap final : public ComplexMap {
public:
    RationalMap(Polynomial num, Polynomial den)
        : ComplexMap(1.0, "rational", "(" + poly_str(num) + ") / (" + poly_str(den) + ")"),
          num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero())
            throw std::invalid_argument("rational map: denominator is the zero polynomial");
        if (num_.is_zero())
            throw std::invalid_argument("rational map: numerator is the zero polynomial");
        if (std::max(num_.degree(), den_.degree()) < 1)
            throw std::invalid_argument(
                "rational map: both polynomials are constant; use kind 'constant' instead");
        // Shared roots would break counting (a cancelled factor is not an
        // a-point for any a), so require the representation in lowest terms.
        if (den_.degree() >= 1 && num_.degree() >= 1) {
            for (const auto& root : polynomial_roots(den_)) {
                double scale = 0.0, pw = 1.0;
                for (const cplx& c : num_.coeffs()) {
                    scale += std::abs(c) * pw;
                    pw *= std::max(1.0, std::abs(root.location));
                }
                if (std::abs(num_.eval(root.location)) <= 1e-9 * scale)
                    throw std::invalid_argument(
                        "rational map: numerator and denominator share a root; "
                        "reduce the fraction to lowest terms");
            }
        }
        dnum_ = num_.derivative();
        dden_ = den_.derivative();
        rdata_ = RationalData{num_, den_};
    }

    cplx complex_value(cplx z) const override { return num_.eval(z) / den_.eval(z); }
    cplx complex_derivative(cplx z) const override {
        cplx q = den_.eval(z);
        return (dnum_.eval(z) * q - num_.eval(z) * dden_.eval(z)) / (q * q);
    }

    bool has_apoints() const override { return true; }
    bool pole_free() const override { return den_.degree() == 0; }

    const RationalData* rational_data() const override { return &rdata_; }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> hits;
        Polynomial target;
        if (a.is_infinite()) {
            if (den_.degree() == 0) return hits; // polynomial: infinity omitted on C
            target = den_;
        } else {
            cplx av = to_complex(a.finite());
            target = num_.axpy(-av, den_); // P - a Q
            if (target.is_zero())
                throw NumericalError("rational map is identically equal to the requested value");
            if (target.degree() == 0) return hits;
        }
        Vec c = center;
        for (const auto& root : polynomial_roots(target)) {
            Vec z(root.location.real(), root.location.imag());
            if ((z - c).norm() < radius) hits.push_back({z, root.multiplicity});
        }
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        cplx z = to_complex(x);
        cplx p = num_.eval(z), q = den_.eval(z);
        cplx w = dnum_.eval(z) * q - p * dden_.eval(z);
        double den = std::norm(p) + std::norm(q); // |P|^2 + |Q|^2 > 0 (coprime in practice)
        if (den == 0.0) return 0.0;               // common root; measure-zero, harmless
        double t = std::abs(w) / den;
        return t * t;
    }

    nlohmann::json parameters() const override {
        return {{"numerator", coeff_json(num_)}, {"denominator", coeff_json(den_)}};
    }

    std::string notes() const override {
        return "chordally uniformly continuous on the whole sphere; the tame reference point";
    }

private:
    static nlohmann::json coeff_json(const Polynomial& p) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& cpf : p.coeffs()) arr.push_back({cpf.real(), cpf.imag()});
        return arr;
    }

    Polynomial num_, den_, dnum_, dden_;
    RationalData rdata_;
};

// --- Weierstrass-type doubly periodic map -----------------------------------

class EllipticMap final : public ComplexMap {
public:
    EllipticMap(cplx w1, cplx w2)
        : ComplexMap(1.0, "elliptic",
                     "wp(z; " + fmt(w1) + ", " + fmt(w2) + ")"),
          wp_(w1, w2) {}

    cplx complex_value(cplx z) const override {
        if (wp_.is_lattice_point(z)) return {std::numeric_limits<double>::infinity(), 0.0};
        return wp_.p(z);
    }
    cplx complex_derivative(cplx z) const override {
        if (wp_.is_lattice_point(z)) return {std::numeric_limits<double>::infinity(), 0.0};
        return wp_.dp(z);
    }

    bool has_apoints() const override { return true; }
    bool pole_free() const override { return false; }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> base;
        for (const auto& b : wp_.invert(a))
            base.push_back({Vec(b.z.real(), b.z.imag()), b.multiplicity});
        // Replicate each fundamental solution over the period lattice.
        std::vector<ApointHit> hits;
        const cplx w1 = wp_.omega1(), w2 = wp_.omega2();
        const double area = wp_.cell_area();
        Vec c = center;
        cplx cc = to_complex(c);
        for (const auto& b : base) {
            cplx b0 = to_complex(b.location);
            cplx d = cc - b0;
            // Lattice coordinates of d by Cramer's rule.
            double s = (d.real() * w2.imag() - d.imag() * w2.real()) / (w1.real() * w2.imag() - w1.imag() * w2.real());
            double t = (w1.real() * d.imag() - w1.imag() * d.real()) / (w1.real() * w2.imag() - w1.imag() * w2.real());
            long ms = static_cast<long>(std::ceil(radius * std::abs(w2) / area)) + 1;
            long mt = static_cast<long>(std::ceil(radius * std::abs(w1) / area)) + 1;
            for (long i = static_cast<long>(std::llround(s)) - ms; i <= std::llround(s) + ms; ++i) {
                for (long j = static_cast<long>(std::llround(t)) - mt; j <= std::llround(t) + mt; ++j) {
                    cplx zc = b0 + static_cast<double>(i) * w1 + static_cast<double>(j) * w2;
                    Vec z(zc.real(), zc.imag());
                    if ((z - c).norm() < radius) hits.push_back({z, b.multiplicity});
                }
            }
        }
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        cplx z = to_complex(x);
        if (wp_.is_lattice_point(z)) return 0.0; // f# ~ 2|z - lattice| -> 0 at the pole
        cplx p = wp_.p(z), dp = wp_.dp(z);
        double lp = safe_log_abs(p), ldp = safe_log_abs(dp);
        if (lp > 150.0) {
            // |dp| / |p|^2 in log space deep inside a pole funnel.
            double lt = ldp - 2.0 * lp;
            return std::exp(2.0 * lt);
        }
        double t = std::abs(dp) / (1.0 + std::norm(p));
        return t * t;
    }

    const WeierstrassP& engine() const { return wp_; }

    nlohmann::json parameters() const override {
        return {{"omega1", {wp_.omega1().real(), wp_.omega1().imag()}},
                {"omega2", {wp_.omega2().real(), wp_.omega2().imag()}}};
    }

    std::string notes() const override {
        return "doubly periodic with degree 2 per period cell; every sphere value is taken";
    }

private:
    WeierstrassP wp_;
};

// --- planar winding (rho, theta, z) -> (rho, k theta, z) ----------------------

class WindingMap final : public Mapping {
public:
    WindingMap(int k, int dim)
        : Mapping(dim, std::pow(static_cast<double>(k), dim - 1), "winding",
                  "winding(k=" + std::to_string(k) + ", n=" + std::to_string(dim) + ")"),
          k_(k) {
        if (k < 1 || k > 64)
            throw std::invalid_argument("winding index must lie in [1, 64], got " +
                                        std::to_string(k));
    }

    bool has_jacobian() const override { return true; }
    bool has_apoints() const override { return true; }
    bool pole_free() const override { return true; }
    bool has_complex_form() const override { return dim() == 2; }

    cplx complex_value(cplx z) const override {
        if (dim() != 2) return Mapping::complex_value(z);
        double rho = std::abs(z);
        if (rho == 0.0) return {0.0, 0.0};
        return std::polar(rho, static_cast<double>(k_) * std::arg(z));
    }

    double jacobian(const Vec& x) const override {
        // Angular stretch k in the plane orthogonal to the axis; radial factor 1.
        (void)x;
        return static_cast<double>(k_);
    }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> hits;
        if (a.is_infinite()) return hits;
        const Vec& av = a.finite();
        double rho = std::hypot(av[0], av[1]);
        if (rho == 0.0) {
            // The whole axis maps to itself pointwise: a-points are not isolated
            // in dimension 3; in the plane the origin is a k-fold point.
            if (dim() == 3)
                throw NumericalError("winding map: axis values have non-isolated preimages");
            Vec z(0.0, 0.0);
            if ((z - center).norm() < radius) hits.push_back({z, k_});
        } else {
            double theta = std::atan2(av[1], av[0]);
            for (int j = 0; j < k_; ++j) {
                double ang = (theta + kTwoPi * j) / k_;
                Vec z = (dim() == 2) ? Vec(rho * std::cos(ang), rho * std::sin(ang))
                                     : Vec(rho * std::cos(ang), rho * std::sin(ang), av[2]);
                if ((z - center).norm() < radius) hits.push_back({z, 1});
            }
        }
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        double s = 1.0 + x.norm_sq(); // |f(x)| = |x|
        return static_cast<double>(k_) / std::pow(s, static_cast<double>(dim()));
    }

    nlohmann::json parameters() const override {
        return {{"k", k_}, {"dim", dim()}};
    }

    std::string notes() const override {
        return "angular k-fold wrap, radially isometric; the distortion entry follows the "
               "documented k^(n-1) convention rather than a computed bound";
    }

protected:
    ExtendedPoint evaluate_raw(const Vec& x) const override {
        double rho = std::hypot(x[0], x[1]);
        if (rho == 0.0) return ExtendedPoint(dim() == 2 ? Vec(0.0, 0.0) : Vec(0.0, 0.0, x[2]));
        double ang = static_cast<double>(k_) * std::atan2(x[1], x[0]);
        double u = rho * std::cos(ang), v = rho * std::sin(ang);
        return ExtendedPoint(dim() == 2 ? Vec(u, v) : Vec(u, v, x[2]));
    }

private:
    int k_;
};

// --- Zorich map (n = 3) -------------------------------------------------------

class ZorichMap final : public Mapping {
public:
    explicit ZorichMap(double distortion)
        : Mapping(3, distortion, "zorich", "zorich(K=" + fmt(distortion) + ")") {}

    bool has_jacobian() const override { return true; }
    bool has_apoints() const override { return true; }
    bool pole_free() const override { return true; }

    double jacobian(const Vec& x) const override {
        auto [u, v, flip] = fold(x[0], x[1]);
        (void)flip;
        double s = std::max(std::abs(u), std::abs(v));
        double e3 = std::exp(3.0 * x[2]);
        if (s < 1e-12) return e3 * kPi * kPi / 4.0; // axis limit of the polar factor
        double phi = 0.5 * kPi * s;
        return e3 * (0.5 * kPi) * std::sin(phi) * s / (u * u + v * v);
    }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        std::vector<ApointHit> hits;
        if (a.is_infinite()) return hits; // omitted (with 0) by construction
        const Vec& av = a.finite();
        double r3 = av.norm();
        if (r3 == 0.0) return hits;
        double x3 = std::log(r3);
        Vec d = av * (1.0 / r3);
        // Reconstruct the base-square preimage of the direction, then scan the
        //ek = 4 reflections inside one period cell; evaluation filters the
        // spurious ones.
        double phi = std::acos(clamp_unit(std::abs(d[2])));
        double s = 2.0 * phi / kPi;
        double u0 = 0.0, v0 = 0.0;
        if (s > 0.0) {
            double cpsi = d[0], spsi = d[1];
            double m = std::hypot(cpsi, spsi);
            cpsi /= m;
            spsi /= m;
            double scale = s / std::max(std::abs(cpsi), std::abs(spsi));
            u0 = scale * cpsi;
            v0 = scale * spsi;
        }
        const double cand[4][2] = {
            {u0, v0}, {2.0 - u0, v0}, {u0, 2.0 - v0}, {2.0 - u0, 2.0 - v0}};
        std::vector<ApointHit> base;
        for (const auto& cpair : cand) {
            Vec z(cpair[0], cpair[1], x3);
            ExtendedPoint w = evaluate_unclamped(z);
            if (w.is_infinite() || !std::isfinite(w.finite().norm())) continue;
            if ((w.finite() - av).norm() <= 1e-9 * (1.0 + r3)) base.push_back({z, 1});
        }
        base = dedup_hits(std::move(base), 1e-9, /*sum=*/false);
        for (const auto& b : base) {
            long mlo = static_cast<long>(std::floor((center[0] - radius - b.location[0]) / 4.0)) - 1;
            long mhi = static_cast<long>(std::ceil((center[0] + radius - b.location[0]) / 4.0)) + 1;
            long nlo = static_cast<long>(std::floor((center[1] - radius - b.location[1]) / 4.0)) - 1;
            long nhi = static_cast<long>(std::ceil((center[1] + radius - b.location[1]) / 4.0)) + 1;
            for (long m = mlo; m <= mhi; ++m)
                for (long n = nlo; n <= nhi; ++n) {
                    Vec z(b.location[0] + 4.0 * m, b.location[1] + 4.0 * n, x3);
                    if ((z - center).norm() < radius) hits.push_back({z, 1});
                }
        }
        hits = dedup_hits(std::move(hits), 1e-9, /*sum=*/false);
        validate_hits(*this, a, hits);
        return hits;
    }

    double chordal_density(const Vec& x) const override {
        // J / (1 + e^{2 x3})^3 = [polar factor] / (2 cosh x3)^3.
        auto [u, v, flip] = fold(x[0], x[1]);
        (void)flip;
        double s = std::max(std::abs(u), std::abs(v));
        double angular = (s < 1e-12) ? kPi * kPi / 4.0
                                     : (0.5 * kPi) * std::sin(0.5 * kPi * s) * s / (u * u + v * v);
        double c = std::cosh(x[2]);
        if (!std::isfinite(c)) return 0.0;
        return angular / (8.0 * c * c * c);
    }

    nlohmann::json parameters() const override {
        return {{"K", distortion()},
                {"periods", {4.0, 4.0}},
                {"distortion_convention", "configured metadata for the sup-norm square model"}};
    }

    std::string notes() const override {
        return "three-dimensional exponential analogue: square-to-hemisphere spread, "
               "exponential radial stretch, periods 4e1 and 4e2, omits {0, infinity}";
    }

protected:
    ExtendedPoint evaluate_raw(const Vec& x) const override {
        if (x[2] > 28.0) return ExtendedPoint::infinity(3); // e^{28} is past the pole cap
        auto [u, v, flip] = fold(x[0], x[1]);
        double s = std::max(std::abs(u), std::abs(v));
        double r = std::exp(x[2]);
        if (s == 0.0) return ExtendedPoint(Vec(0.0, 0.0, flip ? -r : r));
        double phi = 0.5 * kPi * s;
        double psi = std::atan2(v, u);
        double z3 = std::cos(phi) * (flip ? -1.0 : 1.0);
        return ExtendedPoint(
            Vec(r * std::sin(phi) * std::cos(psi), r * std::sin(phi) * std::sin(psi), r * z3));
    }

private:
    // Fold a coordinate into the base cell [-1, 1] with reflections at the odd
    // integers; `parity` records whether a reflection (hemisphere flip) happened.
    struct Folded {
        double u, v;
        bool flip;
    };
    static Folded fold(double a, double b) {
        auto fold1 = [](double t, bool& parity) {
            double u = t - 4.0 * std::floor((t + 1.0) / 4.0); // [-1, 3)
            if (u > 1.0) {
                parity = !parity;
                return 2.0 - u;
            }
            return u;
        };
        bool parity = false;
        double u = fold1(a, parity);
        double v = fold1(b, parity);
        return {u, v, parity};
    }
};

// --- constant ---------------------------------------------------------------

class ConstantMap final : public Mapping {
public:
    explicit ConstantMap(ExtendedPoint value)
        : Mapping(value.dim(), 1.0, "constant",
                  value.is_infinite() ? "const(infinity)" : "const(" + value.finite().str() + ")"),
          value_(std::move(value)) {}

    bool has_jacobian() const override { return true; }
    double jacobian(const Vec& x) const override {
        check_point(x);
        return 0.0;
    }

    bool has_apoints() const override { return true; }
    bool pole_free() const override { return !value_.is_infinite(); }

    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        (void)center;
        (void)radius;
        if (chordal_distance(a, value_) <= 1e-8)
            throw NumericalError("constant map: a-points of the attained value are not discrete");
        return {};
    }

    bool has_complex_form() const override { return dim() == 2 && !value_.is_infinite(); }
    cplx complex_value(cplx) const override {
        if (!has_complex_form()) throw std::invalid_argument("constant map has no complex form");
        return to_complex(value_.finite());
    }
    cplx complex_derivative(cplx) const override {
        if (!has_complex_form()) throw std::invalid_argument("constant map has no complex form");
        return {0.0, 0.0};
    }

    double chordal_density(const Vec&) const override { return 0.0; }

    nlohmann::json parameters() const override {
        if (value_.is_infinite()) return {{"value", "infinity"}};
        nlohmann::json arr = nlohmann::json::array();
        for (int i = 0; i < value_.finite().dim(); ++i) arr.push_back(value_.finite()[i]);
        return {{"value", arr}};
    }

    std::string notes() const override {
        return "degenerate normal-family limit; counting requests against its own value error out";
    }

protected:
    ExtendedPoint evaluate_raw(const Vec&) const override { return value_; }

private:
    ExtendedPoint value_;
};

// --- affine conjugation wrappers ---------------------------------------------

class PreAffineMap final : public Mapping {
public:
    PreAffineMap(MappingPtr inner, Vec shift, double scale, std::string label)
        : Mapping(inner->dim(), inner->distortion(), inner->kind(), std::move(label)),
          inner_(std::move(inner)), shift_(shift), scale_(scale) {
        if (shift_.dim() != dim())
            throw std::invalid_argument("pre-affine shift dimension mismatch");
        if (!(std::abs(scale_) > 0.0) || !std::isfinite(scale_))
            throw std::invalid_argument("pre-affine scale must be finite and nonzero");
    }

    bool has_jacobian() const override { return inner_->has_jacobian(); }
    double jacobian(const Vec& x) const override {
        check_point(x);
        return std::pow(std::abs(scale_), static_cast<double>(dim())) *
               inner_->jacobian(shift_ + x * scale_);
    }

    bool has_apoints() const override { return inner_->has_apoints(); }
    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        // x -> shift + scale x is a similarity: balls map to balls exactly.
        auto inner_hits =
            inner_->apoints(a, shift_ + center * scale_, radius * std::abs(scale_));
        std::vector<ApointHit> hits;
        hits.reserve(inner_hits.size());
        for (const auto& h : inner_hits)
            hits.push_back({(h.location - shift_) * (1.0 / scale_), h.multiplicity});
        validate_hits(*this, a, hits);
        return hits;
    }

    bool has_complex_form() const override { return inner_->has_complex_form(); }
    cplx complex_value(cplx z) const override {
        return inner_->complex_value(to_complex(shift_) + scale_ * z);
    }
    cplx complex_derivative(cplx z) const override {
        return scale_ * inner_->complex_derivative(to_complex(shift_) + scale_ * z);
    }

    bool pole_free() const override { return inner_->pole_free(); }

    double chordal_density(const Vec& x) const override {
        check_point(x);
        return std::pow(std::abs(scale_), static_cast<double>(dim())) *
               inner_->chordal_density(shift_ + x * scale_);
    }

    // rational_data stays null: the composite's coefficients are not inner_'s.
    nlohmann::json parameters() const override {
        nlohmann::json p = inner_->parameters();
        nlohmann::json sh = nlohmann::json::array();
        for (int i = 0; i < shift_.dim(); ++i) sh.push_back(shift_[i]);
        p["pre_shift"] = sh;
        p["pre_scale"] = scale_;
        return p;
    }
    std::string notes() const override { return inner_->notes(); }

protected:
    ExtendedPoint evaluate_raw(const Vec& x) const override {
        return inner_->evaluate_unclamped(shift_ + x * scale_);
    }

private:
    MappingPtr inner_;
    Vec shift_;
    double scale_;
};

class PostAffineMap final : public Mapping {
public:
    PostAffineMap(MappingPtr inner, Vec shift, double scale)
        : Mapping(inner->dim(), inner->distortion(), inner->kind(),
                  "post_affine[" + inner->label() + "; shift=" + shift.str() +
                      ", scale=" + fmt(scale) + "]"),
          inner_(std::move(inner)), shift_(shift), scale_(scale) {
        if (shift_.dim() != dim())
            throw std::invalid_argument("post-affine shift dimension mismatch");
        if (!(std::abs(scale_) > 0.0) || !std::isfinite(scale_))
            throw std::invalid_argument("post-affine scale must be finite and nonzero");
    }

    bool has_jacobian() const override { return inner_->has_jacobian(); }
    double jacobian(const Vec& x) const override {
        return std::pow(std::abs(scale_), static_cast<double>(dim())) * inner_->jacobian(x);
    }

    bool has_apoints() const override { return inner_->has_apoints(); }
    std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                   double radius) const override {
        ExtendedPoint pre = a.is_infinite()
                                ? ExtendedPoint::infinity(dim())
                                : ExtendedPoint((a.finite() - shift_) * (1.0 / scale_));
        auto hits = inner_->apoints(pre, center, radius);
        validate_hits(*this, a, hits);
        return hits;
    }

    bool has_complex_form() const override { return inner_->has_complex_form(); }
    cplx complex_value(cplx z) const override {
        return to_complex(shift_) + scale_ * inner_->complex_value(z);
    }
    cplx complex_derivative(cplx z) const override {
        return scale_ * inner_->complex_derivative(z);
    }

    bool pole_free() const override { return inner_->pole_free(); }

    nlohmann::json parameters() const override {
        nlohmann::json p = inner_->parameters();
        nlohmann::json sh = nlohmann::json::array();
        for (int i = 0; i < shift_.dim(); ++i) sh.push_back(shift_[i]);
        p["post_shift"] = sh;
        p["post_scale"] = scale_;
        return p;
    }
    std::string notes() const override { return inner_->notes(); }

protected:
    ExtendedPoint evaluate_raw(const Vec& x) const override {
        ExtendedPoint v = inner_->evaluate_unclamped(x);
        if (v.is_infinite()) return v;
        return ExtendedPoint(shift_ + v.finite() * scale_);
    }

private:
    MappingPtr inner_;
    Vec shift_;
    double scale_;
};

} // namespace

// ---------------------------------------------------------------------------
// Factories and transforms
// ---------------------------------------------------------------------------

MappingPtr make_exponential() { return std::make_shared<ExpMap>(); }
MappingPtr make_sine() { return std::make_shared<SineMap>(); }
MappingPtr make_exp_square() { return std::make_shared<ExpSquareMap>(); }
MappingPtr make_identity() { return std::make_shared<PowerMap>(1); }
MappingPtr make_power(int exponent) { return std::make_shared<PowerMap>(exponent); }
MappingPtr make_rational(Polynomial num, Polynomial den) {
    return std::make_shared<RationalMap>(std::move(num), std::move(den));
}
MappingPtr make_elliptic(std::complex<double> omega1, std::complex<double> omega2) {
    return std::make_shared<EllipticMap>(omega1, omega2);
}
MappingPtr make_winding(int k, int dim) { return std::make_shared<WindingMap>(k, dim); }
MappingPtr make_zorich(double distortion) { return std::make_shared<ZorichMap>(distortion); }
MappingPtr make_constant(const ExtendedPoint& value) {
    return std::make_shared<ConstantMap>(value);
}

MappingPtr translate(MappingPtr f, const Vec& a) {
    std::string label = "translate[" + f->label() + "; a=" + a.str() + "]";
    return std::make_shared<PreAffineMap>(std::move(f), a, 1.0, std::move(label));
}

MappingPtr p_rescale(MappingPtr f, const Vec& a, double p) {
    if (a.dim() != f->dim())
        throw std::invalid_argument("p_rescale: anchor dimension does not match the map");
    double an = a.norm();
    if (!(an > 0.0) || !std::isfinite(an))
        throw std::invalid_argument("p_rescale requires a finite nonzero anchor");
    if (!(p >= 1.0) || !std::isfinite(p))
        throw std::invalid_argument("p_rescale requires p >= 1");
    double scale = std::pow(an, 2.0 - p);
    std::string label =
        "p_rescale[" + f->label() + "; a=" + a.str() + ", p=" + fmt(p) + "]";
    return std::make_shared<PreAffineMap>(std::move(f), a, scale, std::move(label));
}

MappingPtr pre_affine(MappingPtr f, const Vec& shift, double scale) {
    std::string label = "pre_affine[" + f->label() + "; shift=" + shift.str() +
                        ", scale=" + fmt(scale) + "]";
    return std::make_shared<PreAffineMap>(std::move(f), shift, scale, std::move(label));
}

MappingPtr post_affine(MappingPtr f, const Vec& shift, double scale) {
    return std::make_shared<PostAffineMap>(std::move(f), shift, scale);
}

// ---------------------------------------------------------------------------
// Generic enumerator with argument-principle control
// ---------------------------------------------------------------------------

namespace {

// Multistart Newton for dim-2 maps with a complex form; the argument
// principle fixes the multiplicity mass the search must account for.
std::vector<ApointHit> fallback_apoints(const Mapping& f, const ExtendedPoint& a,
                                        const Vec& center, double radius) {
    if (f.dim() != 2 || !f.has_complex_form())
        throw std::invalid_argument(
            "no analytic enumerator and no complex form for the generic a-point search");
    if (a.is_infinite()) {
        if (f.pole_free()) return {};
        throw std::invalid_argument(
            "generic a-point search does not handle poles; the map must provide an enumerator");
    }

    long expected = count_apoints(f, center, radius, a, CountMethod::ArgumentPrinciple).count;
    if (expected == 0) return {};

    cplx av = to_complex(a.finite());
    cplx c0 = to_complex(center);

    std::vector<ApointHit> hits;
    long found = 0;
    std::size_t starts = std::max<std::size_t>(64, static_cast<std::size_t>(8 * expected));
    for (int round = 0; round < 4 && found != expected; ++round, starts *= 4) {
        std::vector<cplx> roots;
        KroneckerSequence<2> seq(hash_combine(0x9d1fb3c21e4ull, static_cast<std::uint64_t>(round)));
        for (std::size_t i = 0; i < starts; ++i) {
            auto u = seq.point(i);
            double rho = radius * std::sqrt(u[0]);
            double ang = kTwoPi * u[1];
            cplx z = c0 + std::polar(rho, ang);
            bool ok = false;
            for (int it = 0; it < 60; ++it) {
                cplx val = f.complex_value(z) - av;
                cplx der = f.complex_derivative(z);
                if (!std::isfinite(val.real()) || !std::isfinite(val.imag()) ||
                    !std::isfinite(der.real()) || !std::isfinite(der.imag()))
                    break;
                if (std::abs(der) == 0.0) break;
                cplx step = val / der;
                double cap = 0.25 * radius;
                if (std::abs(step) > cap) step *= cap / std::abs(step);
                z -= step;
                if (std::abs(z - c0) > 1.5 * radius) break;
                if (std::abs(val) <= 1e-13 * (1.0 + std::abs(av))) {
                    ok = true;
                    break;
                }
            }
            if (!ok) continue;
            if (std::abs(z - c0) >= radius) continue;
            if (chordal_distance(f.evaluate(Vec(z.real(), z.imag())), a) > 1e-9) continue;
            bool dup = false;
            for (const auto& r : roots)
                // Newton stalls to linear convergence on multiple roots, so
                // their approximations arrive as a ~1e-7-wide cluster; merge
                // generously and let the multiplicity circle count the mass.
                if (std::abs(r - z) <= 1e-6 * (1.0 + std::abs(r))) {
                    dup = true;
                    break;
                }
            if (!dup) roots.push_back(z);
        }
        hits.clear();
        found = 0;
        for (const auto& z : roots) {
            // Local index from a tight argument-principle circle.
            double clearance = radius - std::abs(z - c0);
            for (const auto& r : roots)
                if (&r != &z) clearance = std::min(clearance, std::abs(r - z));
            double rho = std::min(1e-3 * (1.0 + std::abs(z)), 0.45 * clearance);
            if (!(rho > 0.0)) continue;
            // A multiplicity-m root pushes |f - a| on the circle down to
            // rho^m, which can sit exactly on the winding margin gate; widen
            // the circle (never past the clearance) until the gate clears.
            long mult = 0;
            bool counted = false;
            for (int attempt = 0; attempt < 4 && !counted; ++attempt) {
                try {
                    mult = winding_count(f, Vec(z.real(), z.imag()), rho, a).count;
                    counted = true;
                } catch (const MarginViolation&) {
                    double wider = std::min(3.7 * rho, 0.45 * clearance);
                    if (!(wider > rho)) break;
                    rho = wider;
                }
            }
            if (!counted || mult < 1) continue;
            hits.push_back({Vec(z.real(), z.imag()), static_cast<int>(mult)});
            found += mult;
        }
    }
    if (found != expected)
        throw NumericalError(
            "generic a-point search found multiplicity " + std::to_string(found) +
            " but the argument principle expects " + std::to_string(expected));
    validate_hits(f, a, hits);
    return hits;
}

} // namespace

std::vector<ApointHit> enumerate_apoints(const Mapping& f, const ExtendedPoint& a,
                                         const Vec& center, double radius) {
    if (center.dim() != f.dim())
        throw std::invalid_argument("enumerate_apoints: center dimension mismatch");
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("enumerate_apoints: radius must be positive and finite");
    if (f.has_apoints()) return f.apoints(a, center, radius);
    return fallback_apoints(f, a, center, radius);
}

// ---------------------------------------------------------------------------
// Catalog and descriptors
// ---------------------------------------------------------------------------

namespace {

MapInfo info_for(const MappingPtr& m, bool yosida) {
    MapInfo info;
    info.kind = m->kind();
    info.summary = m->label();
    info.dim = m->dim();
    info.distortion = m->distortion();
    info.yosida_expected = yosida;
    info.has_jacobian = m->has_jacobian();
    info.has_apoints = m->has_apoints();
    info.has_complex_form = m->has_complex_form();
    info.parameters = m->parameters();
    info.notes = m->notes();
    return info;
}

} // namespace

std::vector<MapInfo> list_zoo() {
    std::vector<MapInfo> out;
    out.push_back(info_for(make_exponential(), true));
    out.push_back(info_for(make_sine(), true));
    out.push_back(info_for(make_exp_square(), false));
    out.push_back(info_for(
        make_rational(Polynomial({{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}),
                      Polynomial({{1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}})),
        true));
    out.push_back(info_for(make_elliptic(), true));
    out.push_back(info_for(make_power(2), true));
    out.push_back(info_for(make_identity(), true));
    out.push_back(info_for(make_winding(2, 2), true));
    out.push_back(info_for(make_zorich(), true));
    out.push_back(info_for(make_constant(ExtendedPoint(Vec(0.0, 0.0))), true));
    return out;
}

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& key, const std::string& ctx) {
    throw std::invalid_argument("unknown field '" + key + "' in " + ctx);
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) bad_field(it.key(), ctx);
    }
}

double parse_number(const json& v, const std::string& ctx) {
    if (!v.is_number()) throw std::invalid_argument(ctx + " must be a number");
    return v.get<double>();
}

cplx parse_cplx(const json& v, const std::string& ctx) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw std::invalid_argument(ctx + " must be a number or a [re, im] pair");
}

Polynomial parse_poly(const json& v, const std::string& ctx) {
    if (!v.is_array() || v.empty())
        throw std::invalid_argument(ctx + " must be a non-empty coefficient array");
    std::vector<cplx> coeffs;
    coeffs.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        coeffs.push_back(parse_cplx(v[i], ctx + "[" + std::to_string(i) + "]"));
    return Polynomial(coeffs);
}

Vec parse_vec(const json& v, const std::string& ctx) {
    if (!v.is_array() || (v.size() != 2 && v.size() != 3))
        throw std::invalid_argument(ctx + " must be an array of 2 or 3 numbers");
    std::vector<double> comps;
    for (std::size_t i = 0; i < v.size(); ++i)
        comps.push_back(parse_number(v[i], ctx + "[" + std::to_string(i) + "]"));
    return Vec(comps);
}

int parse_int(const json& v, const std::string& ctx) {
    if (!v.is_number_integer()) throw std::invalid_argument(ctx + " must be an integer");
    return v.get<int>();
}

} // namespace

MappingPtr make_zoo_map(const nlohmann::json& descriptor) {
    if (!descriptor.is_object())
        throw std::invalid_argument("map descriptor must be a JSON object");
    if (!descriptor.contains("kind"))
        throw std::invalid_argument("map descriptor is missing the 'kind' field");
    if (!descriptor["kind"].is_string())
        throw std::invalid_argument("map descriptor 'kind' must be a string");
    const std::string kind = descriptor["kind"].get<std::string>();
    const std::string ctx = "map descriptor (kind='" + kind + "')";

    MappingPtr base;
    if (kind == "exponential") {
        require_keys(descriptor, {"kind", "pre", "post"}, ctx);
        base = make_exponential();
    } else if (kind == "sine") {
        require_keys(descriptor, {"kind", "pre", "post"}, ctx);
        base = make_sine();
    } else if (kind == "exp_square") {
        require_keys(descriptor, {"kind", "pre", "post"}, ctx);
        base = make_exp_square();
    } else if (kind == "identity") {
        require_keys(descriptor, {"kind", "pre", "post"}, ctx);
        base = make_identity();
    } else if (kind == "power") {
        require_keys(descriptor, {"kind", "exponent", "pre", "post"}, ctx);
        if (!descriptor.contains("exponent"))
            throw std::invalid_argument(ctx + ": missing 'exponent'");
        base = make_power(parse_int(descriptor["exponent"], ctx + ".exponent"));
    } else if (kind == "rational") {
        require_keys(descriptor, {"kind", "numerator", "denominator", "pre", "post"}, ctx);
        if (!descriptor.contains("numerator") || !descriptor.contains("denominator"))
            throw std::invalid_argument(ctx + ": needs 'numerator' and 'denominator'");
        base = make_rational(parse_poly(descriptor["numerator"], ctx + ".numerator"),
                             parse_poly(descriptor["denominator"], ctx + ".denominator"));
    } else if (kind == "elliptic") {
        require_keys(descriptor, {"kind", "omega1", "omega2", "pre", "post"}, ctx);
        cplx w1(2.0, 0.0), w2(0.0, 2.0);
        if (descriptor.contains("omega1")) w1 = parse_cplx(descriptor["omega1"], ctx + ".omega1");
        if (descriptor.contains("omega2")) w2 = parse_cplx(descriptor["omega2"], ctx + ".omega2");
        base = make_elliptic(w1, w2);
    } else if (kind == "winding") {
        require_keys(descriptor, {"kind", "k", "dim", "pre", "post"}, ctx);
        if (!descriptor.contains("k")) throw std::invalid_argument(ctx + ": missing 'k'");
        int d = descriptor.contains("dim") ? parse_int(descriptor["dim"], ctx + ".dim") : 2;
        base = make_winding(parse_int(descriptor["k"], ctx + ".k"), d);
    } else if (kind == "zorich") {
        require_keys(descriptor, {"kind", "K", "pre", "post"}, ctx);
        double K = descriptor.contains("K") ? parse_number(descriptor["K"], ctx + ".K") : 10.0;
        base = make_zorich(K);
    } else if (kind == "constant") {
        require_keys(descriptor, {"kind", "value", "dim", "pre", "post"}, ctx);
        if (!descriptor.contains("value")) throw std::invalid_argument(ctx + ": missing 'value'");
        const json& v = descriptor["value"];
        ExtendedPoint value;
        if (v.is_string() && v.get<std::string>() == "infinity") {
            int d = descriptor.contains("dim") ? parse_int(descriptor["dim"], ctx + ".dim") : 2;
            value = ExtendedPoint::infinity(d);
        } else {
            Vec val = parse_vec(v, ctx + ".value");
            if (descriptor.contains("dim") &&
                parse_int(descriptor["dim"], ctx + ".dim") != val.dim())
                throw std::invalid_argument(ctx + ": 'dim' contradicts the value dimension");
            value = ExtendedPoint(val);
        }
        base = make_constant(value);
    } else {
        throw std::invalid_argument("unknown map kind '" + kind + "'");
    }

    if (descriptor.contains("pre")) {
        const json& p = descriptor["pre"];
        if (!p.is_object()) throw std::invalid_argument(ctx + ".pre must be an object");
        require_keys(p, {"shift", "scale"}, ctx + ".pre");
        Vec shift =
            p.contains("shift") ? parse_vec(p["shift"], ctx + ".pre.shift") : Vec::zero(base->dim());
        double scale = p.contains("scale") ? parse_number(p["scale"], ctx + ".pre.scale") : 1.0;
        base = pre_affine(std::move(base), shift, scale);
    }
    if (descriptor.contains("post")) {
        const json& p = descriptor["post"];
        if (!p.is_object()) throw std::invalid_argument(ctx + ".post must be an object");
        require_keys(p, {"shift", "scale"}, ctx + ".post");
        Vec shift = p.contains("shift") ? parse_vec(p["shift"], ctx + ".post.shift")
                                        : Vec::zero(base->dim());
        double scale = p.contains("scale") ? parse_number(p["scale"], ctx + ".post.scale") : 1.0;
        base = post_affine(std::move(base), shift, scale);
    }
    return base;
}

} // namespace qrlab
