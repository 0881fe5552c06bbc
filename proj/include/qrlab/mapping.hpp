#pragma once

#include "qrlab/geometry.hpp"
#include "qrlab/polynomial.hpp"

#include <json.hpp>

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace qrlab {

// Values whose norm exceeds this cap are identified with infinity by
// Mapping::evaluate; chordally they sit within 1e-12 of the north pole, so
// the identification is invisible at working tolerances.
inline constexpr double kPoleCap = 1e12;

// An a-point with its local topological index.
struct ApointHit {
    Vec location;
    int multiplicity;
};

// A specimen of the mapping zoo: a quasiregular map R^n -> R^n ∪ {inf},
// n in {2, 3}, carrying its distortion constant K and whatever analytic
// structure it can honestly expose (Jacobian, a-point enumerator, complex
// form). Everything is immutable after construction and safe to share.
class Mapping {
public:
    using cplx = std::complex<double>;

    virtual ~Mapping() = default;
    Mapping(const Mapping&) = delete;
    Mapping& operator=(const Mapping&) = delete;

    int dim() const { return dim_; }
    double distortion() const { return distortion_; }
    // alpha = K^(1/(1-n)), the inner Hoelder exponent of the distortion class.
    double alpha() const;
    const std::string& kind() const { return kind_; }
    const std::string& label() const { return label_; }

    // Total evaluation: finite values with norm > kPoleCap collapse to
    // infinity, so pole neighborhoods never leak astronomical coordinates.
    ExtendedPoint evaluate(const Vec& x) const;

    // Raw evaluation without the cap (composition layers apply it once, at
    // the outermost evaluate). Overflowing values still come back as infinity.
    ExtendedPoint evaluate_unclamped(const Vec& x) const;

    virtual bool has_jacobian() const { return false; }
    virtual double jacobian(const Vec& x) const;

    // Multiplicity-weighted a-points inside the open ball B(center, radius).
    virtual bool has_apoints() const { return false; }
    virtual std::vector<ApointHit> apoints(const ExtendedPoint& a, const Vec& center,
                                           double radius) const;

    // Complex form for planar specimens (uncapped; may overflow to inf).
    virtual bool has_complex_form() const { return false; }
    virtual cplx complex_value(cplx z) const;
    virtual cplx complex_derivative(cplx z) const;

    // True when the map never attains infinity on R^n.
    virtual bool pole_free() const { return false; }

    // Spherical density J(x, f) / (1 + |f(x)|^2)^n, implemented per map in a
    // pole-stable closed form; the integrand of the domain route for A_f(r).
    virtual double chordal_density(const Vec& x) const;

    // Exposed for rational specimens (numerator, denominator); null otherwise.
    struct RationalData {
        Polynomial numerator;
        Polynomial denominator;
    };
    virtual const RationalData* rational_data() const { return nullptr; }

    virtual nlohmann::json parameters() const { return nlohmann::json::object(); }
    virtual std::string notes() const { return {}; }

protected:
    Mapping(int dim, double distortion, std::string kind, std::string label);

    virtual ExtendedPoint evaluate_raw(const Vec& x) const = 0;
    void check_point(const Vec& x) const;

private:
    int dim_;
    double distortion_;
    std::string kind_, label_;
};

using MappingPtr = std::shared_ptr<const Mapping>;

// The zoo.
MappingPtr make_exponential();
MappingPtr make_sine();
MappingPtr make_exp_square();
MappingPtr make_identity();
MappingPtr make_power(int exponent);
MappingPtr make_rational(Polynomial numerator, Polynomial denominator);
MappingPtr make_elliptic(std::complex<double> omega1 = {2.0, 0.0},
                         std::complex<double> omega2 = {0.0, 2.0});
MappingPtr make_winding(int k, int dim);
MappingPtr make_zorich(double distortion = 10.0);
MappingPtr make_constant(const ExtendedPoint& value);

// x -> f(a + x): recenters the specimen at a.
MappingPtr translate(MappingPtr f, const Vec& a);
// x -> f(a + |a|^(2-p) x): the weighted rescaling behind the M_p machinery.
MappingPtr p_rescale(MappingPtr f, const Vec& a, double p);
// x -> f(shift + scale * x) and x -> shift + scale * f(x).
MappingPtr pre_affine(MappingPtr f, const Vec& shift, double scale);
MappingPtr post_affine(MappingPtr f, const Vec& shift, double scale);

// a-points through the specimen's own enumerator when it has one, otherwise a
// multistart Newton search checked against the argument-principle count.
// Every hit is verified to satisfy q(f(x), a) <= 1e-8 before it is returned.
std::vector<ApointHit> enumerate_apoints(const Mapping& f, const ExtendedPoint& a,
                                         const Vec& center, double radius);

// Catalog entry used by the CLI and the descriptor round-trip.
struct MapInfo {
    std::string kind;
    std::string summary;
    int dim = 2;
    double distortion = 1.0;
    bool yosida_expected = true;
    bool has_jacobian = false;
    bool has_apoints = false;
    bool has_complex_form = false;
    nlohmann::json parameters;
    std::string notes;
};

std::vector<MapInfo> list_zoo();

// Build a specimen from a JSON descriptor {"kind": ..., ...}. Unknown fields
// are rejected so configuration typos cannot silently change an experiment.
MappingPtr make_zoo_map(const nlohmann::json& descriptor);

} // namespace qrlab
