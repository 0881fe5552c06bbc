#include "qrlab/mapping.hpp"

#include "qrlab/geometry.hpp"
#include "qrlab/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

using namespace qrlab;
using cplx = std::complex<double>;

namespace {

constexpr double kTau = 2.0 * 3.14159265358979323846;

// Central-difference determinant of the differential (finite points only).
double fd_jacobian(const Mapping& f, const Vec& x, double h) {
    int n = f.dim();
    std::vector<std::vector<double>> J(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n)));
    for (int j = 0; j < n; ++j) {
        Vec hi = x, lo = x;
        hi[j] += h;
        lo[j] -= h;
        Vec fhi = f.evaluate_unclamped(hi).finite();
        Vec flo = f.evaluate_unclamped(lo).finite();
        for (int i = 0; i < n; ++i) J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            (fhi[i] - flo[i]) / (2.0 * h);
    }
    if (n == 2) return J[0][0] * J[1][1] - J[0][1] * J[1][0];
    return J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
           J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
           J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
}

long multiplicity_total(const std::vector<ApointHit>& hits) {
    long total = 0;
    for (const auto& h : hits) total += h.multiplicity;
    return total;
}

// A planar map that hides its enumerator, to exercise the generic search.
class BareSquare final : public Mapping {
  public:
    BareSquare() : Mapping(2, 1.0, "test_square", "z^2 without an enumerator") {}

    bool has_complex_form() const override { return true; }
    cplx complex_value(cplx z) const override { return z * z; }
    cplx complex_derivative(cplx z) const override { return 2.0 * z; }
    bool pole_free() const override { return true; }

  protected:
    ExtendedPoint evaluate_raw(const Vec& x) const override {
        return ExtendedPoint(from_complex(complex_value(to_complex(x))));
    }
};

class NoFormMap final : public Mapping {
  public:
    NoFormMap() : Mapping(2, 1.0, "test_opaque", "opaque planar map") {}

  protected:
    ExtendedPoint evaluate_raw(const Vec& x) const override { return ExtendedPoint(x); }
};

} // namespace

TEST_CASE("zoo catalog: shape, declared constants and capability flags") {
    auto zoo = list_zoo();
    REQUIRE(zoo.size() == 10);
    auto find = [&](const std::string& kind) -> const MapInfo& {
        auto it = std::find_if(zoo.begin(), zoo.end(),
                               [&](const MapInfo& m) { return m.kind == kind; });
        REQUIRE(it != zoo.end());
        return *it;
    };

    const MapInfo& exp_info = find("exponential");
    CHECK(exp_info.dim == 2);
    CHECK(exp_info.distortion == 1.0);
    CHECK(exp_info.yosida_expected);
    CHECK(exp_info.has_jacobian);
    CHECK(exp_info.has_apoints);
    CHECK(exp_info.has_complex_form);

    const MapInfo& zorich_info = find("zorich");
    CHECK(zorich_info.dim == 3);
    CHECK(zorich_info.distortion > 1.0);
    CHECK_FALSE(zorich_info.has_complex_form);

    const MapInfo& es = find("exp_square");
    CHECK_FALSE(es.yosida_expected);
    // The catalog must be explicit that its enumerator is exactly the
    // quadratic-in-exponent family and nothing more.
    CHECK(es.notes.find("quadratic-in-exponent") != std::string::npos);

    // Capability flags agree with the constructed specimens.
    for (const MapInfo& info : zoo) {
        nlohmann::json descriptor = {{"kind", info.kind}};
        if (info.kind == "power") descriptor["exponent"] = 3;
        if (info.kind == "rational") {
            descriptor["numerator"] = {{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
            descriptor["denominator"] = {{0.0, 0.0}, {1.0, 0.0}};
        }
        if (info.kind == "winding") descriptor["k"] = 3;
        if (info.kind == "constant") descriptor["value"] = {1.0, 0.0};
        MappingPtr f = make_zoo_map(descriptor);
        CHECK(f->dim() == info.dim);
        CHECK(f->has_jacobian() == info.has_jacobian);
        CHECK(f->has_apoints() == info.has_apoints);
        CHECK(f->has_complex_form() == info.has_complex_form);
    }
}

TEST_CASE("complex forms agree with the real evaluation") {
    std::vector<MappingPtr> maps = {make_exponential(), make_sine(), make_exp_square(),
                                    make_identity(), make_power(4),
                                    make_elliptic(), make_winding(3, 2)};
    Rng rng(101);
    for (const auto& f : maps) {
        REQUIRE(f->has_complex_form());
        for (int i = 0; i < 200; ++i) {
            Vec x(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
            cplx w = f->complex_value(to_complex(x));
            ExtendedPoint via_real = f->evaluate(x);
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag()) ||
                std::abs(w) > 1e11)
                continue; // pole-cap zone: representations may differ there
            CHECK(chordal_distance(via_real, ExtendedPoint(from_complex(w))) <= 1e-12);
        }
    }
}

TEST_CASE("periodicity residuals stay below 1e-8") {
    Rng rng(202);

    MappingPtr e = make_exponential();
    MappingPtr s = make_sine();
    for (int i = 0; i < 100; ++i) {
        Vec z(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
        CHECK(chordal_distance(e->evaluate(z + Vec(0.0, kTau)), e->evaluate(z)) <= 1e-8);
        CHECK(chordal_distance(s->evaluate(z + Vec(kTau, 0.0)), s->evaluate(z)) <= 1e-8);
    }

    MappingPtr p = make_elliptic(); // periods 2 and 2i
    for (int i = 0; i < 100; ++i) {
        Vec z(rng.uniform(0.05, 1.95), rng.uniform(0.05, 1.95));
        CHECK(chordal_distance(p->evaluate(z + Vec(2.0, 0.0)), p->evaluate(z)) <= 1e-8);
        CHECK(chordal_distance(p->evaluate(z + Vec(0.0, 2.0)), p->evaluate(z)) <= 1e-8);
    }

    MappingPtr zr = make_zorich(); // periods 4 e1 and 4 e2
    for (int i = 0; i < 100; ++i) {
        Vec x(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
        CHECK(chordal_distance(zr->evaluate(x + Vec(4.0, 0.0, 0.0)), zr->evaluate(x)) <=
              1e-8);
        CHECK(chordal_distance(zr->evaluate(x + Vec(0.0, 4.0, 0.0)), zr->evaluate(x)) <=
              1e-8);
    }
}

TEST_CASE("jacobians match central differences at 1e-4 relative") {
    std::vector<MappingPtr> planar = {make_exponential(), make_sine(), make_exp_square(),
                                      make_identity(), make_power(3),
                                      make_elliptic(), make_winding(4, 2)};
    Rng rng(303);
    for (const auto& f : planar) {
        REQUIRE(f->has_jacobian());
        int checked = 0;
        while (checked < 50) {
            Vec x(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            ExtendedPoint v = f->evaluate_unclamped(x);
            if (v.is_infinite() || v.finite().norm() > 1e3) continue; // too near a pole
            if (f->kind() == "winding" && x.norm() < 0.3) continue;   // branch point
            double J = f->jacobian(x);
            double fd = fd_jacobian(*f, x, 1e-5);
            CHECK(std::abs(J - fd) <= 1e-4 * (1.0 + std::abs(J)));
            ++checked;
        }
    }

    std::vector<MappingPtr> spatial = {make_zorich(), make_winding(3, 3)};
    for (const auto& f : spatial) {
        REQUIRE(f->has_jacobian());
        int checked = 0;
        while (checked < 50) {
            Vec x(rng.uniform(-1.8, 1.8), rng.uniform(-1.8, 1.8), rng.uniform(-1.8, 1.8));
            if (std::hypot(x[0], x[1]) < 0.3) continue; // winding axis
            double J = f->jacobian(x);
            double fd = fd_jacobian(*f, x, 1e-5);
            CHECK(std::abs(J - fd) <= 1e-3 * (1.0 + std::abs(J)));
            ++checked;
        }
    }
}

TEST_CASE("chordal density equals J / (1+|f|^2)^n away from poles") {
    std::vector<MappingPtr> maps = {make_exponential(), make_sine(), make_exp_square(),
                                    make_power(2), make_elliptic(), make_winding(3, 2),
                                    make_zorich()};
    Rng rng(404);
    for (const auto& f : maps) {
        int checked = 0;
        while (checked < 80) {
            Vec x = f->dim() == 2
                        ? Vec(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5))
                        : Vec(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5),
                              rng.uniform(-2.5, 2.5));
            ExtendedPoint v = f->evaluate_unclamped(x);
            if (v.is_infinite() || v.finite().norm() > 1e4) continue;
            if (f->kind() == "winding" && std::hypot(x[0], x[1]) < 0.3) continue;
            double direct = f->chordal_density(x);
            double composed = f->jacobian(x) /
                              std::pow(1.0 + v.finite().norm_sq(),
                                       static_cast<double>(f->dim()));
            CHECK(std::abs(direct - composed) <= 1e-8 * (1.0 + std::abs(direct)));
            ++checked;
        }
    }
}

TEST_CASE("a-point enumerators: pinned counts and residual checks") {
    Vec origin(0.0, 0.0);

    // exp(z) = 1 inside |z| < 10: z = 0, +-2 pi i (|2 pi| < 10 < |4 pi|).
    MappingPtr e = make_exponential();
    auto hits = enumerate_apoints(*e, ExtendedPoint(Vec(1.0, 0.0)), origin, 10.0);
    CHECK(multiplicity_total(hits) == 3);
    // Omitted values have no preimages at all.
    CHECK(enumerate_apoints(*e, ExtendedPoint(Vec(0.0, 0.0)), origin, 50.0).empty());
    CHECK(enumerate_apoints(*e, ExtendedPoint::infinity(2), origin, 50.0).empty());

    // z^3 = 8: three simple cube roots of modulus 2; at a = 0 one triple point.
    MappingPtr p3 = make_power(3);
    hits = enumerate_apoints(*p3, ExtendedPoint(Vec(8.0, 0.0)), origin, 3.0);
    CHECK(hits.size() == 3);
    CHECK(multiplicity_total(hits) == 3);
    hits = enumerate_apoints(*p3, ExtendedPoint(Vec(0.0, 0.0)), origin, 1.0);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].multiplicity == 3);

    // (z^2 - 1)/z = 0 exactly at z = +-1; at infinity exactly the pole z = 0.
    MappingPtr r = make_rational(Polynomial({{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}),
                                 Polynomial({{0.0, 0.0}, {1.0, 0.0}}));
    hits = enumerate_apoints(*r, ExtendedPoint(Vec(0.0, 0.0)), origin, 2.0);
    CHECK(hits.size() == 2);
    CHECK(multiplicity_total(hits) == 2);
    hits = enumerate_apoints(*r, ExtendedPoint::infinity(2), origin, 0.5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].location.norm() <= 1e-12);

    // Weierstrass P: the half-period 1 is a critical point, so the branch
    // value e1 = P(1) is taken there with local degree exactly 2.
    MappingPtr wp = make_elliptic();
    ExtendedPoint e1 = wp->evaluate(Vec(1.0, 0.0));
    hits = enumerate_apoints(*wp, e1, Vec(1.0, 0.0), 0.5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].multiplicity == 2);
    CHECK((hits[0].location - Vec(1.0, 0.0)).norm() <= 1e-8);
    // ... and infinity is taken with degree 2 at the lattice point 0.
    hits = enumerate_apoints(*wp, ExtendedPoint::infinity(2), origin, 0.5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].multiplicity == 2);

    // exp(z^2) = e inside |z| < 1.2: z^2 = 1 gives +-1; every other branch
    // z^2 = 1 + 2 pi i k has modulus >= sqrt(2 pi) > 1.2.
    MappingPtr es = make_exp_square();
    hits = enumerate_apoints(*es, ExtendedPoint(Vec(std::exp(1.0), 0.0)), origin, 1.2);
    CHECK(hits.size() == 2);
    CHECK(multiplicity_total(hits) == 2);

    // winding(k=3): a generic value has its k angular preimages; the origin
    // is a single k-fold point.
    MappingPtr w3 = make_winding(3, 2);
    hits = enumerate_apoints(*w3, ExtendedPoint(Vec(1.0, 0.0)), origin, 2.0);
    CHECK(hits.size() == 3);
    CHECK(multiplicity_total(hits) == 3);
    hits = enumerate_apoints(*w3, ExtendedPoint(Vec(0.0, 0.0)), origin, 1.0);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].multiplicity == 3);
    // In dimension 3 the winding map fixes its axis pointwise, so axis values
    // have non-isolated preimages and counting must refuse rather than guess.
    MappingPtr w33 = make_winding(3, 3);
    CHECK_THROWS_AS(enumerate_apoints(*w33, ExtendedPoint(Vec(0.0, 0.0, 1.0)),
                                      Vec(0.0, 0.0, 1.0), 2.0),
                    NumericalError);

    // Zorich: hits of a = f(x0) near x0 include x0 itself, and every reported
    // hit satisfies the residual bound q(f(h), a) <= 1e-8.
    MappingPtr zr = make_zorich();
    Vec x0(0.5, 0.7, 0.3);
    ExtendedPoint target = zr->evaluate(x0);
    hits = enumerate_apoints(*zr, target, x0, 1.0);
    bool found_x0 = false;
    for (const auto& h : hits) {
        CHECK(chordal_distance(zr->evaluate(h.location), target) <= 1e-8);
        CHECK((h.location - x0).norm() < 1.0);
        if ((h.location - x0).norm() <= 1e-8) found_x0 = true;
    }
    CHECK(found_x0);
}

TEST_CASE("generic a-point search agrees with the argument principle") {
    BareSquare f;
    CHECK_FALSE(f.has_apoints());

    auto hits = enumerate_apoints(f, ExtendedPoint(Vec(1.0, 0.0)), Vec(0.0, 0.0), 2.0);
    CHECK(hits.size() == 2);
    CHECK(multiplicity_total(hits) == 2);
    for (const auto& h : hits)
        CHECK(std::abs(h.location.norm() - 1.0) <= 1e-9); // both square roots of 1

    // Degenerate target: the double root at the origin is found with its index.
    hits = enumerate_apoints(f, ExtendedPoint(Vec(0.0, 0.0)), Vec(0.0, 0.0), 1.0);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].multiplicity == 2);

    // Pole-free maps have no preimages of infinity.
    CHECK(enumerate_apoints(f, ExtendedPoint::infinity(2), Vec(0.0, 0.0), 3.0).empty());

    NoFormMap opaque;
    CHECK_THROWS_AS(
        enumerate_apoints(opaque, ExtendedPoint(Vec(1.0, 0.0)), Vec(0.0, 0.0), 1.0),
        std::invalid_argument);
}

TEST_CASE("rational specimens must be in lowest terms") {
    // (z - 1)(z + 2) over (z - 1): the shared root would silently shift every
    // winding-based count, so construction has to refuse it.
    Polynomial shared_num({{-2.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}});
    Polynomial shared_den({{-1.0, 0.0}, {1.0, 0.0}});
    CHECK_THROWS_AS(make_rational(shared_num, shared_den), std::invalid_argument);

    // Coprime pair of the same degrees passes.
    Polynomial ok_num({{-2.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}});
    Polynomial ok_den({{-3.0, 0.0}, {1.0, 0.0}});
    CHECK(make_rational(ok_num, ok_den)->has_apoints());

    CHECK_THROWS_AS(make_rational(Polynomial(std::vector<cplx>{{1.0, 0.0}}), Polynomial()),
                    std::invalid_argument); // zero denominator
}

TEST_CASE("descriptors: strict fields and wrapper composition") {
    CHECK(make_zoo_map({{"kind", "identity"}})->kind() == "identity");
    CHECK_THROWS_AS(make_zoo_map({{"kind", "identity"}, {"typo", 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_zoo_map({{"kind", "nope"}}), std::invalid_argument);
    CHECK_THROWS_AS(make_zoo_map({{"kind", "power"}}), std::invalid_argument);
    CHECK_THROWS_AS(make_zoo_map({{"kind", "winding"}, {"k", 0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_zoo_map(nlohmann::json::array()), std::invalid_argument);

    // pre: x -> f(shift + scale x); post: x -> shift + scale f(x).
    MappingPtr pre = make_zoo_map({{"kind", "exponential"},
                                   {"pre", {{"shift", {1.0, 0.0}}, {"scale", 2.0}}}});
    MappingPtr plain = make_exponential();
    Vec x(0.3, -0.7);
    CHECK(chordal_distance(pre->evaluate(x), plain->evaluate(Vec(1.0, 0.0) + x * 2.0)) ==
          0.0);

    MappingPtr post = make_zoo_map({{"kind", "identity"},
                                    {"post", {{"shift", {0.0, 1.0}}, {"scale", 3.0}}}});
    CHECK(chordal_distance(post->evaluate(x), ExtendedPoint(Vec(0.0, 1.0) + x * 3.0)) ==
          0.0);
}

TEST_CASE("translate and p-rescale laws hold exactly") {
    Rng rng(505);
    MappingPtr f = make_exponential();
    for (int i = 0; i < 50; ++i) {
        Vec a(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        if (a.norm() < 1e-6) continue;
        Vec x(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

        MappingPtr shifted = translate(f, a);
        CHECK(chordal_distance(shifted->evaluate(x), f->evaluate(a + x)) <= 1e-15);

        double p = rng.uniform(1.1, 3.0);
        MappingPtr rescaled = p_rescale(f, a, p);
        double s = std::pow(a.norm(), 2.0 - p);
        CHECK(chordal_distance(rescaled->evaluate(x), f->evaluate(a + x * s)) <= 1e-15);
    }
    CHECK_THROWS_AS(p_rescale(f, Vec(0.0, 0.0), 2.0), std::invalid_argument);
}

TEST_CASE("pole cap keeps evaluation total and chordally faithful") {
    MappingPtr r = make_rational(Polynomial(std::vector<cplx>{{1.0, 0.0}}),
                                 Polynomial({{0.0, 0.0}, {1.0, 0.0}})); // 1/z
    CHECK(r->evaluate(Vec(0.0, 0.0)).is_infinite());
    ExtendedPoint capped = r->evaluate(Vec(1e-13, 0.0));
    CHECK(capped.is_infinite());
    // The uncapped value is within 1e-12 of the north pole, so the cap is
    // invisible at working tolerances.
    ExtendedPoint raw = r->evaluate_unclamped(Vec(1e-13, 0.0));
    CHECK_FALSE(raw.is_infinite());
    CHECK(chordal_distance(raw, capped) <= 1e-12);

    MappingPtr e = make_exponential();
    CHECK(e->evaluate(Vec(800.0, 0.0)).is_infinite());

    MappingPtr c = make_constant(ExtendedPoint::infinity(2));
    CHECK(c->evaluate(Vec(3.0, 4.0)).is_infinite());
    MappingPtr c2 = make_constant(ExtendedPoint(Vec(2.0, 1.0)));
    CHECK(chordal_distance(c2->evaluate(Vec(-9.0, 4.0)), ExtendedPoint(Vec(2.0, 1.0))) ==
          0.0);

    // Zorich omits 0 and infinity.
    MappingPtr zr = make_zorich();
    Rng rng(606);
    for (int i = 0; i < 200; ++i) {
        Vec x(rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0));
        ExtendedPoint v = zr->evaluate(x);
        CHECK_FALSE(v.is_infinite());
        CHECK(v.finite().norm() > 0.0);
    }
}

TEST_CASE("dimension checks are enforced") {
    MappingPtr e = make_exponential();
    CHECK_THROWS_AS(e->evaluate(Vec(0.0, 0.0, 0.0)), std::invalid_argument);
    MappingPtr zr = make_zorich();
    CHECK_THROWS_AS(zr->evaluate(Vec(0.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(make_winding(3, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_zorich(0.5), std::invalid_argument);
}
