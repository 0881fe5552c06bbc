#include "qrlab/geometry.hpp"
#include "qrlab/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace qrlab;

namespace {

ExtendedPoint pt(double x, double y) { return ExtendedPoint(Vec(x, y)); }

} // namespace

TEST_CASE("chordal distance: pinned values") {
    ExtendedPoint inf2 = ExtendedPoint::infinity(2);
    CHECK(chordal_distance(pt(0, 0), inf2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(chordal_distance(pt(1, 0), pt(-1, 0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(chordal_distance(pt(0, 0), pt(1, 0)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(chordal_distance(inf2, inf2) == 0.0);
    CHECK(chordal_distance(pt(3, -4), pt(3, -4)) == 0.0);
}

TEST_CASE("chordal distance: symmetry, bound and identity on random pairs") {
    Rng rng(20260814);
    for (int i = 0; i < 2000; ++i) {
        Vec a(rng.uniform(-50, 50), rng.uniform(-50, 50));
        Vec b(rng.uniform(-50, 50), rng.uniform(-50, 50));
        double q1 = chordal_distance(a, b);
        double q2 = chordal_distance(b, a);
        CHECK(q1 == q2);
        CHECK(q1 >= 0.0);
        CHECK(q1 <= 1.0);
        CHECK((q1 == 0.0) == (a[0] == b[0] && a[1] == b[1]));
    }
}

TEST_CASE("chordal distance: triangle inequality on 1e5 random triples") {
    Rng rng(42);
    auto sample = [&]() -> ExtendedPoint {
        if (rng.uniform() < 0.01) return ExtendedPoint::infinity(2);
        double r = chordal_radius_quantile(2, rng.uniform());
        double th = rng.uniform(0.0, 2.0 * M_PI);
        return pt(r * std::cos(th), r * std::sin(th));
    };
    for (int i = 0; i < 100000; ++i) {
        ExtendedPoint a = sample(), b = sample(), c = sample();
        double ab = chordal_distance(a, b);
        double bc = chordal_distance(b, c);
        double ac = chordal_distance(a, c);
        CHECK(ac <= ab + bc + 1e-14);
    }
}

TEST_CASE("chordal distance: overflow-safe at extreme coordinates") {
    ExtendedPoint big = pt(1e150, -1e150);
    ExtendedPoint big2 = pt(-1e150, 1e150);
    double q = chordal_distance(big, big2);
    CHECK(std::isfinite(q));
    CHECK(q == doctest::Approx(1e-150 * std::sqrt(2.0)).epsilon(1e-10));
    // q(a, inf) = 1/sqrt(1+|a|^2), monotone decreasing in |a|.
    double prev = 1.0;
    for (double e = 0.0; e <= 150.0; e += 10.0) {
        double qi = chordal_distance(pt(std::pow(10.0, e), 0), ExtendedPoint::infinity(2));
        CHECK(std::isfinite(qi));
        CHECK(qi <= prev);
        prev = qi;
    }
    CHECK(chordal_distance(pt(1e150, 0), ExtendedPoint::infinity(2)) ==
          doctest::Approx(1e-150).epsilon(1e-12));
}

TEST_CASE("chordal distance: dimension mismatch rejected") {
    CHECK_THROWS_AS(chordal_distance(pt(0, 0), ExtendedPoint(Vec(0, 0, 0))),
                    std::invalid_argument);
}

TEST_CASE("spherical diameter") {
    std::vector<ExtendedPoint> s = {pt(0, 0), pt(1, 0), ExtendedPoint::infinity(2)};
    CHECK(spherical_diameter(s) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<ExtendedPoint> one = {pt(2, 3)};
    CHECK(spherical_diameter(one) == 0.0);
    std::vector<ExtendedPoint> none;
    CHECK_THROWS_AS(spherical_diameter(none), std::invalid_argument);
}

TEST_CASE("weighted balls: radius law and containment") {
    Vec a(10, 0);
    WeightedBall b1(a, 0.1, 1.0);
    CHECK(b1.effective_radius() == doctest::Approx(1.0));
    CHECK(b1.contains(Vec(10.5, 0)));

    WeightedBall b3(a, 1.0, 3.0);
    CHECK(b3.effective_radius() == doctest::Approx(0.1));
    CHECK_FALSE(b3.contains(Vec(10.5, 0)));

    WeightedBall b2(a, 0.25, 2.0);
    CHECK(b2.effective_radius() == doctest::Approx(0.25));
    CHECK(b2.contains(Vec(10.2, 0.1)));
    CHECK_FALSE(b2.contains(Vec(10.25, 0)));

    CHECK_THROWS_AS(WeightedBall(Vec(0, 0), 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(WeightedBall(a, -1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(WeightedBall(a, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("lambda_n: closed form against radial quadrature oracle") {
    CHECK(lambda_n(2) == doctest::Approx(M_PI).epsilon(1e-12));
    CHECK(lambda_n(3) == doctest::Approx(M_PI * M_PI / 4.0).epsilon(1e-12));
    CHECK(lambda_n(2) == doctest::Approx(oracle::lambda_n_quadrature(2)).epsilon(1e-10));
    CHECK(lambda_n(3) == doctest::Approx(oracle::lambda_n_quadrature(3)).epsilon(1e-10));
    CHECK_THROWS_AS(lambda_n(1), std::invalid_argument);
}

TEST_CASE("chordal radius quantile matches the radial CDF") {
    // n = 2: F(t) = t^2/(1+t^2) exactly.
    for (double u : {0.05, 0.25, 0.5, 0.9, 0.999}) {
        double t = chordal_radius_quantile(2, u);
        CHECK(t * t / (1.0 + t * t) == doctest::Approx(u).epsilon(1e-12));
    }
    // n = 3: check against quadrature of the density t^2 (1+t^2)^(-3).
    double norm = oracle::integrate(
        [](double s) {
            double t = s / (1.0 - s);
            return t * t * std::pow(1.0 + t * t, -3.0) / ((1.0 - s) * (1.0 - s));
        },
        0.0, 1.0 - 1e-13);
    for (double u : {0.1, 0.5, 0.9}) {
        double t3 = chordal_radius_quantile(3, u);
        double cdf = oracle::integrate(
                         [](double s) {
                             double t = s / (1.0 - s);
                             return t * t * std::pow(1.0 + t * t, -3.0) /
                                    ((1.0 - s) * (1.0 - s));
                         },
                         0.0, t3 / (1.0 + t3)) /
                     norm;
        CHECK(cdf == doctest::Approx(u).epsilon(1e-8));
    }
}

TEST_CASE("sample_sphere_values: equidistribution and reach toward infinity") {
    const int N = 10000;
    auto pts = sample_sphere_values(2, N, 7);
    REQUIRE(static_cast<int>(pts.size()) == N);

    // Chordal measure of the unit disk is exactly half the sphere.
    int inside = 0;
    double max_norm = 0.0;
    for (const auto& p : pts) {
        REQUIRE_FALSE(p.is_infinite());
        double n = p.finite().norm();
        if (n <= 1.0) ++inside;
        max_norm = std::max(max_norm, n);
    }
    CHECK(std::abs(inside / static_cast<double>(N) - 0.5) < 0.02);
    // Points near infinity are present: chordally within 0.02 of inf.
    CHECK(chordal_distance(pts[0], pts[0]) == 0.0);
    CHECK(1.0 / std::sqrt(1.0 + max_norm * max_norm) < 0.02);

    // Nearest-neighbour chordal spacing: coefficient of variation < 0.5.
    std::vector<double> nn(static_cast<std::size_t>(N),
                           std::numeric_limits<double>::infinity());
    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            double q = chordal_distance(pts[static_cast<std::size_t>(i)],
                                        pts[static_cast<std::size_t>(j)]);
            nn[static_cast<std::size_t>(i)] = std::min(nn[static_cast<std::size_t>(i)], q);
            nn[static_cast<std::size_t>(j)] = std::min(nn[static_cast<std::size_t>(j)], q);
        }
    }
    auto ms = oracle::mean_std(nn);
    CHECK(ms.std / ms.mean < 0.5);

    // Determinism in the seed; different seeds give different rotations.
    auto again = sample_sphere_values(2, 100, 7);
    auto other = sample_sphere_values(2, 100, 8);
    CHECK(again[5].finite()[0] == sample_sphere_values(2, 100, 7)[5].finite()[0]);
    CHECK(again[5].finite()[0] != other[5].finite()[0]);
}

TEST_CASE("sample_sphere_values: n = 3 radial law") {
    const int N = 20000;
    auto pts = sample_sphere_values(3, N, 11);
    int inside = 0;
    for (const auto& p : pts) {
        if (p.finite().norm() <= 1.0) ++inside;
    }
    // |y| <= 1 is again exactly half of the chordal measure by symmetry.
    CHECK(std::abs(inside / static_cast<double>(N) - 0.5) < 0.02);
    CHECK_THROWS_AS(sample_sphere_values(4, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_sphere_values(2, 0, 0), std::invalid_argument);
}

TEST_CASE("sphere_directions: unit norm, deterministic, covers angles") {
    for (int n : {2, 3}) {
        auto dirs = sphere_directions(n, 32, 5);
        REQUIRE(dirs.size() == 32);
        Vec sum = Vec::zero(n);
        for (const auto& d : dirs) {
            CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
            sum += d;
        }
        CHECK(sum.norm() / 32.0 < 0.1); // roughly balanced
    }
}

TEST_CASE("extended point basics") {
    ExtendedPoint i3 = ExtendedPoint::infinity(3);
    CHECK(i3.is_infinite());
    CHECK(i3.dim() == 3);
    CHECK_THROWS_AS((void)i3.finite(), std::invalid_argument);
    double bad = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> coords = {bad, 0.0};
    CHECK_THROWS_AS(Vec(std::span<const double>(coords)), std::invalid_argument);
}
