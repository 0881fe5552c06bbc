#include "qrlab/sequence.hpp"

#include "qrlab/geometry.hpp"
#include "qrlab/mapping.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

using namespace qrlab;

namespace {

constexpr double kPi = 3.14159265358979323846;

PointSequence seq_of(std::vector<Vec> pts, std::string generator) {
    PointSequence X;
    X.points = std::move(pts);
    X.generator = std::move(generator);
    return X;
}

// m e1 and the same ray shifted by e2: the classic separated companion pair.
PointSequence ray_e1(std::size_t M) {
    std::vector<Vec> pts;
    for (std::size_t m = 1; m <= M; ++m) pts.push_back(Vec(static_cast<double>(m), 0.0));
    return seq_of(std::move(pts), "m*e1");
}

PointSequence ray_e1_shifted(std::size_t M) {
    std::vector<Vec> pts;
    for (std::size_t m = 1; m <= M; ++m) pts.push_back(Vec(static_cast<double>(m), 1.0));
    return seq_of(std::move(pts), "m*e1+e2");
}

PointSequence diagonal_seq(std::size_t M) {
    std::vector<Vec> pts;
    double c = 1.0 / std::sqrt(2.0);
    for (std::size_t m = 1; m <= M; ++m)
        pts.push_back(Vec(static_cast<double>(m) * c, static_cast<double>(m) * c));
    return seq_of(std::move(pts), "m*(e1+e2)/sqrt(2)");
}

// Reference implementation of the one-sided weighted distance, written as the
// bare double loop so the library result has something independent to match.
double brute_one_sided(const std::vector<Vec>& X, const std::vector<Vec>& Y, double p) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& x : X) {
        double w = std::pow(x.norm(), 2.0 - p);
        for (const Vec& y : Y) best = std::min(best, (x - y).norm() / w);
    }
    return best;
}

} // namespace

TEST_CASE("sequence validation: escape surrogates only") {
    CHECK_NOTHROW(validate_sequence(ray_e1(20)));

    PointSequence empty;
    CHECK_THROWS_AS(validate_sequence(empty), std::invalid_argument);

    PointSequence zero = ray_e1(20);
    zero.points[3] = Vec(0.0, 0.0);
    CHECK_THROWS_AS(validate_sequence(zero), std::invalid_argument);

    // Strict growth is demanded only over the last half...
    PointSequence wobble = ray_e1(20);
    wobble.points[2] = Vec(5.0, 0.0); // early out-of-order entry is fine
    CHECK_NOTHROW(validate_sequence(wobble));
    PointSequence stall = ray_e1(20);
    stall.points[15] = stall.points[14]; // ... where stalls are rejected
    CHECK_THROWS_AS(validate_sequence(stall), std::invalid_argument);

    // |x_M| >= 10 |x_1|.
    std::vector<Vec> narrow;
    for (int m = 10; m <= 30; ++m) narrow.push_back(Vec(static_cast<double>(m), 0.0));
    CHECK_THROWS_AS(validate_sequence(seq_of(narrow, "narrow")), std::invalid_argument);

    PointSequence mixed = ray_e1(20);
    mixed.points[5] = Vec(6.0, 0.0, 0.0);
    CHECK_THROWS_AS(validate_sequence(mixed), std::invalid_argument);
}

TEST_CASE("weighted distance: pinned example and brute-force agreement") {
    PointSequence X = ray_e1(50);
    PointSequence Y = ray_e1_shifted(50);

    // |x_m - y_k| >= 1 with equality at k = m. With p = 2 all weights are 1,
    // so D = 1; with p = 1 the weight is m, minimized at the far end m = 50.
    SequenceDistance d2 = D_p(X, Y, 2.0);
    CHECK(d2.value == doctest::Approx(1.0).epsilon(1e-15));
    SequenceDistance d1 = D_p(X, Y, 1.0);
    CHECK(d1.value == doctest::Approx(1.0 / 50.0).epsilon(1e-15));
    CHECK(d1.m == 49);
    CHECK(d1.k == 49);

    // The reported pair must realize the reported value.
    auto realizes = [](const PointSequence& A, const PointSequence& B,
                       const SequenceDistance& d, double p) {
        double w = std::pow(A.points[d.m].norm(), 2.0 - p);
        return std::abs((A.points[d.m] - B.points[d.k]).norm() / w - d.value) <=
               1e-14 * (1.0 + d.value);
    };
    CHECK(realizes(X, Y, d1, 1.0));
    CHECK(realizes(X, Y, d2, 2.0));

    // Brute-force cross-check on irregular escaping sequences.
    std::vector<Vec> a_pts, b_pts;
    for (int m = 1; m <= 30; ++m) {
        a_pts.push_back(Vec(0.8 * m, 0.2 * std::sin(3.0 * m)));
        b_pts.push_back(Vec(0.3 * std::cos(2.0 * m), 1.1 * m));
    }
    PointSequence A = seq_of(a_pts, "jittered e1 ray");
    PointSequence B = seq_of(b_pts, "jittered e2 ray");
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        SequenceDistance lhs = D_p(A, B, p);
        CHECK(lhs.value ==
              doctest::Approx(brute_one_sided(a_pts, b_pts, p)).epsilon(1e-14));
        CHECK(realizes(A, B, lhs, p));
        SequenceDistance rhs = D_p(B, A, p);
        CHECK(rhs.value ==
              doctest::Approx(brute_one_sided(b_pts, a_pts, p)).epsilon(1e-14));
    }

    CHECK_THROWS_AS(D_p(X, Y, 0.5), std::invalid_argument);
    PointSequence spatial = seq_of({Vec(1.0, 0.0, 0.0), Vec(12.0, 0.0, 0.0)}, "3d");
    CHECK_THROWS_AS(D_p(X, spatial, 2.0), std::invalid_argument);
}

TEST_CASE("symmetrized distance reports which side attained the min") {
    PointSequence X = ray_e1(20);
    PointSequence Y = ray_e1_shifted(20);

    // With p = 1 the Y-side weights sqrt(m^2+1) exceed the X-side weights m,
    // so the (Y, X) orientation wins: 1/sqrt(401) < 1/20.
    SequenceDistance sym = d_p(X, Y, 1.0);
    CHECK(sym.swapped);
    CHECK(sym.value == doctest::Approx(1.0 / std::sqrt(401.0)).epsilon(1e-14));
    CHECK(sym.value == doctest::Approx(D_p(Y, X, 1.0).value).epsilon(1e-15));

    SequenceDistance rev = d_p(Y, X, 1.0);
    CHECK_FALSE(rev.swapped);
    CHECK(rev.value == doctest::Approx(sym.value).epsilon(1e-15));

    // General consistency: the symmetrized value is the min of the two sides.
    for (double p : {1.0, 2.0, 3.0}) {
        double xy = D_p(X, Y, p).value;
        double yx = D_p(Y, X, p).value;
        SequenceDistance s = d_p(X, Y, p);
        CHECK(s.value == doctest::Approx(std::min(xy, yx)).epsilon(1e-15));
        CHECK(s.swapped == (yx < xy));
    }
}

TEST_CASE("companion gaps track the per-index weighted offsets") {
    PointSequence X = ray_e1(25);
    PointSequence Y = ray_e1_shifted(25);

    std::vector<double> g2 = companion_gaps(X, Y, 2.0);
    REQUIRE(g2.size() == 25);
    for (double g : g2) CHECK(g == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<double> g1 = companion_gaps(X, Y, 1.0);
    for (std::size_t m = 0; m < g1.size(); ++m) {
        double ym = std::hypot(static_cast<double>(m + 1), 1.0);
        CHECK(g1[m] == doctest::Approx(1.0 / ym).epsilon(1e-14));
    }

    CHECK_THROWS_AS(companion_gaps(X, ray_e1_shifted(24), 2.0), std::invalid_argument);
    CHECK_THROWS_AS(companion_gaps(X, Y, 0.0), std::invalid_argument);
}

TEST_CASE("both-zero watch agrees about vanishing tails") {
    std::size_t M = 100;
    PointSequence X = ray_e1(M);

    // Shrinking offset e2/m: both one-sided values decay like 1/M.
    std::vector<Vec> close;
    for (std::size_t m = 1; m <= M; ++m)
        close.push_back(Vec(static_cast<double>(m), 1.0 / static_cast<double>(m)));
    BothZeroReport vanish = both_zero_check(X, seq_of(close, "m*e1+e2/m"), 2.0, 0.02);
    CHECK(vanish.truncations == std::vector<std::size_t>({25, 50, 75, 100}));
    REQUIRE(vanish.xy.size() == 4);
    for (std::size_t i = 0; i + 1 < vanish.xy.size(); ++i) {
        CHECK(vanish.xy[i + 1] <= vanish.xy[i]); // inf over growing prefixes
        CHECK(vanish.yx[i + 1] <= vanish.yx[i]);
    }
    CHECK(vanish.final_xy == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(vanish.both_below);
    CHECK(vanish.agree);
    CHECK(vanish.trend == "both-vanishing");

    // Constant offset e2: both sides stay pinned at 1.
    BothZeroReport stay = both_zero_check(X, ray_e1_shifted(M), 2.0, 0.5);
    CHECK(stay.final_xy == doctest::Approx(1.0));
    CHECK(stay.final_yx == doctest::Approx(1.0));
    CHECK_FALSE(stay.both_below);
    CHECK(stay.agree);
    CHECK(stay.trend == "both-positive");

    CHECK_THROWS_AS(both_zero_check(X, ray_e1_shifted(M), 2.0, 0.0),
                    std::invalid_argument);
}

TEST_CASE("greedy chordal clustering") {
    // Two tight clumps near 0 and near infinity.
    std::vector<ExtendedPoint> pts = {
        ExtendedPoint(Vec(0.0, 0.0)),   ExtendedPoint(Vec(0.01, 0.0)),
        ExtendedPoint(Vec(0.0, 0.015)), ExtendedPoint::infinity(2),
        ExtendedPoint(Vec(0.0, 300.0)),
    };
    ClusterSummary two = greedy_clusters(pts, 0.1, 10);
    CHECK(two.count == 2);
    CHECK_FALSE(two.capped);
    REQUIRE(two.diameters.size() == 2);
    for (double d : two.diameters) CHECK(d <= 0.1);

    // A single clump within the bound collapses to one cluster.
    ClusterSummary one = greedy_clusters(
        {ExtendedPoint(Vec(1.0, 0.0)), ExtendedPoint(Vec(1.02, 0.0))}, 0.1, 10);
    CHECK(one.count == 1);

    // Five mutually distant points against cap 2: the third opening trips the
    // cap and clustering stops with count = cap + 1.
    std::vector<ExtendedPoint> spread;
    for (int k = 0; k < 5; ++k)
        spread.push_back(ExtendedPoint(Vec(std::tan(0.3 + 0.25 * k), 0.0)));
    ClusterSummary capped = greedy_clusters(spread, 0.05, 2);
    CHECK(capped.capped);
    CHECK(capped.count == 3);
    CHECK(capped.diameters.size() == 2);

    CHECK(greedy_clusters({}, 0.1, 3).count == 0);
    CHECK_THROWS_AS(greedy_clusters(pts, 0.0, 3), std::invalid_argument);
}

TEST_CASE("separation over explicit a-point sets") {
    // Integer lattice against its half-shifted copy: the closest pair across
    // sets sits at offset (1/2, 1/2), so the p = 2 statistic is sqrt(1/2).
    std::vector<Vec> lattice, shifted;
    for (int i = -3; i <= 3; ++i)
        for (int j = -3; j <= 3; ++j) {
            lattice.push_back(Vec(i, j));
            shifted.push_back(Vec(i + 0.5, j + 0.5));
        }
    SeparationReport lat = separation_from_sets({lattice, shifted}, 2.0);
    CHECK(lat.value == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(lat.preimage_counts == std::vector<std::size_t>({49, 49}));
    CHECK((lat.apoint_j - lat.apoint_i).norm() ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));

    // Zero points carry no weight: (0,0) -> (1,0) would give 1/0^0... the
    // convention excludes |a| = 0 entirely, so the min comes from (3,0).
    SeparationReport zx = separation_from_sets({{Vec(0.0, 0.0), Vec(3.0, 0.0)},
                                                {Vec(1.0, 0.0)}},
                                               1.0);
    CHECK(zx.value == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(zx.value_j == 0);
    CHECK(zx.value_i == 1);
    CHECK(zx.apoint_j[0] == doctest::Approx(3.0));

    CHECK_THROWS_AS(separation_from_sets({lattice, {}}, 2.0), NumericalError);
    CHECK_THROWS_AS(separation_from_sets({lattice, shifted}, 0.5),
                    std::invalid_argument);
}

TEST_CASE("separation statistic through the exp enumerator") {
    MappingPtr e = make_exponential();
    // Preimages inside |z| < 10 sit on the imaginary axis at heights
    //   a = 1:  {0, +-2pi}           (3 points)
    //   a = -1: {+-pi, +-3pi}        (4 points)
    //   a = i:  {pi/2, -3pi/2, 5pi/2} (3 points)
    // so the closest cross-value pair is pi/2 apart and p = 2 weights are 1.
    std::vector<ExtendedPoint> values = {ExtendedPoint(Vec(1.0, 0.0)),
                                         ExtendedPoint(Vec(-1.0, 0.0)),
                                         ExtendedPoint(Vec(0.0, 1.0))};
    SeparationReport rep = separation_statistic(*e, values, Vec(0.0, 0.0), 10.0, 2.0, 1);
    CHECK(rep.value == doctest::Approx(kPi / 2.0).epsilon(1e-12));
    CHECK(rep.preimage_counts == std::vector<std::size_t>({3, 4, 3}));

    CHECK_THROWS_AS(separation_statistic(*e, values, Vec(0.0, 0.0), 10.0, 2.0, -1),
                    std::invalid_argument);
    CHECK_THROWS_AS(separation_statistic(*e, values, Vec(0.0, 0.0), 10.0, 2.0, 2),
                    std::invalid_argument); // needs l + 2 = 4 values
    CHECK_THROWS_AS(separation_statistic(*e, values, Vec(0.0, 0.0, 0.0), 10.0, 2.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(separation_statistic(*e, values, Vec(0.0, 0.0), 0.0, 2.0, 1),
                    std::invalid_argument);
}

TEST_CASE("value-first detection along the exp_square diagonal") {
    // On the ray arg z = pi/4 the map e^{z^2} has |f| = 1 and spherical
    // derivative t at |z| = t, so a ball B_p(x_m, delta) maps onto the band
    // of log-moduli +-2 t^{3-p} delta (all phases once the band beats pi).
    // For p < 3 that band engulfs the sphere except shrinking caps at 0 and
    // infinity; at p = 3 it freezes at width ~2 delta and misses most values.
    MappingPtr es = make_exp_square();
    PointSequence X = diagonal_seq(16);

    MpConfig cfg;
    cfg.value_count = 300;
    cfg.threads = 4;
    cfg.seed = 20260814;

    for (double p : {1.5, 2.0}) {
        MpReport rep = mp_detect(*es, X, p, 0.5, cfg);
        CHECK(rep.evidence);
        CHECK(rep.verdict == "M_p-evidence");
        CHECK(rep.within_l);
        CHECK(rep.within_l_plus_1);
        CHECK(rep.failing_values == 0);
        CHECK(rep.clusters == 0);
        CHECK(rep.late_start == 8);
        REQUIRE(rep.per_value.size() == 300);
        for (const auto& ev : rep.per_value) {
            CHECK(ev.attained);
            CHECK(ev.worst_gap <= cfg.eps_cover);
            // Companions live inside the weighted balls, so their weighted
            // distance to the late sequence cannot exceed delta.
            CHECK(ev.companion_dp <= 0.5 * (1.0 + 1e-12));
        }
    }

    MpReport p3 = mp_detect(*es, X, 3.0, 0.5, cfg);
    CHECK_FALSE(p3.evidence);
    CHECK(p3.verdict == "not M_p at this resolution");
    CHECK_FALSE(p3.within_l);
    CHECK_FALSE(p3.within_l_plus_1); // failing values blanket the sphere
    CHECK(p3.failing_values > 100);
    CHECK(p3.clusters == 4); // greedy count capped at l + 2
    bool saw_nan_dp = false;
    for (const auto& ev : p3.per_value)
        if (!ev.attained) {
            CHECK(ev.worst_gap > cfg.eps_cover);
            saw_nan_dp = saw_nan_dp || std::isnan(ev.companion_dp);
        }
    CHECK(saw_nan_dp);

    CHECK_THROWS_AS(mp_detect(*es, X, 0.5, 0.5, cfg), std::invalid_argument);
    CHECK_THROWS_AS(mp_detect(*es, X, 2.0, 0.0, cfg), std::invalid_argument);
    MpConfig bad = cfg;
    bad.value_count = 8;
    CHECK_THROWS_AS(mp_detect(*es, X, 2.0, 0.5, bad), std::invalid_argument);
    bad = cfg;
    bad.starts = 4;
    CHECK_THROWS_AS(mp_detect(*es, X, 2.0, 0.5, bad), std::invalid_argument);
    CHECK_THROWS_AS(mp_detect(*make_zorich(), X, 2.0, 0.5, cfg), std::invalid_argument);
}

TEST_CASE("domain-first coverage along the exp_square diagonal") {
    MappingPtr es = make_exp_square();
    PointSequence X = diagonal_seq(16);
    MuConfig cfg;
    cfg.threads = 4;

    // p = 2: effective radius 1/2, image band e^{+-t} for t >= 9.
    CoverageReport c2 = mu_p_cover_check(*es, X, 2.0, {0.5}, {0.1}, cfg);
    CHECK(c2.evidence);
    CHECK(c2.verdict == "mu_p-evidence");
    REQUIRE(c2.covered_fraction.size() == 8);
    CHECK(c2.radii == std::vector<double>(8, 0.5));
    CHECK(c2.cluster_bound == std::vector<double>(8, 0.1));
    CHECK(c2.cell_diameter <= 0.1 / 3.0);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(c2.covered_fraction[i] >= 0.999);
        CHECK(c2.cluster_count[i] <= 2);
        CHECK(c2.max_cluster_diameter[i] <= 0.1);
        CHECK(c2.evaluations[i] > 0);
        CHECK(c2.evaluations[i] <= cfg.max_evals);
    }

    // p = 3/2: wider balls; a smaller radius keeps the tree within budget
    // while the image band 2 t^{1.5} r still dwarfs the sphere.
    CoverageReport c15 = mu_p_cover_check(*es, X, 1.5, {0.2}, {0.1}, cfg);
    CHECK(c15.evidence);
    for (std::size_t i = 0; i < 8; ++i) CHECK(c15.covered_fraction[i] >= 0.999);

    // p = 3: the image band stops growing and the uncovered complement of a
    // small drifting patch cannot fit in two small clusters.
    CoverageReport c3 = mu_p_cover_check(*es, X, 3.0, {0.5}, {0.1}, cfg);
    CHECK_FALSE(c3.evidence);
    CHECK(c3.verdict == "no mu_p-evidence");
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(c3.covered_fraction[i] < 0.9);
        CHECK(c3.cluster_count[i] == 3); // capped at l + 1
    }
    CHECK_FALSE(c3.final_uncovered.empty());

    // Determinism across thread counts (no RNG anywhere in this route).
    MuConfig serial = cfg;
    serial.threads = 1;
    CoverageReport c3s = mu_p_cover_check(*es, X, 3.0, {0.5}, {0.1}, serial);
    CHECK(c3s.covered_fraction == c3.covered_fraction);
    CHECK(c3s.cluster_count == c3.cluster_count);
    CHECK(c3s.evaluations == c3.evaluations);

    // Schedule and raster validation.
    CHECK_THROWS_AS(mu_p_cover_check(*es, X, 0.5, {0.5}, {0.1}, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(mu_p_cover_check(*es, X, 2.0, {0.5, 0.4}, {0.1}, cfg),
                    std::invalid_argument); // length must be 1 or n_late
    std::vector<double> increasing(8, 0.3);
    increasing.back() = 0.4;
    CHECK_THROWS_AS(mu_p_cover_check(*es, X, 2.0, increasing, {0.1}, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(mu_p_cover_check(*es, X, 2.0, {0.5}, {0.01}, cfg),
                    std::invalid_argument); // raster cells must be <= min(L)/3
    MuConfig coarse = cfg;
    coarse.theta_bands = 4;
    CHECK_THROWS_AS(mu_p_cover_check(*es, X, 2.0, {0.5}, {0.1}, coarse),
                    std::invalid_argument);
    CHECK_THROWS_AS(mu_p_cover_check(*make_zorich(), X, 2.0, {0.5}, {0.1}, cfg),
                    std::invalid_argument);
}
