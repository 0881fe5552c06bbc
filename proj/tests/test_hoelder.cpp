#include "qrlab/hoelder.hpp"

#include "qrlab/geometry.hpp"
#include "qrlab/mapping.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

using namespace qrlab;
using cplx = std::complex<double>;

namespace {

Vec diag(double t) { return Vec(t / std::sqrt(2.0), t / std::sqrt(2.0)); }

// Spherical derivative |f'(z)| / (1 + |f(z)|^2) through the complex form; an
// oracle route independent of quotient_profile, which only calls evaluate.
double spherical_derivative(const Mapping& f, const Vec& x) {
    cplx z = to_complex(x);
    return std::abs(f.complex_derivative(z)) / (1.0 + std::norm(f.complex_value(z)));
}

HoelderConfig fine_ladder() {
    HoelderConfig cfg;
    cfg.scales = {1e-4, 1e-5};
    cfg.directions = 16;
    cfg.seed = 20260814;
    return cfg;
}

} // namespace

TEST_CASE("alpha exponent follows K^(1/(1-n))") {
    CHECK(alpha_of(2, 1.0) == doctest::Approx(1.0));
    CHECK(alpha_of(2, 4.0) == doctest::Approx(0.25));
    CHECK(alpha_of(3, 8.0) == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0))));
    CHECK(alpha_of(3, 1.0) == doctest::Approx(1.0));

    // The specimens report the same exponent through alpha().
    CHECK(make_exponential()->alpha() == doctest::Approx(1.0));
    CHECK(make_winding(3, 3)->alpha() == doctest::Approx(1.0 / 3.0)); // K = 9
    CHECK(make_zorich(10.0)->alpha() == doctest::Approx(std::pow(10.0, -0.5)));
}

TEST_CASE("finite-scale quotient converges to the spherical derivative") {
    HoelderConfig cfg = fine_ladder();

    // exp: f# = 1 / (2 cosh x0), maximal 1/2 on the imaginary axis.
    MappingPtr e = make_exponential();
    for (Vec x : {Vec(0.0, 0.0), Vec(1.0, 2.0), Vec(-2.0, 0.5)}) {
        double expected = 1.0 / (2.0 * std::cosh(x[0]));
        double got = quotient_profile(*e, x, cfg).q_hat;
        CHECK(got == doctest::Approx(expected).epsilon(1e-3));
    }

    MappingPtr s = make_sine();
    Vec xs(0.3, -0.2);
    CHECK(quotient_profile(*s, xs, cfg).q_hat ==
          doctest::Approx(spherical_derivative(*s, xs)).epsilon(1e-3));

    MappingPtr wp = make_elliptic();
    Vec xe(0.37, 0.41);
    CHECK(quotient_profile(*wp, xe, cfg).q_hat ==
          doctest::Approx(spherical_derivative(*wp, xe)).epsilon(2e-3));
}

TEST_CASE("profile structure: one entry per scale, limsup from the two finest") {
    HoelderConfig cfg;
    cfg.scales = {1e-1, 1e-2, 1e-3, 1e-4};
    cfg.directions = 16;
    cfg.seed = 3;
    MappingPtr e = make_exponential();
    QuotientProfile prof = quotient_profile(*e, Vec(0.4, 0.9), cfg);

    REQUIRE(prof.entries.size() == cfg.scales.size());
    for (std::size_t i = 0; i < cfg.scales.size(); ++i) {
        CHECK(prof.entries[i].scale == cfg.scales[i]); // coarsest first
        CHECK(prof.entries[i].max_quotient > 0.0);
        CHECK(prof.entries[i].witness_direction.norm() == doctest::Approx(1.0));
    }
    CHECK(prof.q_hat == std::max(prof.entries[2].max_quotient,
                                 prof.entries[3].max_quotient));
    CHECK(prof.alpha == doctest::Approx(1.0));

    // A one-rung ladder uses its only entry.
    cfg.scales = {1e-3};
    prof = quotient_profile(*e, Vec(0.4, 0.9), cfg);
    CHECK(prof.q_hat == prof.entries[0].max_quotient);
}

TEST_CASE("probe stars translate rigidly with the anchor") {
    HoelderConfig cfg;
    cfg.directions = 16;
    cfg.seed = 7;

    for (const auto& f : {make_exponential(), make_sine()}) {
        for (Vec a : {Vec(1.5, -2.0), Vec(-0.75, 0.5)}) {
            Vec x(0.25, 0.75);
            QuotientProfile moved = quotient_profile(*translate(f, a), x, cfg);
            QuotientProfile direct = quotient_profile(*f, a + x, cfg);
            REQUIRE(moved.entries.size() == direct.entries.size());
            for (std::size_t i = 0; i < moved.entries.size(); ++i) {
                double lhs = moved.entries[i].max_quotient;
                double rhs = direct.entries[i].max_quotient;
                CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(lhs, rhs));
            }
            CHECK(std::abs(moved.q_hat - direct.q_hat) <=
                  1e-9 * std::max(moved.q_hat, direct.q_hat));
        }
    }
}

TEST_CASE("matched-scale rescaling identity holds to 1e-12") {
    std::vector<MappingPtr> maps = {make_exponential(), make_sine(), make_elliptic()};
    std::vector<Vec> anchors = {Vec(2.0, 1.0), Vec(0.7, -1.3), Vec(5.0, 0.0)};
    for (const auto& f : maps)
        for (const Vec& a : anchors)
            for (double p : {1.5, 2.0, 3.0})
                for (double scale : {1e-2, 1e-3}) {
                    double disc = rescale_identity_check(*f, a, p, scale, 16, 11);
                    CHECK(disc <= 1e-12);
                }

    // The identity is dimension-agnostic: a spatial specimen passes too.
    CHECK(rescale_identity_check(*make_zorich(), Vec(1.0, 2.0, 0.5), 2.5, 1e-2, 32, 11) <=
          1e-12);
}

TEST_CASE("exp grid is yosida-consistent with sup near one half") {
    std::vector<Vec> grid;
    for (double x0 = -3.0; x0 <= 3.0 + 1e-9; x0 += 0.5)
        for (double x1 = -3.0; x1 <= 3.0 + 1e-9; x1 += 0.5) grid.push_back(Vec(x0, x1));

    YosidaConfig cfg;
    cfg.hoelder.seed = 5;
    YosidaIndicator ind = yosida_indicator(*make_exponential(), grid, cfg);

    // sup_x f# = 1/2, attained exactly on the imaginary axis.
    CHECK(ind.sup_q_hat == doctest::Approx(0.5).epsilon(5e-3));
    CHECK(ind.witness[0] == 0.0);
    CHECK(ind.grid_points == grid.size());
    CHECK_FALSE(ind.blowup_trigger);
    CHECK_FALSE(ind.trend_trigger);
    CHECK(ind.yosida_consistent);
    CHECK(ind.verdict == "yosida-consistent");
    CHECK(ind.band_max.size() == 10);
}

TEST_CASE("exp_square: chordally flat along the real axis, steep on the diagonal") {
    MappingPtr es = make_exp_square();
    HoelderConfig cfg = fine_ladder();

    // At 20 e1 the map and its whole probe star sit beyond the pole cap
    // (Re z^2 > 398 against a cap at log 1e12 ~ 27.6), so every chordal
    // increment vanishes identically: the real ray is degenerate, not steep.
    CHECK(quotient_profile(*es, Vec(20.0, 0.0), cfg).q_hat == 0.0);

    // At 2 e1 the value is still representable and f# = 4 e^4 / (1 + e^8).
    double expected = 4.0 * std::exp(4.0) / (1.0 + std::exp(8.0));
    CHECK(quotient_profile(*es, Vec(2.0, 0.0), cfg).q_hat ==
          doctest::Approx(expected).epsilon(1e-3));

    // On the diagonal Re z^2 = 0, |f| = 1 and f#(t diag) = t: the quotient
    // grows without bound and passes the blowup threshold well before t=1500.
    CHECK(quotient_profile(*es, diag(30.0), cfg).q_hat ==
          doctest::Approx(30.0).epsilon(1e-2));
    CHECK(quotient_profile(*es, diag(1500.0), cfg).q_hat > 1e3);
}

TEST_CASE("diagonal grids drive both divergence triggers for exp_square") {
    MappingPtr es = make_exp_square();

    // Linear growth across 12 bands: outer/inner ratio 12 > trend_factor 10,
    // monotone over the outer half, sup 120 far below the blowup threshold.
    std::vector<Vec> trend_grid;
    for (int t = 1; t <= 120; ++t) trend_grid.push_back(diag(static_cast<double>(t)));
    YosidaConfig cfg;
    cfg.bands = 12;
    cfg.hoelder.seed = 9;
    YosidaIndicator trend = yosida_indicator(*es, trend_grid, cfg);
    CHECK(trend.trend_trigger);
    CHECK_FALSE(trend.blowup_trigger);
    CHECK_FALSE(trend.yosida_consistent);
    CHECK(trend.verdict == "non-yosida-evidence");

    // Far anchors exceed the blowup threshold outright.
    std::vector<Vec> blowup_grid = {diag(500.0), diag(1000.0), diag(1500.0),
                                    diag(2000.0)};
    YosidaIndicator blowup = yosida_indicator(*es, blowup_grid, YosidaConfig{});
    CHECK(blowup.blowup_trigger);
    CHECK(blowup.sup_q_hat > 1e3);
    CHECK(blowup.verdict == "non-yosida-evidence");
}

TEST_CASE("weighted indicator separates the real ray from the diagonal") {
    YosidaConfig cfg;
    cfg.hoelder.seed = 13;

    // exp with p = 2 along the imaginary axis: weight 1, quotient 1/2 forever.
    std::vector<Vec> imag_ray;
    for (int m = 1; m <= 100; ++m) imag_ray.push_back(Vec(0.0, static_cast<double>(m)));
    PYosidaIndicator pe = p_yosida_indicator(*make_exponential(), 2.0, imag_ray, cfg);
    CHECK(pe.limsup_estimate == doctest::Approx(0.5).epsilon(5e-3));
    CHECK(pe.consistent);
    CHECK(pe.verdict == "p-yosida-consistent");
    CHECK(pe.weighted.size() == imag_ray.size());

    MappingPtr es = make_exp_square();

    // exp_square with p = 3 along the real ray: every far anchor is capped,
    // so the weighted tail is identically zero.
    std::vector<Vec> real_ray;
    for (int m = 1; m <= 100; ++m) real_ray.push_back(Vec(static_cast<double>(m), 0.0));
    PYosidaIndicator pr = p_yosida_indicator(*es, 3.0, real_ray, cfg);
    CHECK(pr.limsup_estimate == 0.0);
    CHECK(pr.consistent);

    // exp_square with p = 1.5 along the diagonal: weighted entry ~ t^1.5
    // blows past the threshold by t = 150.
    std::vector<Vec> diag_ray;
    for (int t = 1; t <= 150; ++t) diag_ray.push_back(diag(static_cast<double>(t)));
    PYosidaIndicator pd = p_yosida_indicator(*es, 1.5, diag_ray, cfg);
    CHECK(pd.blowup_trigger);
    CHECK(pd.limsup_estimate > 1e3);
    CHECK_FALSE(pd.consistent);
    CHECK(pd.verdict == "non-p-yosida-evidence");
}

TEST_CASE("finite-stage limit inequality holds with nonnegative slack") {
    MappingPtr e = make_exponential();
    std::vector<Vec> anchors;
    for (int m = 1; m <= 128; m *= 2) anchors.push_back(Vec(0.0, static_cast<double>(m)));
    Vec x(0.3, 0.1);
    HoelderConfig cfg;
    cfg.seed = 17;

    for (double p : {1.5, 2.0}) {
        for (std::size_t stage : {std::size_t(1), std::size_t(4), anchors.size()}) {
            LimitInequality li = limit_inequality_check(*e, p, anchors, x, stage, cfg);
            CHECK(li.holds);
            CHECK(li.slack >= 0.0);
            CHECK(li.lhs <= li.bound);
        }
    }

    // p = 2 kills the geometric factor exactly.
    LimitInequality flat = limit_inequality_check(*e, 2.0, anchors, x, 3, cfg);
    CHECK(flat.factor == 1.0);
}

TEST_CASE("empirical normality constant") {
    HoelderConfig cfg;

    // Single off-center pair of exp: the quotient approximates f#(0) = 1/2.
    double h = 1e-3;
    NormalityConstant nc = normality_constant({make_exponential()}, {Vec(0.0, 0.0)},
                                              {Vec(h, 0.0)}, cfg);
    CHECK(nc.value == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(nc.family_index == 0);

    // Constant maps contribute nothing; coincident pairs are skipped.
    NormalityConstant flat = normality_constant({make_constant(ExtendedPoint(Vec(1.0, 0.0)))},
                                                {Vec(1.0, 1.0)}, {Vec(1.0, 1.0)}, cfg);
    CHECK(flat.value == 0.0);

    // The family sup dominates each member's individual sup.
    std::vector<Vec> grid = {Vec(0.0, 0.0), Vec(1.0, -1.0)};
    std::vector<Vec> probes = {Vec(0.5, 0.5), Vec(-1.0, 0.25)};
    double only_exp = normality_constant({make_exponential()}, grid, probes, cfg).value;
    double only_sine = normality_constant({make_sine()}, grid, probes, cfg).value;
    NormalityConstant both =
        normality_constant({make_exponential(), make_sine()}, grid, probes, cfg);
    CHECK(both.value >= only_exp);
    CHECK(both.value >= only_sine);
    CHECK(both.value == doctest::Approx(std::max(only_exp, only_sine)));

    CHECK_THROWS_AS(normality_constant({}, grid, probes, cfg), std::invalid_argument);
}

TEST_CASE("configuration validation rejects malformed probes") {
    MappingPtr e = make_exponential();
    Vec x(0.0, 0.0);

    HoelderConfig bad;
    bad.scales = {};
    CHECK_THROWS_AS(quotient_profile(*e, x, bad), std::invalid_argument);
    bad.scales = {1e-2, 1e-2};
    CHECK_THROWS_AS(quotient_profile(*e, x, bad), std::invalid_argument);
    bad.scales = {1e-2, 1e-9};
    CHECK_THROWS_AS(quotient_profile(*e, x, bad), std::invalid_argument);
    bad.scales = {1e-1, 1e-2};
    bad.directions = 4; // dim 2 requires >= 8
    CHECK_THROWS_AS(quotient_profile(*e, x, bad), std::invalid_argument);

    HoelderConfig cfg;
    cfg.directions = 16; // dim 3 requires >= 32
    CHECK_THROWS_AS(quotient_profile(*make_zorich(), Vec(0.0, 0.0, 0.0), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(quotient_profile(*e, Vec(0.0, 0.0, 0.0), HoelderConfig{}),
                    std::invalid_argument);

    YosidaConfig ycfg;
    ycfg.bands = 1;
    CHECK_THROWS_AS(yosida_indicator(*e, {x}, ycfg), std::invalid_argument);
    CHECK_THROWS_AS(yosida_indicator(*e, {}, YosidaConfig{}), std::invalid_argument);

    std::vector<Vec> ray;
    for (int m = 1; m <= 100; ++m) ray.push_back(Vec(0.0, static_cast<double>(m)));
    CHECK_THROWS_AS(p_yosida_indicator(*e, 1.0, ray, YosidaConfig{}),
                    std::invalid_argument);
    std::vector<Vec> few(ray.begin(), ray.begin() + 9);
    CHECK_THROWS_AS(p_yosida_indicator(*e, 2.0, few, YosidaConfig{}),
                    std::invalid_argument);
    std::vector<Vec> unsorted = ray;
    std::swap(unsorted.front(), unsorted.back());
    CHECK_THROWS_AS(p_yosida_indicator(*e, 2.0, unsorted, YosidaConfig{}),
                    std::invalid_argument);
    std::vector<Vec> narrow;
    for (int m = 1; m <= 99; ++m) narrow.push_back(Vec(0.0, 1.0 + 0.5 * m));
    CHECK_THROWS_AS(p_yosida_indicator(*e, 2.0, narrow, YosidaConfig{}),
                    std::invalid_argument);

    CHECK_THROWS_AS(rescale_identity_check(*e, Vec(0.0, 0.0), 2.0, 1e-2, 16, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(rescale_identity_check(*e, Vec(1.0, 0.0), 2.0, 0.0, 16, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(rescale_identity_check(*e, Vec(1.0, 0.0), 0.5, 1e-2, 16, 1),
                    std::invalid_argument);

    std::vector<Vec> anchors = {Vec(0.0, 1.0), Vec(0.0, 2.0)};
    CHECK_THROWS_AS(limit_inequality_check(*e, 1.0, anchors, x, 1, HoelderConfig{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(limit_inequality_check(*e, 2.0, anchors, x, 0, HoelderConfig{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(limit_inequality_check(*e, 2.0, anchors, x, 3, HoelderConfig{}),
                    std::invalid_argument);
}

TEST_CASE("field evaluation is deterministic across thread counts") {
    std::vector<Vec> grid;
    for (double x0 = -1.0; x0 <= 1.0 + 1e-9; x0 += 0.25)
        for (double x1 = -1.0; x1 <= 1.0 + 1e-9; x1 += 0.25) grid.push_back(Vec(x0, x1));

    HoelderConfig one;
    one.threads = 1;
    one.seed = 21;
    HoelderConfig four = one;
    four.threads = 4;

    MappingPtr s = make_sine();
    auto serial = hoelder_field(*s, grid, one);
    auto parallel = hoelder_field(*s, grid, four);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i)
        CHECK(serial[i].q_hat == parallel[i].q_hat); // bitwise equal

    CHECK_THROWS_AS(hoelder_field(*s, {}, one), std::invalid_argument);
}
