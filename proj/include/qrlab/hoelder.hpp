#pragma once

#include "qrlab/geometry.hpp"
#include "qrlab/mapping.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qrlab {

// alpha = K^(1/(1-n)); equals 1 iff K = 1.
double alpha_of(int n, double K);

// Probe configuration for the finite-scale Hoelder quotient. The scale ladder
// must be strictly decreasing with smallest scale >= 1e-8; the direction set
// depends only on (seed, dim, directions), so probe stars translate rigidly
// with the anchor point.
struct HoelderConfig {
    std::vector<double> scales{1e-1, 1e-2, 1e-3, 1e-4};
    int directions = 16;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ScaleEntry {
    double scale;
    double max_quotient; // max over directions of q(f(x+δu), f(x)) / δ^α
    Vec witness_direction;
};

// Finite-scale measurements of Q_f at one point. q_hat is the documented
// limsup estimator: the max over the two smallest ladder scales.
struct QuotientProfile {
    Vec x;
    double alpha = 1.0;
    std::vector<ScaleEntry> entries; // one per ladder scale, coarsest first
    double q_hat = 0.0;
};

QuotientProfile quotient_profile(const Mapping& f, const Vec& x, const HoelderConfig& cfg);

// Profiles over a whole grid (parallel over points, deterministic result).
std::vector<QuotientProfile> hoelder_field(const Mapping& f, const std::vector<Vec>& grid,
                                           const HoelderConfig& cfg);

// Divergence policy for the sup-indicator verdicts. Finite sampling can never
// prove unboundedness; it can only collect evidence. Two triggers:
//   blowup: some grid point has q_hat > blowup_threshold;
//   trend:  the per-radial-band maxima of q_hat climb monotonically (within
//           slack) over the outer half of the bands and the outermost band
//           exceeds trend_factor * max(trend_floor, innermost band).
struct YosidaConfig {
    HoelderConfig hoelder;
    double blowup_threshold = 1e3;
    double trend_floor = 1.0;
    double trend_factor = 10.0;
    double trend_slack = 1.2; // per-step tolerated wobble in "monotone"
    int bands = 10;
};

struct YosidaIndicator {
    double sup_q_hat = 0.0;
    Vec witness;
    bool yosida_consistent = true;
    bool blowup_trigger = false;
    bool trend_trigger = false;
    std::vector<double> band_max; // max q_hat per |x| band (NaN for empty bands)
    std::size_t grid_points = 0;
    std::string verdict; // "yosida-consistent" | "non-yosida-evidence"
};

// Empirical sup of Q_f over the grid (a lower bound for the true sup; the
// verdict is explicitly resolution-qualified).
YosidaIndicator yosida_indicator(const Mapping& f, const std::vector<Vec>& grid,
                                 const YosidaConfig& cfg);

struct PYosidaIndicator {
    double limsup_estimate = 0.0; // max weighted entry over the top-|a| decile
    Vec witness;
    bool consistent = true;
    bool blowup_trigger = false;
    bool trend_trigger = false;
    std::vector<double> weighted; // |a|^((2-p)α) q_hat(a), in anchor order
    std::string verdict; // "p-yosida-consistent" | "non-p-yosida-evidence"
};

// Condition-(3) indicator: anchors must be nonzero, sorted by |a| increasing,
// with |a|_max / |a|_min >= 100. The weighted entry equals Q̂ of the rescaled
// map at 0 by the exact rescaling identity, so it is computed directly from f.
PYosidaIndicator p_yosida_indicator(const Mapping& f, double p, const std::vector<Vec>& anchors,
                                    const YosidaConfig& cfg);

// The exact matched-scale identity Q_{f_a}(0) = |a|^((2-p)α) Q_f(a): compares
// the finite-scale quotient of p_rescale(f, a, p) at 0 (scale δ) against the
// weighted quotient of f at a (scale δ|a|^(2-p)) per direction, and returns
// the max relative discrepancy. Algebraically zero; float slack only.
double rescale_identity_check(const Mapping& f, const Vec& a, double p, double scale,
                              int directions, std::uint64_t seed);

// Empirical Theorem-1 constant: sup over (f, x1 in grid, x2 in probes) of
// q(f(x1), f(x2)) / |x1-x2|^α. Coincident pairs are skipped.
struct NormalityConstant {
    double value = 0.0;
    std::size_t family_index = 0;
    Vec x1, x2;
};

NormalityConstant normality_constant(const std::vector<MappingPtr>& family,
                                     const std::vector<Vec>& grid,
                                     const std::vector<Vec>& probes, const HoelderConfig& cfg);

// Finite-stage check of the proof-chain inequality
//   Q_{f_{a_n}}(x) <= (sup over stages m<=n of the weighted quotient)
//                     * |e_{a_n} + |a_n|^(1-p) x|^((p-2)α) + tol.
struct LimitInequality {
    bool holds = false;
    double slack = 0.0;
    double lhs = 0.0;
    double bound = 0.0;
    double factor = 0.0; // |e_a + |a|^(1-p) x|^((p-2)α) at the final stage
};

LimitInequality limit_inequality_check(const Mapping& f, double p,
                                       const std::vector<Vec>& anchors, const Vec& x,
                                       std::size_t stage, const HoelderConfig& cfg,
                                       double tol = 1e-9);

} // namespace qrlab
