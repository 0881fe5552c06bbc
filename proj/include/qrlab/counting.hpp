#pragma once

#include "qrlab/geometry.hpp"
#include "qrlab/mapping.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qrlab {

enum class CountMethod { Analytic, ArgumentPrinciple };

// Argument-principle boundary scan (n = 2): multiplicity count of a-points of
// f in the open disk B(center, radius) from the winding of f - a along the
// boundary (plus the structural pole count; rational maps are counted through
// pole-free polynomial windings). boundary_margin is the dense-sampled chordal
// clearance of a from f(boundary); below 1e-6 a MarginViolation is thrown,
// except when the count is structural (pole-free map, a = infinity -> 0).
struct WindingOutcome {
    long count = 0;
    double boundary_margin = 0.0;
    std::size_t samples = 0;
};
WindingOutcome winding_count(const Mapping& f, const Vec& center, double radius,
                             const ExtendedPoint& a);

// One resolved counting query n(x, r, a) with the route that produced it.
struct CountingSample {
    Vec x;
    double r = 0.0;
    ExtendedPoint a;
    long count = 0;
    CountMethod method = CountMethod::Analytic;
};

// n(x, r, a): multiplicity-weighted number of a-points in B(x, r). Routes to
// the analytic enumerator when available, otherwise the argument principle;
// `force` pins one route (used by the cross-validation batteries).
CountingSample count_apoints(const Mapping& f, const Vec& x, double r, const ExtendedPoint& a,
                             std::optional<CountMethod> force = std::nullopt);

// N(f, y, B(a, r)) = sum of local indices over the y-points in B(a, r).
long multiplicity_sum(const Mapping& f, const ExtendedPoint& y, const Vec& a, double r);

// Monte Carlo estimates of the averaged counting function A_f(r).
struct AfrEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long samples = 0;
    int jittered = 0;       // sphere route: values that needed a margin jitter
    std::string method;
};

// Route 1: average n(0, r, y) over values y drawn from the normalized chordal
// measure (inverse-transform sampling of the radial profile).
AfrEstimate afr_sphere(const Mapping& f, double r, long value_count, std::uint64_t seed,
                       int threads = 1);

// Route 2: domain integral (1/lambda_n) Int_{B(0,r)} J(x,f)/(1+|f|^2)^n dm(x)
// by low-discrepancy sampling of the ball.
AfrEstimate afr_domain(const Mapping& f, double r, long samples, std::uint64_t seed,
                       int threads = 1);

// Local average counting function A_f(x, r) over B(x, r) (domain route).
AfrEstimate afr_local(const Mapping& f, const Vec& x, double r, long samples,
                      std::uint64_t seed, int threads = 1);

// Log-log least-squares growth exponent over the upper half of the radius
// grid. Requires >= 5 radii spanning a factor >= 8; non-positive values are
// excluded (errors if fewer than 3 usable points remain).
struct GrowthFit {
    double exponent = 0.0;
    double log_coefficient = 0.0; // fitted log A = exponent * log r + log_coefficient
    double residual = 0.0;        // RMS of log residuals over fitted points
    int points_used = 0;
};
GrowthFit growth_fit(const std::vector<double>& radii, const std::vector<double>& values);

// sup_x q(f(closed B(x, r))) over a grid, per radius; cumulative sampling
// (points kept from every smaller radius) makes the profile monotone
// non-decreasing in r by construction.
struct OscillationProfile {
    std::vector<double> radii;
    std::vector<double> sup_diameter;
    std::vector<Vec> witnesses;
};
OscillationProfile oscillation_profile(const Mapping& f, const std::vector<Vec>& grid,
                                       std::vector<double> radii, int ball_samples = 64,
                                       int threads = 1);

struct MinOscillation {
    double value = 0.0;
    double radius = 0.0;
    Vec witness;
};
MinOscillation min_oscillation(const Mapping& f, const std::vector<Vec>& grid, double r,
                               int ball_samples = 64, int threads = 1);

} // namespace qrlab
