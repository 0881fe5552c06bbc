#pragma once

#include "qrlab/geometry.hpp"
#include "qrlab/mapping.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qrlab {

// Ordered finite stand-in for a sequence escaping to infinity. Validity
// (checked by validate_sequence): non-empty, all points finite and nonzero,
// |x_m| strictly increasing over the last half, and |x_M| >= 10 |x_1|.
struct PointSequence {
    std::vector<Vec> points;
    std::string generator; // human-readable description of how it was built
};

void validate_sequence(const PointSequence& X);

// Weighted distance between truncated sequences, with the minimizing pair.
// One-sided value: inf over (m, k) of |x_m - y_k| / |x_m|^(2-p).
struct SequenceDistance {
    double value = 0.0;
    std::size_t m = 0, k = 0; // indices into the weight-side and other sequence
    bool swapped = false;     // d_p only: true when the (Y, X) side attained the min
};

SequenceDistance D_p(const PointSequence& X, const PointSequence& Y, double p);
SequenceDistance d_p(const PointSequence& X, const PointSequence& Y, double p);

// Per-index weighted companion gaps |x_m - y_m| / |y_m|^(2-p) (equal lengths
// required); the transfer tests read their tail trend.
std::vector<double> companion_gaps(const PointSequence& X, const PointSequence& Y, double p);

// Watches D_p(X,Y) and D_p(Y,X) across increasing truncations (M/4, M/2,
// 3M/4, M): the two one-sided values must agree about vanishing.
struct BothZeroReport {
    bool agree = false;
    bool both_below = false; // both one-sided values < eps at the full truncation
    double final_xy = 0.0, final_yx = 0.0;
    std::vector<std::size_t> truncations;
    std::vector<double> xy, yx; // one-sided values per truncation
    std::string trend;          // "both-vanishing" | "both-positive" | "split"
};

BothZeroReport both_zero_check(const PointSequence& X, const PointSequence& Y, double p,
                               double eps);

// inf over ordered pairs of distinct values (j != i) and their a-points of
// |a_jk - a_im| / |a_jk|^(2-p), excluding zero weight points a_jk = 0.
struct SeparationReport {
    double value = 0.0;
    std::size_t value_j = 0, value_i = 0; // indices into the value list
    Vec apoint_j, apoint_i;               // the minimizing pair
    std::vector<std::size_t> preimage_counts;
};

// Formula layer over explicit a-point sets (one set per value).
SeparationReport separation_from_sets(const std::vector<std::vector<Vec>>& sets, double p);

// Enumerates f^{-1}(A_j) in B(center, radius) for each listed value, then
// applies separation_from_sets. Requires values.size() >= l + 2.
SeparationReport separation_statistic(const Mapping& f, const std::vector<ExtendedPoint>& values,
                                      const Vec& center, double radius, double p, int l = 2);

// Greedy chordal clustering: first unassigned point opens a cluster, which
// absorbs everything within bound/2 of it (so cluster diameter <= bound).
// Stops early once more than `cap` clusters have opened.
struct ClusterSummary {
    std::size_t count = 0;
    std::vector<double> diameters;
    bool capped = false;
};

ClusterSummary greedy_clusters(const std::vector<ExtendedPoint>& points, double diameter_bound,
                               std::size_t cap);

// --- M_p detection (value-first search route) --------------------------------

struct MpConfig {
    double eps_cover = 1e-2;  // attainment tolerance q(f(x'), c) <= eps_cover
    double eps_cluster = 0.1; // chordal diameter bound for exceptional clusters
    int value_count = 500;    // sphere values sampled
    int l = 2;                // allowed exceptional clusters
    int starts = 16;          // multistart seeds per ball search
    int iterations = 60;      // coordinate-descent sweeps per start
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ValueEvidence {
    ExtendedPoint value;
    bool attained = false;    // every late ball reached the value within eps_cover
    double worst_gap = 0.0;   // max gap over late balls (first failing gap if !attained)
    double companion_dp = 0.0; // d_p(late X, found companions); NaN when !attained
};

struct MpReport {
    std::string verdict; // "M_p-evidence" | "not M_p at this resolution"
    bool evidence = false;
    bool within_l = false;        // failing set coverable by <= l clusters
    bool within_l_plus_1 = false; // ... by <= l+1 clusters (both counts exposed)
    std::size_t failing_values = 0;
    std::size_t clusters = 0; // greedy cluster count (capped at l+2)
    std::vector<double> cluster_diameters;
    std::vector<ValueEvidence> per_value;
    double p = 0.0, delta = 0.0;
    std::size_t late_start = 0; // first index of the late half of the sequence
};

// Searches B_p(x_m, delta) for companions x'_m with f(x'_m) chordally close
// to each sampled value c; evidence when the failing values fit in <= l small
// clusters. The verdict is resolution-qualified by construction.
MpReport mp_detect(const Mapping& f, const PointSequence& X, double p, double delta,
                   const MpConfig& cfg = {});

// --- mu_p coverage (domain-first rasterization route) -------------------------

// The raster route samples each domain ball with an adaptive quadtree/octree:
// a cell is subdivided while the chordal spread of its sampled images exceeds
// the raster cell diameter, so evaluation density automatically follows the
// image geometry (uniform sampling would starve raster cells away from where
// the pushforward measure concentrates). Fully deterministic, no RNG.
struct MuConfig {
    int theta_bands = 96;    // latitude resolution of the sphere raster
    int l = 2;
    int min_depth = 3;       // unconditional initial subdivision depth
    int max_depth = 14;      // resolution cap (deeper structure goes unseen)
    long max_evals = 4000000; // per-ball safeguard; hitting it stops refinement
    int threads = 1;
};

struct CoverageReport {
    std::string verdict; // "mu_p-evidence" | "no mu_p-evidence"
    bool evidence = false;
    double p = 0.0;
    int l = 2;
    std::size_t late_start = 0;
    double cell_diameter = 0.0;            // worst-case chordal cell diameter
    std::vector<double> radii;             // r_m actually used, one per late ball
    std::vector<double> cluster_bound;     // L_m schedule, one per late ball
    std::vector<double> covered_fraction;  // per late ball (cell-count fraction)
    std::vector<std::size_t> cluster_count;
    std::vector<double> max_cluster_diameter;
    std::vector<long> evaluations; // map evaluations spent per late ball
    std::vector<ExtendedPoint> final_uncovered; // uncovered cell centers, last ball
};

// Rasterizes f(B_p(x_m, r_m)) onto a latitude-band sphere grid and clusters
// the uncovered cells; evidence when every late ball needs <= l clusters of
// diameter <= L_m. Schedules must have length 1 (constant) or one entry per
// late ball; the raster must resolve min(L_m) (cell diameter <= min/3).
CoverageReport mu_p_cover_check(const Mapping& f, const PointSequence& X, double p,
                                const std::vector<double>& r_schedule,
                                const std::vector<double>& L_schedule,
                                const MuConfig& cfg = {});

} // namespace qrlab
