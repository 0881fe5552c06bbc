#pragma once

#include "qrlab/geometry.hpp"
#include "qrlab/polynomial.hpp"

#include <complex>
#include <vector>

namespace qrlab {

// Weierstrass ℘ for the lattice  Z*omega1 + Z*omega2, via the row-accelerated
// summation  ℘(z) = (pi/w1)^2 [ 1/sin^2(pi z/w1) - 1/3
//                    + sum_{m>=1} ( 1/sin^2(pi(z/w1+m tau)) +
//                                   1/sin^2(pi(z/w1-m tau)) - 2/sin^2(pi m tau) ) ]
// with tau = omega2/omega1. Rows decay like exp(-2 pi Im(tau) m), so the tail
// bound is explicit and the row count is chosen at construction.
class WeierstrassP {
public:
    WeierstrassP(cplx omega1, cplx omega2);

    cplx omega1() const { return w1_; }
    cplx omega2() const { return w2_; }
    double cell_area() const;
    int degree_per_cell() const { return 2; }

    // Lattice reduction: returns z - m*w1 - n*w2 with lattice coordinates in
    // [-1/2, 1/2). The integer parts are reported when requested.
    cplx reduce(cplx z, long* m_out = nullptr, long* n_out = nullptr) const;
    bool is_lattice_point(cplx z, double tol = 1e-12) const;

    // ℘ and ℘'. Values explode near lattice points; exactly on the lattice the
    // caller is expected to have tested is_lattice_point first.
    cplx p(cplx z) const;
    cplx dp(cplx z) const;

    // Lattice invariants from the independent q-series (used to cross-check
    // the evaluator through ℘'^2 = 4℘^3 - g2 ℘ - g3).
    cplx g2() const;
    cplx g3() const;

    // Solutions of ℘(z) = a modulo the lattice. Finite generic a yields the
    // pair {z_a, -z_a}; branch values e_j yield one double point at a
    // half-period; a = infinity yields the double pole at 0.
    struct Base {
        cplx z;
        int multiplicity;
    };
    std::vector<Base> invert(const ExtendedPoint& a) const;

private:
    cplx w1_, w2_, tau_;
    int rows_;
    std::vector<cplx> grid_z_;   // coarse fundamental-cell samples for inversion
    std::vector<cplx> grid_val_;

    cplx p_normalized(cplx zeta) const;  // lattice Z + tau*Z
    cplx dp_normalized(cplx zeta) const;
};

} // namespace qrlab
