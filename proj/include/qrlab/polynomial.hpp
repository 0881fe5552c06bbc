#pragma once

#include <complex>
#include <vector>

namespace qrlab {

using cplx = std::complex<double>;

// Dense complex polynomial, coefficients in ascending degree order.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<cplx> coeffs);

    bool is_zero() const { return coeffs_.empty(); }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; } // -1 for the zero polynomial
    const std::vector<cplx>& coeffs() const { return coeffs_; }

    cplx eval(cplx z) const;
    Polynomial derivative() const;

    // this + s * other
    Polynomial axpy(cplx s, const Polynomial& other) const;

private:
    std::vector<cplx> coeffs_; // empty means the zero polynomial
};

struct RootCluster {
    cplx location;
    int multiplicity;
};

// All complex roots with multiplicities, via Durand-Kerner iteration followed
// by cluster merging (radius cluster_tol) and multiplicity-aware Newton
// polishing. Throws NumericalError if the iteration fails to settle.
std::vector<RootCluster> polynomial_roots(const Polynomial& p, double cluster_tol = 1e-6);

} // namespace qrlab
