#include "qrlab/polynomial.hpp"

#include "qrlab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace qrlab {

namespace {

// Coefficients below this (relative to the largest one) are treated as zero
// when trimming the leading term, so degree drops are handled explicitly.
constexpr double kCoeffTrim = 1e-14;

} // namespace

Polynomial::Polynomial(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
    double scale = 0.0;
    for (const cplx& c : coeffs_) scale = std::max(scale, std::abs(c));
    while (!coeffs_.empty() && std::abs(coeffs_.back()) <= kCoeffTrim * scale) {
        coeffs_.pop_back();
    }
    if (scale == 0.0) coeffs_.clear();
}

cplx Polynomial::eval(cplx z) const {
    cplx acc(0.0, 0.0);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return Polynomial();
    std::vector<cplx> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) {
        d[i - 1] = coeffs_[i] * static_cast<double>(i);
    }
    return Polynomial(std::move(d));
}

Polynomial Polynomial::axpy(cplx s, const Polynomial& other) const {
    std::vector<cplx> out(std::max(coeffs_.size(), other.coeffs_.size()), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < coeffs_.size(); ++i) out[i] = coeffs_[i];
    for (std::size_t i = 0; i < other.coeffs_.size(); ++i) out[i] += s * other.coeffs_[i];
    return Polynomial(std::move(out));
}

std::vector<RootCluster> polynomial_roots(const Polynomial& p, double cluster_tol) {
    if (p.is_zero()) {
        throw std::invalid_argument("polynomial_roots: zero polynomial has no discrete roots");
    }
    int n = p.degree();
    if (n == 0) return {};

    // Monic normalization.
    std::vector<cplx> c(p.coeffs());
    cplx lead = c.back();
    for (auto& ci : c) ci /= lead;
    Polynomial monic(c);
    Polynomial dmonic = monic.derivative();

    // Cauchy bound for the root radius.
    double bound = 0.0;
    for (int i = 0; i < n; ++i) bound = std::max(bound, std::abs(c[static_cast<std::size_t>(i)]));
    bound = 1.0 + bound;

    // Durand-Kerner from a slightly irrational starting circle.
    std::vector<cplx> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double th = 2.0 * M_PI * i / n + 0.7390851332151607;
        w[static_cast<std::size_t>(i)] = 0.9 * bound * cplx(std::cos(th), std::sin(th));
    }
    bool settled = false;
    for (int iter = 0; iter < 800 && !settled; ++iter) {
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            cplx denom(1.0, 0.0);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                cplx d = w[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(j)];
                if (std::abs(d) < 1e-300) d = cplx(1e-300, 0.0);
                denom *= d;
            }
            cplx step = monic.eval(w[static_cast<std::size_t>(i)]) / denom;
            w[static_cast<std::size_t>(i)] -= step;
            worst = std::max(worst,
                             std::abs(step) / std::max(1.0, std::abs(w[static_cast<std::size_t>(i)])));
        }
        settled = worst < 1e-13;
    }
    if (!settled) {
        // Multiple roots stall the simultaneous iteration at ~sqrt(eps); the
        // polish below recovers them, so only a gross failure is fatal.
        double residual = 0.0;
        for (const cplx& wi : w) residual = std::max(residual, std::abs(monic.eval(wi)));
        if (residual > 1e-6 * std::max(1.0, std::pow(bound, n))) {
            throw NumericalError("polynomial_roots: Durand-Kerner iteration did not converge");
        }
    }

    // Greedy clustering, then multiplicity-aware Newton polish per cluster.
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    std::vector<RootCluster> out;
    for (int i = 0; i < n; ++i) {
        if (used[static_cast<std::size_t>(i)]) continue;
        cplx sum = w[static_cast<std::size_t>(i)];
        int count = 1;
        used[static_cast<std::size_t>(i)] = true;
        for (int j = i + 1; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            if (std::abs(w[static_cast<std::size_t>(j)] - w[static_cast<std::size_t>(i)]) <=
                cluster_tol * std::max(1.0, std::abs(w[static_cast<std::size_t>(i)]))) {
                sum += w[static_cast<std::size_t>(j)];
                used[static_cast<std::size_t>(j)] = true;
                ++count;
            }
        }
        cplx z = sum / static_cast<double>(count);
        for (int it = 0; it < 60; ++it) {
            cplx fv = monic.eval(z);
            cplx dv = dmonic.eval(z);
            if (std::abs(dv) < 1e-300) break;
            cplx step = static_cast<double>(count) * fv / dv;
            z -= step;
            if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(z))) break;
        }
        out.push_back({z, count});
    }
    return out;
}

} // namespace qrlab
