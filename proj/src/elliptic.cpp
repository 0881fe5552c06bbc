#include "qrlab/elliptic.hpp"

#include <algorithm>
#include <cmath>

namespace qrlab {

namespace {

cplx csc2(cplx w) {
    cplx s = std::sin(w);
    double m = std::abs(s);
    if (m > 1e150) return cplx(0.0, 0.0); // tail rows underflow harmlessly
    return 1.0 / (s * s);
}

// chordal-style closeness of two complex values, tolerant of huge magnitudes
double value_gap(cplx a, cplx b) {
    double sa = std::sqrt(1.0 + std::norm(a));
    double sb = std::sqrt(1.0 + std::norm(b));
    return std::abs(a - b) / (sa * sb);
}

} // namespace

WeierstrassP::WeierstrassP(cplx omega1, cplx omega2) : w1_(omega1), w2_(omega2) {
    if (std::abs(omega1) == 0.0 || std::abs(omega2) == 0.0) {
        throw std::invalid_argument("WeierstrassP: lattice generators must be nonzero");
    }
    tau_ = omega2 / omega1;
    if (tau_.imag() < 0.0) { // orient the basis
        w2_ = -w2_;
        tau_ = -tau_;
    }
    if (tau_.imag() < 1e-9) {
        throw std::invalid_argument("WeierstrassP: generators are collinear (degenerate lattice)");
    }
    // exp(-2 pi Im(tau) * rows) < 1e-16 with margin.
    rows_ = static_cast<int>(std::ceil(6.5 / tau_.imag())) + 2;
    rows_ = std::min(rows_, 4000);

    // Coarse inversion grid over one fundamental cell (cached once; the grid
    // start makes the Newton inversion reliable for every target value).
    const int G = 32;
    grid_z_.reserve(G * G);
    grid_val_.reserve(G * G);
    for (int j = 0; j < G; ++j) {
        for (int k = 0; k < G; ++k) {
            cplx zeta = (j + 0.5) / G - 0.5 + tau_ * ((k + 0.5) / G - 0.5);
            cplx z = w1_ * zeta;
            grid_z_.push_back(z);
            grid_val_.push_back(p(z));
        }
    }
}

double WeierstrassP::cell_area() const {
    return std::abs(std::conj(w1_).real() * w2_.imag() + std::conj(w1_).imag() * w2_.real());
}

cplx WeierstrassP::reduce(cplx z, long* m_out, long* n_out) const {
    // Solve z = s*w1 + t*w2 over the reals.
    double det = w1_.real() * w2_.imag() - w1_.imag() * w2_.real();
    double s = (z.real() * w2_.imag() - z.imag() * w2_.real()) / det;
    double t = (w1_.real() * z.imag() - w1_.imag() * z.real()) / det;
    double mround = std::floor(s + 0.5);
    double nround = std::floor(t + 0.5);
    if (m_out) *m_out = static_cast<long>(mround);
    if (n_out) *n_out = static_cast<long>(nround);
    return z - mround * w1_ - nround * w2_;
}

bool WeierstrassP::is_lattice_point(cplx z, double tol) const {
    return std::abs(reduce(z)) <= tol * std::max(1.0, std::abs(z));
}

cplx WeierstrassP::p_normalized(cplx zeta) const {
    const double pi2 = M_PI * M_PI;
    cplx acc = pi2 * csc2(M_PI * zeta) - pi2 / 3.0;
    for (int m = 1; m <= rows_; ++m) {
        cplx mt = static_cast<double>(m) * tau_;
        acc += pi2 * (csc2(M_PI * (zeta + mt)) + csc2(M_PI * (zeta - mt)) - 2.0 * csc2(M_PI * mt));
    }
    return acc;
}

cplx WeierstrassP::dp_normalized(cplx zeta) const {
    const double pi3 = M_PI * M_PI * M_PI;
    auto term = [](cplx w) -> cplx {
        cplx s = std::sin(w);
        if (std::abs(s) > 1e100) return cplx(0.0, 0.0);
        return std::cos(w) / (s * s * s);
    };
    cplx acc = term(M_PI * zeta);
    for (int m = 1; m <= rows_; ++m) {
        cplx mt = static_cast<double>(m) * tau_;
        acc += term(M_PI * (zeta + mt)) + term(M_PI * (zeta - mt));
    }
    return -2.0 * pi3 * acc;
}

cplx WeierstrassP::p(cplx z) const {
    cplx zr = reduce(z);
    return p_normalized(zr / w1_) / (w1_ * w1_);
}

cplx WeierstrassP::dp(cplx z) const {
    cplx zr = reduce(z);
    return dp_normalized(zr / w1_) / (w1_ * w1_ * w1_);
}

cplx WeierstrassP::g2() const {
    cplx q2 = std::exp(cplx(0.0, 2.0 * M_PI) * tau_); // nome squared
    cplx s(0.0, 0.0);
    cplx qk(1.0, 0.0);
    for (int k = 1; k <= 200; ++k) {
        qk *= q2;
        if (std::abs(qk) < 1e-20) break;
        double k3 = static_cast<double>(k) * k * k;
        s += k3 * qk / (1.0 - qk);
    }
    cplx pw = M_PI / w1_;
    return (4.0 / 3.0) * pw * pw * pw * pw * (1.0 + 240.0 * s);
}

cplx WeierstrassP::g3() const {
    cplx q2 = std::exp(cplx(0.0, 2.0 * M_PI) * tau_);
    cplx s(0.0, 0.0);
    cplx qk(1.0, 0.0);
    for (int k = 1; k <= 200; ++k) {
        qk *= q2;
        if (std::abs(qk) < 1e-20) break;
        double k5 = std::pow(static_cast<double>(k), 5);
        s += k5 * qk / (1.0 - qk);
    }
    cplx pw = M_PI / w1_;
    cplx pw6 = pw * pw * pw;
    pw6 *= pw6;
    return (8.0 / 27.0) * pw6 * (1.0 - 504.0 * s);
}

std::vector<WeierstrassP::Base> WeierstrassP::invert(const ExtendedPoint& a) const {
    if (a.is_infinite()) return {{cplx(0.0, 0.0), 2}};
    cplx target = to_complex(a.finite());

    // Branch values e_j sit at the half-periods and carry multiplicity 2.
    const cplx halves[3] = {0.5 * w1_, 0.5 * w2_, 0.5 * (w1_ + w2_)};
    for (const cplx& h : halves) {
        if (value_gap(p(h), target) <= 1e-9) return {{h, 2}};
    }

    // Newton refinement from the best cached grid starts.
    std::vector<std::size_t> order(grid_z_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + 8, order.end(),
                      [&](std::size_t i, std::size_t j) {
                          return value_gap(grid_val_[i], target) < value_gap(grid_val_[j], target);
                      });
    for (int attempt = 0; attempt < 8; ++attempt) {
        cplx z = grid_z_[order[static_cast<std::size_t>(attempt)]];
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            cplx pv = p(z);
            if (value_gap(pv, target) <= 1e-11) {
                ok = true;
                break;
            }
            cplx dv = dp(z);
            cplx step;
            if (std::abs(target) > 1e8 || std::abs(pv) > 1e8) {
                // Near the pole work with 1/℘ instead.
                cplx u = 1.0 / pv;
                cplx du = -dv * u * u;
                if (std::abs(du) < 1e-300) break;
                step = (u - 1.0 / target) / du;
            } else {
                if (std::abs(dv) < 1e-300) break;
                step = (pv - target) / dv;
            }
            double cap = 0.25 * std::min(std::abs(w1_), std::abs(w2_));
            if (std::abs(step) > cap) step *= cap / std::abs(step);
            z -= step;
        }
        if (!ok) continue;
        cplx za = reduce(z);
        cplx zb = reduce(-za);
        if (std::abs(za - zb) <= 1e-9 * std::max(1.0, std::abs(za))) {
            return {{za, 2}}; // 2-torsion: the mirror point coincides
        }
        return {{za, 1}, {zb, 1}};
    }
    throw NumericalError("WeierstrassP::invert: Newton refinement failed for target value");
}

} // namespace qrlab
