#pragma once

// Displacement fields sampled on a uniform periodic grid, plus the spectral
// machinery grid operators are assembled from.  Off-grid values are always
// those of the band-limited (trigonometric) interpolant of the samples: shifts
// become per-mode phase factors, plane waves stay exact eigenvectors of the
// shift-built operators, and displacements larger than the box wrap around.
//
// Numerical note: differences u(x) - u(x + a) for displacements far below the
// grid scale are formed in spectral space through the factor 1 - e^{ika}
// (evaluated as 2 sin^2(ka/2) - i sin(ka)), never by subtracting two nearly
// equal field values; the relative accuracy of sin then carries through to
// the difference field, where naive subtraction would surrender every digit.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fourier.hpp"
#include "numerics.hpp"

namespace selfsim {

struct Field {
    std::vector<double> u;
    double dx = 1.0;

    Field() = default;
    Field(std::vector<double> samples, double spacing) : u(std::move(samples)), dx(spacing) {
        if (u.size() < 2) throw std::invalid_argument("Field: need at least two samples");
        if (!(dx > 0.0)) throw std::invalid_argument("Field: dx must be positive");
    }

    std::size_t n() const { return u.size(); }
    double length() const { return dx * static_cast<double>(u.size()); }
    double x(std::size_t j) const { return dx * static_cast<double>(j); }
};

inline double grid_inner(const Field& a, const Field& b) {
    if (a.n() != b.n() || a.dx != b.dx)
        throw std::invalid_argument("grid_inner: incompatible grids");
    NeumaierSum s;
    for (std::size_t j = 0; j < a.n(); ++j) s.add(a.u[j] * b.u[j]);
    return s.value() * a.dx;
}

inline double grid_norm(const Field& a) { return std::sqrt(grid_inner(a, a)); }

// Forward spectrum of a field plus the certified interpolant bounds derived
// from it.  sup_bound(p) dominates |d^p u/dx^p| everywhere, not just at the
// sample points, since the interpolant is a finite trigonometric sum.
struct FieldSpectrum {
    std::vector<std::complex<double>> uhat;
    double L = 0.0;
    double dx = 0.0;

    explicit FieldSpectrum(const Field& f) : uhat(dft(f.u)), L(f.length()), dx(f.dx) {}

    std::size_t n() const { return uhat.size(); }
    double wavenumber(std::size_t m) const { return bin_wavenumber(m, uhat.size(), L); }
    double sup_bound(int order) const { return spectral_sup_bound(uhat, L, order); }
};

namespace detail {

// Per-mode factor of the difference operator u(x) - u(x + a):
// 1 - e^{ika} = 2 sin^2(ka/2) - i sin(ka); exact for every mode of the
// interpolant and free of subtractive cancellation for small ka.
inline std::complex<double> difference_factor(double k, double a) {
    const double half = std::sin(0.5 * k * a);
    return {2.0 * half * half, -std::sin(k * a)};
}

} // namespace detail

// Samples of the interpolant shifted by a: out[j] = u(x_j + a).  The Nyquist
// bin of an even grid is treated as a pure cosine, which keeps the result
// real and symmetric under a -> -a at that mode.
inline std::vector<double> shifted_samples(const FieldSpectrum& sp, double a) {
    const std::size_t n = sp.n();
    std::vector<std::complex<double>> shifted(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double k = sp.wavenumber(m);
        if (n % 2 == 0 && m == n / 2)
            shifted[m] = sp.uhat[m] * std::cos(k * a);
        else
            shifted[m] = sp.uhat[m] * std::complex<double>(std::cos(k * a), std::sin(k * a));
    }
    return idft_real(shifted);
}

// Difference field d[j] = u(x_j) - u(x_j + a), assembled spectrally (see the
// header note on cancellation).
inline std::vector<double> difference_samples(const FieldSpectrum& sp, double a) {
    const std::size_t n = sp.n();
    std::vector<std::complex<double>> diff(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double k = sp.wavenumber(m);
        if (n % 2 == 0 && m == n / 2) {
            const double half = std::sin(0.5 * k * a);
            diff[m] = sp.uhat[m] * (2.0 * half * half); // 1 - cos(ka)
        } else {
            diff[m] = sp.uhat[m] * detail::difference_factor(k, a);
        }
    }
    return idft_real(diff);
}

} // namespace selfsim
