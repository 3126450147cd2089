#pragma once

// Discrete Fourier transforms for real periodic grid data, plus the spectral
// helpers the grid operators are built on.  Forward convention
//     uhat[m] = sum_j u[j] * exp(-2*pi*i*j*m/n),
// inverse carries the 1/n.  Power-of-two sizes take an iterative radix-2
// path; everything else falls back to a direct O(n^2) transform with
// precomputed twiddles, which is plenty at the grid sizes used here.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "numerics.hpp"

namespace selfsim {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len)
                           * (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline std::vector<std::complex<double>>
dft_direct(std::span<const std::complex<double>> in, bool inverse) {
    const std::size_t n = in.size();
    std::vector<std::complex<double>> out(n);
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t m = 0; m < n; ++m) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sgn * 2.0 * std::numbers::pi
                               * static_cast<double>((j * m) % n) / static_cast<double>(n);
            acc += in[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[m] = acc;
    }
    return out;
}

inline std::vector<std::complex<double>>
transform(std::vector<std::complex<double>> data, bool inverse) {
    if (data.empty()) throw std::invalid_argument("fourier: empty input");
    if (is_pow2(data.size())) {
        fft_radix2(data, inverse);
        return data;
    }
    return dft_direct(data, inverse);
}

} // namespace detail

inline std::vector<std::complex<double>> dft(std::span<const double> u) {
    std::vector<std::complex<double>> in(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) in[j] = u[j];
    return detail::transform(std::move(in), false);
}

// Inverse transform of a conjugate-symmetric spectrum; returns the real part
// (the imaginary residue is rounding noise by construction).
inline std::vector<double> idft_real(std::span<const std::complex<double>> uhat) {
    std::vector<std::complex<double>> in(uhat.begin(), uhat.end());
    auto out = detail::transform(std::move(in), true);
    std::vector<double> res(out.size());
    const double inv = 1.0 / static_cast<double>(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) res[j] = out[j].real() * inv;
    return res;
}

// Signed wavenumber of DFT bin m on a periodic domain of length L:
// k = 2*pi*m'/L with m' = m for m <= n/2 and m-n beyond (Nyquist maps to
// +pi*n/L).
inline double bin_wavenumber(std::size_t m, std::size_t n, double domain_length) {
    const double mm = (m <= n / 2) ? static_cast<double>(m)
                                   : static_cast<double>(m) - static_cast<double>(n);
    return 2.0 * std::numbers::pi * mm / domain_length;
}

// Certified sup-norm bounds for the band-limited interpolant of grid data and
// its derivatives: |u^(p)(x)| <= (1/n) * sum_m |k_m|^p |uhat_m| for every real
// x, since the interpolant is the finite sum (1/n) sum uhat_m e^{i k_m x}.
inline double spectral_sup_bound(std::span<const std::complex<double>> uhat,
                                 double domain_length, int derivative_order) {
    const std::size_t n = uhat.size();
    NeumaierSum acc;
    for (std::size_t m = 0; m < n; ++m) {
        const double k = std::abs(bin_wavenumber(m, n, domain_length));
        acc.add(std::abs(uhat[m]) * std::pow(k, derivative_order));
    }
    return acc.value() / static_cast<double>(n);
}

} // namespace selfsim
