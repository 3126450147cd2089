#pragma once

// The N -> 1 continuum limit of the chain.  With eps = ln N small, the scale
// sum goes over to the integral operator
//     (Lap u)(x) = (h^delta / eps) integral_0^inf
//                      [u(x+tau) + u(x-tau) - 2 u(x)] / tau^(1+delta) dtau,
// a one-dimensional fractional Laplacian.  Three equivalent faces of it live
// here: the direct integral above, the convolution form
//     (Lap u)(x) = integral_0^inf g(sigma) [u''(x+sigma) + u''(x-sigma)] dsigma
// with the kernel g (power-law branch for delta != 1, logarithmic at
// delta = 1; obtained from the direct form by two integrations by parts,
// valid for fields whose first two derivatives decay), and, on plane waves,
// multiplication by -(h|k|)^delta C(delta)/eps with the constant
//     C(delta) = 2 integral_0^inf (1 - cos tau) / tau^(1+delta) dtau,
// finite exactly on 0 < delta < 2.
//
// Riemann-Liouville fractional integration and the Gamma function are the
// standalone primitives of that calculus, and the long-wave density of states
//     rho(omega) = 2/(pi delta h) (eps/C)^(1/delta) omega^(2/delta - 1)
// is the power law the dispersion relation collapses to in the same limit.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "chain.hpp"
#include "dispersion.hpp"
#include "numerics.hpp"
#include "probe.hpp"
#include "quadrature.hpp"

namespace selfsim {

struct DensityModel {
    ChainParams params;
    double C; // long-wave constant C(delta)
};

struct KernelModel {
    ChainParams params;
    bool log_branch = false;           // true within |delta - 1| < 1e-6
    bool conditioning_warning = false; // log branch substituted away from delta = 1 exactly
};

inline double gamma_fn(double D) {
    if (!(D > 0.0)) throw std::invalid_argument("gamma_fn: requires D > 0");
    return std::tgamma(D);
}

// C(delta), split at tau = 1.  On [0, 1] the cosine series integrates term by
// term into sum_j (-1)^(j+1) / ((2j)! (2j - delta)), which converges
// factorially.  On [1, inf) the 1/tau^(1+delta) part is exact (= 1/delta) and
// the remaining cos tau / tau^(1+delta) is summed over half-period panels,
// whose strict sign alternation the Euler transform then collapses.
inline double c_constant(double delta, double quad_tol = 1e-10) {
    if (!(delta > 0.0) || !(delta < 2.0))
        throw std::domain_error("c_constant: delta must lie in the open band (0, 2), got " +
                                std::to_string(delta));
    if (!(quad_tol > 0.0)) throw std::invalid_argument("c_constant: tol must be positive");

    NeumaierSum series;
    double factorial = 1.0; // (2j)!
    double sign = 1.0;
    for (int j = 1; j <= 80; ++j) {
        factorial *= static_cast<double>(2 * j - 1) * static_cast<double>(2 * j);
        const double term = sign / (factorial * (2.0 * j - delta));
        series.add(term);
        sign = -sign;
        if (j >= 4 && std::abs(term) < quad_tol / 16.0) break;
    }

    const auto cos_tail = [delta](double tau) {
        return std::cos(tau) * std::pow(tau, -1.0 - delta);
    };
    const double ic = integrate_tail_panels(cos_tail, 1.0, std::numbers::pi, quad_tol / 8.0);

    return 2.0 * (series.value() + 1.0 / delta - ic);
}

// Direct integral form at a point.  The integrand's three regimes get three
// treatments: on [0, c] the symmetric difference is replaced by its expansion
// u'' tau^2 + u'''' tau^4/12 and integrated in closed form (the raw
// difference has no correct digits left there); [c, T] is adaptive
// Gauss-Kronrod; past T the -2u(x) part and the limit of u integrate exactly,
// and the remaining centered integrand either decays (localized probes, the
// panels shrink and are summed directly) or alternates (oscillatory probes,
// Euler-accelerated half-period panels on the probe's own scale).
inline double fractional_laplacian_integral(const AnalyticProbe& probe, const ChainParams& p,
                                            double x, double quad_tol = 1e-8) {
    require_laplacian_band(p, "fractional_laplacian_integral");
    if (!(quad_tol > 0.0))
        throw std::invalid_argument("fractional_laplacian_integral: tol must be positive");
    const double d = p.delta;
    const double pref = std::pow(p.h, d) / p.eps();
    const double ux = probe.u(x);

    const double c = 0.05 * probe.scale;
    const double u2 = probe.d2 ? probe.d2(x) : second_derivative(probe.u, x, 0.02 * probe.scale);
    const double u4 = probe.d4 ? probe.d4(x) : fourth_derivative(probe.u, x, 0.05 * probe.scale);
    const double near =
        u2 * std::pow(c, 2.0 - d) / (2.0 - d) + u4 * std::pow(c, 4.0 - d) / (12.0 * (4.0 - d));

    const double T = std::max(2.0, 2.0 * probe.scale);
    const auto mid_f = [&](double tau) {
        return (probe.u(x + tau) + probe.u(x - tau) - 2.0 * ux) * std::pow(tau, -1.0 - d);
    };
    const double mid = integrate_adaptive(mid_f, c, T, quad_tol / 4.0);

    const double uinf = probe.limit;
    const double tail_exact = 2.0 * (uinf - ux) * std::pow(T, -d) / d;
    const auto tail_f = [&](double tau) {
        return ((probe.u(x + tau) - uinf) + (probe.u(x - tau) - uinf)) *
               std::pow(tau, -1.0 - d);
    };
    const double tail_rest =
        integrate_tail_panels(tail_f, T, std::numbers::pi * probe.scale, quad_tol / 4.0);

    return pref * (near + mid + tail_exact + tail_rest);
}

inline KernelModel make_kernel(const ChainParams& p) {
    require_laplacian_band(p, "make_kernel");
    KernelModel m{p};
    // The power-law prefactor 1/(delta (delta - 1)) blows up toward delta = 1;
    // the limit is the logarithmic kernel, analytically benign but numerically
    // stiff, so a narrow window around 1 is rerouted to the log branch.
    m.log_branch = std::abs(p.delta - 1.0) < 1e-6;
    m.conditioning_warning = m.log_branch && p.delta != 1.0;
    return m;
}

inline double kernel_eval(const KernelModel& m, double x) {
    if (x == 0.0)
        throw std::invalid_argument("kernel_eval: kernel is singular at x = 0");
    const ChainParams& p = m.params;
    const double ax = std::abs(x);
    if (m.log_branch) return -(p.h / p.eps()) * std::log(ax);
    return std::pow(p.h, p.delta) / (p.delta * (p.delta - 1.0) * p.eps()) *
           std::pow(ax, 1.0 - p.delta);
}

// Convolution form: integral_0^inf g(sigma) [u''(x+sigma) + u''(x-sigma)] dsigma.
// Requires the probe's curvature to decay (the kernel grows for delta < 1);
// the [0, c] piece uses the curvature expansion against the exact moments
// G0 = int_0^c g, G2 = int_0^c sigma^2 g of the kernel.
inline double kernel_laplacian_convolution(const AnalyticProbe& probe, const ChainParams& p,
                                           double x, double quad_tol = 1e-8) {
    require_laplacian_band(p, "kernel_laplacian_convolution");
    if (!(quad_tol > 0.0))
        throw std::invalid_argument("kernel_laplacian_convolution: tol must be positive");
    const KernelModel m = make_kernel(p);
    const auto d2 = [&](double xi) {
        return probe.d2 ? probe.d2(xi) : second_derivative(probe.u, xi, 0.02 * probe.scale);
    };

    const double c = 0.05 * probe.scale;
    double g0, g2;
    if (m.log_branch) {
        const double pref = -p.h / p.eps();
        g0 = pref * c * (std::log(c) - 1.0);
        g2 = pref * c * c * c * (std::log(c) / 3.0 - 1.0 / 9.0);
    } else {
        const double pref =
            std::pow(p.h, p.delta) / (p.delta * (p.delta - 1.0) * p.eps());
        g0 = pref * std::pow(c, 2.0 - p.delta) / (2.0 - p.delta);
        g2 = pref * std::pow(c, 4.0 - p.delta) / (4.0 - p.delta);
    }
    const double u2x = d2(x);
    const double u4x = probe.d4 ? probe.d4(x) : fourth_derivative(probe.u, x, 0.05 * probe.scale);
    const double near = 2.0 * u2x * g0 + u4x * g2;

    const double T = std::abs(x) + 16.0 * probe.scale;
    const auto f = [&](double sigma) {
        return kernel_eval(m, sigma) * (d2(x + sigma) + d2(x - sigma));
    };
    return near + integrate_adaptive(f, c, T, quad_tol / 2.0);
}

// Riemann-Liouville integral of order D from a, evaluated at x:
//     (1/Gamma(D)) integral_a^x (x - tau)^(D-1) v(tau) dtau.
// For D < 1 the endpoint singularity is removed exactly by the substitution
// w = (x - tau)^D, under which the integral becomes
// (1/D) integral_0^(x-a)^D v(x - w^(1/D)) dw with a smooth integrand.
inline double riemann_liouville(const AnalyticProbe& v, double a, double x, double D,
                                double quad_tol = 1e-10) {
    if (!(x > a)) throw std::invalid_argument("riemann_liouville: requires x > a");
    if (!(D > 0.0)) throw std::invalid_argument("riemann_liouville: requires D > 0");
    if (!(quad_tol > 0.0))
        throw std::invalid_argument("riemann_liouville: tol must be positive");
    const double g = gamma_fn(D);
    if (D >= 1.0) {
        const auto f = [&](double tau) { return std::pow(x - tau, D - 1.0) * v.u(tau); };
        return integrate_adaptive(f, a, x, quad_tol) / g;
    }
    const double W = std::pow(x - a, D);
    const auto f = [&](double w) { return v.u(x - std::pow(w, 1.0 / D)); };
    return integrate_adaptive(f, 0.0, W, quad_tol * D) / (D * g);
}

inline DensityModel make_density_model(const ChainParams& p, double quad_tol = 1e-10) {
    require_laplacian_band(p, "make_density_model");
    return DensityModel{p, c_constant(p.delta, quad_tol)};
}

// Long-wave density of states: rho(omega) ~ omega^(2/delta - 1), vanishing at
// zero frequency everywhere in the band.
inline double oscillator_density(const DensityModel& m, double omega) {
    if (!(omega > 0.0))
        throw std::invalid_argument("oscillator_density: requires omega > 0");
    const ChainParams& p = m.params;
    return 2.0 / (std::numbers::pi * p.delta * p.h) *
           std::pow(p.eps() / m.C, 1.0 / p.delta) * std::pow(omega, 2.0 / p.delta - 1.0);
}

struct DensityFit {
    std::vector<double> omega; // interior grid points the fit used
    std::vector<double> kh;    // inverted dispersion at those points
    std::vector<double> rho;   // empirical density (1/pi) dk/domega
    LineFit fit;               // log rho against log omega
    double expected = 0.0;     // 2/delta - 1
};

namespace detail {

// Invert omega(kh) on the long-wave branch by bisection; the branch is
// monotone there, and the bracket is grown geometrically first.
inline double invert_omega(const ChainParams& p, double omega_target, double tol) {
    const double w2t = omega_target * omega_target;
    double lo = 1e-12, hi = 1e-3;
    for (int i = 0; i < 80 && omega2(hi, p, tol).value < w2t; ++i) hi *= 2.0;
    if (omega2(hi, p, tol).value < w2t)
        throw std::runtime_error("density_empirical_check: frequency above the reachable branch");
    for (int i = 0; i < 200 && (hi - lo) > 1e-16 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (omega2(mid, p, tol).value < w2t ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Log-spaced frequency grid obtained by pushing a kh window through the
// dispersion relation; companion input for density_empirical_check.
inline std::vector<double> long_wave_omega_grid(const ChainParams& p, double kh_lo,
                                                double kh_hi, std::size_t n,
                                                double tol = 1e-12) {
    require_laplacian_band(p, "long_wave_omega_grid");
    if (!(kh_lo > 0.0) || !(kh_hi > kh_lo))
        throw std::invalid_argument("long_wave_omega_grid: need 0 < kh_lo < kh_hi");
    if (n < 5) throw std::invalid_argument("long_wave_omega_grid: need at least 5 points");
    std::vector<double> out(n);
    const double lr = std::log(kh_hi / kh_lo) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j)
        out[j] = std::sqrt(omega2(kh_lo * std::exp(lr * static_cast<double>(j)), p, tol).value);
    return out;
}

// Empirical density of states: invert the dispersion relation on the supplied
// frequency grid, differentiate k(omega) by central differences, and fit the
// log-log slope of rho = (1/pi) dk/domega.  In the long-wave window the slope
// must come out at 2/delta - 1.
inline DensityFit density_empirical_check(const ChainParams& p,
                                          std::span<const double> omega_grid,
                                          double tol = 1e-12) {
    require_laplacian_band(p, "density_empirical_check");
    if (omega_grid.size() < 5)
        throw std::invalid_argument(
            "density_empirical_check: need at least 5 frequencies for a stable fit");
    for (std::size_t i = 0; i + 1 < omega_grid.size(); ++i)
        if (!(omega_grid[i] > 0.0) || !(omega_grid[i] < omega_grid[i + 1]))
            throw std::invalid_argument(
                "density_empirical_check: frequencies must be positive and increasing");

    std::vector<double> khs(omega_grid.size());
    for (std::size_t i = 0; i < omega_grid.size(); ++i)
        khs[i] = detail::invert_omega(p, omega_grid[i], tol);

    DensityFit out;
    for (std::size_t i = 1; i + 1 < omega_grid.size(); ++i) {
        const double dk = (khs[i + 1] - khs[i - 1]) / p.h;
        const double domega = omega_grid[i + 1] - omega_grid[i - 1];
        out.omega.push_back(omega_grid[i]);
        out.kh.push_back(khs[i]);
        out.rho.push_back(dk / domega / std::numbers::pi);
    }
    out.fit = fit_loglog_slope(out.omega, out.rho);
    out.expected = 2.0 / p.delta - 1.0;
    return out;
}

} // namespace selfsim
