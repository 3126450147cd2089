#pragma once

// Dispersion relation of the self-similar chain.  Plane waves are eigenmodes
// of the scale-sum Laplacian, and the eigenvalue series
//     omega^2(kh) = 4 sum_s N^(-delta s) sin^2(kh N^s / 2)
// is a lacunary (Weierstrass-Mandelbrot type) function: continuous on the
// whole band 0 < delta < 2, exactly self-similar,
//     omega^2(N kh) = N^delta omega^2(kh),
// and rough enough for 0 < delta < 1 that its graph carries a nontrivial box
// dimension.  Every evaluation returns a certified truncation bound: the
// upper tail is controlled by sin^2 <= 1, the lower tail by sin^2 x <= x^2,
// and both geometric remainders are solved in closed form for the requested
// tolerance, then extended by two indices.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "affine.hpp"
#include "chain.hpp"
#include "numerics.hpp"
#include "parallel.hpp"

namespace selfsim {

struct Omega2Result {
    double value = 0.0;
    double err = 0.0; // certified bound on |exact - value|, equals trunc.tail_bound
    TruncationSpec trunc;
};

namespace detail {

// Window of the scale series for given tail coefficients:
//   upper tail  sum_{s > s_max} coeff_up  * xi^s          (ratio N^-delta),
//   lower tail  sum_{s < s_min} coeff_low * N^{(2-delta)s} (ratio N^-(2-delta)).
// Each side is solved for tol/2 and extended by two indices.  base_up is the
// factor multiplied by N^s in the upward arguments (kh for spectral sums, h
// for displacements); once base_up * N^s passes the overflow edge those terms
// cannot be evaluated at all, so the mass beyond that horizon is added to the
// tail bound.  It only registers for windows so wide (delta below ~0.04 at
// default tolerances) that the needed arguments exceed the double range.
struct ScaleWindow {
    long s_min, s_max;
    double tail_bound;
};

inline ScaleWindow solve_window(const ChainParams& p, double coeff_up, double coeff_low,
                                double tol, double base_up) {
    const double r_up = std::pow(p.N, -p.delta);
    const double r_low = std::pow(p.N, -(2.0 - p.delta));
    const long s_max = geometric_tail_index(coeff_up, r_up, tol / 2) + 2;
    const long s_min = -(geometric_tail_index(coeff_low, r_low, tol / 2) + 2);
    double tail = geometric_tail_sum(coeff_up, r_up, s_max) +
                  geometric_tail_sum(coeff_low, r_low, -s_min);
    if (base_up > 0.0) {
        const double horizon =
            (std::log(std::numeric_limits<double>::max()) - std::log(base_up)) / p.eps();
        if (horizon < static_cast<double>(s_max))
            tail += geometric_tail_sum(coeff_up, r_up,
                                       std::max(0L, static_cast<long>(horizon)));
    }
    return {s_min, s_max, tail};
}

// Truncated eigenvalue series over a scale window.  The arguments kh N^s are
// walked multiplicatively, one rounding per rung, never recomputed through
// exp: an evaluation at N*kh then reuses bit-for-bit the upward ladder of the
// evaluation at kh shifted by one rung (products commute), and the exact
// self-similarity of the sum survives in floating point, where independently
// rounded large arguments would feed sin^2 uncorrelated phases.  Every grid
// operator assembled from this series calls this one routine so that
// corresponding terms agree across callers the same way.
//
// Upward rungs past the overflow edge contribute zero; the window's tail
// bound accounts for them.  Downward rungs use the equivalent form
//     (kh)^2 N^{(2-delta)s} (sin(x)/x)^2,   x = kh N^s / 2,
// whose factors stay representable long after xi^s alone would overflow.
// Terms are accumulated from the window ends inward.
inline double omega2_series(double kh, const ChainParams& p, long s_min, long s_max) {
    const double xi = p.xi();
    const double r_low = std::pow(p.N, -(2.0 - p.delta));

    std::vector<double> up(s_max > 0 ? static_cast<std::size_t>(s_max) : 0);
    {
        double arg = kh, w = 1.0;
        for (long s = 1; s <= s_max; ++s) {
            arg *= p.N;
            w *= xi;
            double t = 0.0;
            if (std::isfinite(arg)) {
                const double half = std::sin(0.5 * arg);
                t = 4.0 * w * half * half;
            }
            up[static_cast<std::size_t>(s - 1)] = t;
        }
    }

    std::vector<double> down(s_min < 0 ? static_cast<std::size_t>(-s_min) : 0);
    {
        double x = 0.5 * kh, y = kh * kh;
        for (long s = -1; s >= s_min; --s) {
            x /= p.N;
            y *= r_low;
            const double ratio = x > 0.0 ? std::sin(x) / x : 1.0;
            down[static_cast<std::size_t>(-s) - 1] = y * ratio * ratio;
        }
    }

    NeumaierSum acc;
    for (std::size_t i = up.size(); i-- > 0;) acc.add(up[i]);
    for (std::size_t i = down.size(); i-- > 0;) acc.add(down[i]);
    const double half0 = std::sin(0.5 * kh);
    acc.add(4.0 * half0 * half0);
    return acc.value();
}

} // namespace detail

// Sampled dispersion curve on a kh grid with per-sample certified error.  The
// series is even in kh, so curves generated for kh >= 0 represent both signs.
struct DispersionCurve {
    ChainParams params;
    std::vector<double> kh;
    std::vector<double> omega2;
    std::vector<double> err;
};

inline Omega2Result omega2(double kh, const ChainParams& p, double tol = 1e-10) {
    require_laplacian_band(p, "omega2");
    if (!(tol > 0.0)) throw std::invalid_argument("omega2: tol must be positive");
    kh = std::abs(kh);
    if (kh == 0.0) return {0.0, 0.0, TruncationSpec(0, 0, 0.0)};

    // Upper tail: terms <= 4 N^(-delta s); lower tail: terms <= (kh)^2 N^((2-delta)s).
    const auto w = detail::solve_window(p, 4.0, kh * kh, tol, kh);

    Omega2Result out;
    out.value = detail::omega2_series(kh, p, w.s_min, w.s_max);
    out.trunc = TruncationSpec(w.s_min, w.s_max, w.tail_bound);
    out.err = out.trunc.tail_bound;
    return out;
}

inline double omega(double kh, const ChainParams& p, double tol = 1e-10) {
    return std::sqrt(omega2(kh, p, tol).value);
}

// Uniform-grid curve sampling; grid points are evaluated independently and in
// parallel, each writing its own slot, so the result does not depend on the
// worker count.
inline DispersionCurve sample_curve(const ChainParams& p, double kh_min, double kh_max,
                                    std::size_t n, double tol = 1e-10) {
    require_laplacian_band(p, "sample_curve");
    if (!(kh_min >= 0.0)) throw std::invalid_argument("sample_curve: kh_min must be >= 0");
    if (!(kh_max > kh_min))
        throw std::invalid_argument("sample_curve: kh_max must exceed kh_min");
    if (n < 2) throw std::invalid_argument("sample_curve: need at least 2 grid points");

    DispersionCurve curve{p, std::vector<double>(n), std::vector<double>(n),
                          std::vector<double>(n)};
    const double step = (kh_max - kh_min) / static_cast<double>(n - 1);
    parallel_for(n, [&](std::size_t j) {
        const double kh = kh_min + step * static_cast<double>(j);
        const auto r = omega2(kh, p, tol);
        curve.kh[j] = kh;
        curve.omega2[j] = r.value;
        curve.err[j] = r.err;
    });
    return curve;
}

// omega^2(kh) * eps / (kh)^delta: approaches the continuum constant C(delta)
// in the long-wave limit kh -> 0, N -> 1.
inline double long_wave_ratio(const ChainParams& p, double kh, double tol = 1e-10) {
    if (!(kh > 0.0)) throw std::invalid_argument("long_wave_ratio: kh must be positive");
    return omega2(kh, p, tol).value * p.eps() / std::pow(kh, p.delta);
}

} // namespace selfsim
