#pragma once

// Quadrature toolkit: adaptive Gauss-Kronrod 7/15 for finite intervals, a
// fixed 16-point Gauss-Legendre panel rule, and Euler-accelerated summation of
// alternating panel sequences for oscillatory tails on [T, infinity).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "numerics.hpp"

namespace selfsim {

namespace detail {

// Gauss-Kronrod 7/15 nodes on [-1,1] (positive half; even symmetry).
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
// Embedded Gauss-7 weights sit on the odd-index nodes.
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct GkEstimate {
    double value;
    double error;
};

template <typename F>
GkEstimate gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double kron = 0.0, gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double x = hw * gk_nodes[i];
        const double fv = (i == 7) ? f(c) : f(c - x) + f(c + x);
        kron += gk_wk[i] * fv;
        if (i % 2 == 1) gauss += gk_wg[i / 2] * fv;
    }
    const double value = kron * hw;
    const double diff = std::abs(kron - gauss) * hw;
    // QUADPACK-style sharpened estimate, floored at machine level.
    const double err =
        std::max(std::min(diff, std::pow(200.0 * diff, 1.5)), std::abs(value) * 1e-16);
    return {value, err};
}

// 16-point Gauss-Legendre on [-1,1] (positive half).
inline constexpr double gl_nodes[8] = {
    0.095012509837637440185319335425,
    0.281603550779258913230460501460,
    0.458016777657227386342419442984,
    0.617876244402643748446671764049,
    0.755404408355003033895101194847,
    0.865631202387831743880467897712,
    0.944575023073232576077988415535,
    0.989400934991649932596154173450};
inline constexpr double gl_weights[8] = {
    0.189450610455068496285396723208,
    0.182603415044923588866763667969,
    0.169156519395002538189312079030,
    0.149595988816576732081501730547,
    0.124628971255533872052476282192,
    0.095158511682492784809925107602,
    0.062253523938647892862843836994,
    0.027152459411754094851780572456};

} // namespace detail

// Adaptive Gauss-Kronrod: bisects the worst interval until the summed error
// estimate drops below tol (absolute).  Throws on failure to converge.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double tol,
                          std::size_t max_intervals = 4096) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_adaptive: tol must be positive");
    if (a == b) return 0.0;
    struct Interval {
        double a, b, value, error;
    };
    auto mk = [&](double lo, double hi) {
        const auto e = detail::gk15(f, lo, hi);
        return Interval{lo, hi, e.value, e.error};
    };
    std::vector<Interval> ivals{mk(a, b)};
    double total_err = ivals[0].error;
    while (total_err > tol) {
        if (ivals.size() >= max_intervals)
            throw std::runtime_error("integrate_adaptive: interval budget exhausted");
        std::size_t worst = 0;
        for (std::size_t i = 1; i < ivals.size(); ++i)
            if (ivals[i].error > ivals[worst].error) worst = i;
        const Interval w = ivals[worst];
        const double mid = 0.5 * (w.a + w.b);
        if (mid <= w.a || mid >= w.b)
            throw std::runtime_error("integrate_adaptive: interval underflow before convergence");
        ivals[worst] = mk(w.a, mid);
        ivals.push_back(mk(mid, w.b));
        total_err += ivals[worst].error + ivals.back().error - w.error;
    }
    // Recompute the total by magnitude-sorted compensated summation for a
    // deterministic, well-conditioned result.
    std::sort(ivals.begin(), ivals.end(), [](const Interval& l, const Interval& r) {
        return std::abs(l.value) < std::abs(r.value);
    });
    NeumaierSum acc;
    for (const auto& iv : ivals) acc.add(iv.value);
    return acc.value();
}

// Fixed 16-point Gauss-Legendre panel.
template <typename F>
double integrate_panel(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double x = hw * detail::gl_nodes[i];
        s += detail::gl_weights[i] * (f(c - x) + f(c + x));
    }
    return s * hw;
}

// Euler transformation of a series given its terms: repeatedly averages the
// partial-sum sequence.  Designed for alternating, smoothly decaying terms,
// for which convergence is geometric.
inline double euler_accelerate(std::span<const double> terms) {
    if (terms.empty()) return 0.0;
    std::vector<double> s(terms.size());
    double run = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        run += terms[i];
        s[i] = run;
    }
    while (s.size() > 1) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) s[i] = 0.5 * (s[i] + s[i + 1]);
        s.pop_back();
    }
    return s[0];
}

// Integral of f over [start, infinity) by fixed-length panels.  Panels are
// summed directly while they shrink below tol; if they keep oscillating, the
// alternating panel sequence is Euler-accelerated instead.  Intended for
// integrands that either decay (localized probes) or settle into sign
// alternation (trigonometric tails).
template <typename F>
double integrate_tail_panels(const F& f, double start, double panel_length, double tol,
                             std::size_t max_panels = 512) {
    if (!(panel_length > 0.0))
        throw std::invalid_argument("integrate_tail_panels: panel length must be positive");
    NeumaierSum direct;
    std::vector<double> window; // trailing panel values, candidates for acceleration
    double a = start;
    for (std::size_t j = 0; j < max_panels; ++j) {
        const double p = integrate_panel(f, a, a + panel_length);
        a += panel_length;
        window.push_back(p);
        if (std::abs(p) < tol * 0.25 && j >= 3) {
            for (double v : window) direct.add(v);
            return direct.value();
        }
        // Once a clean alternation is established, hand the rest to Euler.
        if (window.size() >= 24) {
            bool alternating = true;
            for (std::size_t i = window.size() - 16; i + 1 < window.size(); ++i)
                if (!(window[i] * window[i + 1] < 0.0)) { alternating = false; break; }
            if (alternating) {
                const std::size_t head = window.size() - 16;
                for (std::size_t i = 0; i < head; ++i) direct.add(window[i]);
                std::vector<double> tail_terms(window.begin() + static_cast<long>(head),
                                               window.end());
                // Extend the alternating run to squeeze the transform.
                while (tail_terms.size() < 48 && a < start + panel_length * max_panels) {
                    tail_terms.push_back(integrate_panel(f, a, a + panel_length));
                    a += panel_length;
                }
                return direct.value() + euler_accelerate(tail_terms);
            }
        }
    }
    throw std::runtime_error("integrate_tail_panels: tail did not converge "
                             "(integrand decays too slowly for the panel budget)");
}

} // namespace selfsim
