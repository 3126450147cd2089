#pragma once

// Small numeric utilities shared across the library: compensated summation,
// geometric tail solving for truncation windows, log-log least squares, and
// Richardson-extrapolated central differences.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace selfsim {

// Neumaier variant of Kahan summation: the running compensation also catches
// the case where the incoming term is larger than the accumulated sum.
class NeumaierSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Smallest n >= 0 such that coeff * ratio^(n+1) / (1 - ratio) <= bound,
// i.e. the first index whose geometric tail sum_{j>n} coeff*ratio^j is below
// the bound.  Requires 0 < ratio < 1.  A zero coefficient needs no window at
// all and yields 0.
inline long geometric_tail_index(double coeff, double ratio, double bound) {
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw std::invalid_argument("geometric_tail_index: ratio must lie in (0,1)");
    if (!(bound > 0.0))
        throw std::invalid_argument("geometric_tail_index: bound must be positive");
    if (coeff <= 0.0) return 0;
    // coeff * ratio^(n+1) <= bound*(1-ratio)  =>  n+1 >= log(bound*(1-ratio)/coeff)/log(ratio)
    const double rhs = std::log(bound * (1.0 - ratio) / coeff) / std::log(ratio);
    if (rhs <= 1.0) return 0;
    if (rhs > 1e9)
        throw std::runtime_error("geometric_tail_index: window exceeds 1e9 terms; "
                                 "ratio too close to 1 for the requested bound");
    return static_cast<long>(std::ceil(rhs)) - 1;
}

// Geometric tail sum coeff * ratio^(n+1) / (1-ratio): the certified remainder
// past index n.
inline double geometric_tail_sum(double coeff, double ratio, long n) {
    if (coeff <= 0.0) return 0.0;
    return coeff * std::pow(ratio, static_cast<double>(n + 1)) / (1.0 - ratio);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t n = 0;
};

// Ordinary least squares y ~ slope*x + intercept with a slope standard error
// from the residual variance.  Needs at least three points for the error
// estimate (two give an exact fit with zero residual).
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("fit_line: size mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    out.n = n;
    if (n > 2) {
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - (out.intercept + out.slope * xs[i]);
            ss += r * r;
        }
        out.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
    }
    return out;
}

// Slope of log(y) against log(x); rejects non-positive data.
inline LineFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("fit_loglog_slope: size mismatch");
    std::vector<double> lx, ly;
    lx.reserve(xs.size());
    ly.reserve(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw std::invalid_argument("fit_loglog_slope: data must be positive");
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    return fit_line(lx, ly);
}

// Second derivative by Richardson-extrapolated central second differences:
// D(e) = (f(x+e)+f(x-e)-2f(x))/e^2 has error c*e^2 + O(e^4); combining D(e)
// and D(e/2) cancels the e^2 term.
inline double second_derivative(const std::function<double(double)>& f, double x,
                                double step = 1e-2) {
    auto d = [&](double e) {
        return (f(x + e) + f(x - e) - 2.0 * f(x)) / (e * e);
    };
    const double c = d(step), fine = d(step / 2);
    return fine + (fine - c) / 3.0;
}

// Fourth derivative from the 5-point stencil, Richardson-extrapolated the same
// way (stencil error is O(e^2)).
inline double fourth_derivative(const std::function<double(double)>& f, double x,
                                double step = 5e-2) {
    auto d = [&](double e) {
        return (f(x + 2 * e) - 4.0 * f(x + e) + 6.0 * f(x) - 4.0 * f(x - e) + f(x - 2 * e))
               / (e * e * e * e);
    };
    const double c = d(step), fine = d(step / 2);
    return (16.0 * fine - c) / 15.0;
}

} // namespace selfsim
