#pragma once

// Box-counting dimension of a sampled dispersion curve.  The polyline is
// normalized to the unit square (dimension is scale-free, the counting grid
// is not), rasterized at a geometric ladder of box sizes with a supercover
// grid traversal, and the log-log slope of count against 1/size over the
// central scales is the estimate.  For the chain's dispersion graph the
// estimate is compared against 2 - delta, the curve's expected dimension in
// the rough band 0 < delta < 1.
//
// The extremes of a box-counting fit are always biased -- the largest boxes
// feel the bounding square, the smallest feel the sampling resolution -- so a
// fixed fraction of scales is discarded at each end before fitting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dispersion.hpp"
#include "numerics.hpp"
#include "parallel.hpp"

namespace selfsim {

struct DimensionReport {
    double delta = 0.0;
    std::optional<double> D_expected; // 2 - delta, recorded only for 0 < delta < 1
    double D_estimated = 0.0;         // fitted slope, clipped to [1, 2]
    double raw_slope = 0.0;           // unclipped fit
    bool clipped = false;
    double ci = 0.0;                  // standard error of the fitted slope
    std::vector<double> scales;       // effective box sizes entering the fit
    std::vector<std::size_t> counts;  // boxes hit at each fitted scale
    double kh_min = 0.0, kh_max = 0.0;
    std::size_t samples = 0;
};

// Half-octave ladder 2^-3 .. 2^-13; with the default 20% end discard the fit
// runs over the central 2^-5 .. 2^-11.
inline std::vector<double> default_box_scales() {
    std::vector<double> s;
    for (int j = 0; j <= 20; ++j) s.push_back(std::pow(2.0, -(3.0 + 0.5 * j)));
    return s;
}

struct DimensionOptions {
    std::vector<double> scales = default_box_scales();
    double discard_fraction = 0.2; // per end, of the scale count
};

namespace detail {

inline std::size_t cells_for_scale(double e) {
    return static_cast<std::size_t>(std::max<long long>(1, std::llround(1.0 / e)));
}

struct UnitCurve {
    std::vector<double> x, y;
};

inline UnitCurve normalize_curve(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("box_count: need matching x/y arrays with >= 2 samples");
    const auto [xlo_it, xhi_it] = std::minmax_element(xs.begin(), xs.end());
    const auto [ylo_it, yhi_it] = std::minmax_element(ys.begin(), ys.end());
    const double xlo = *xlo_it, xspan = *xhi_it - *xlo_it;
    const double ylo = *ylo_it, yspan = *yhi_it - *ylo_it;
    if (!(xspan > 0.0))
        throw std::invalid_argument("box_count: curve has zero extent along x");
    UnitCurve c;
    c.x.resize(xs.size());
    c.y.resize(ys.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
        c.x[j] = (xs[j] - xlo) / xspan;
        c.y[j] = yspan > 0.0 ? (ys[j] - ylo) / yspan : 0.0;
    }
    return c;
}

// Supercover grid traversal: marks every cell of an ncells x ncells grid on
// the unit square that the segment passes through.
inline void mark_segment(std::vector<bool>& bitmap, std::size_t ncells, double x0, double y0,
                         double x1, double y1) {
    const double nc = static_cast<double>(ncells);
    const double top = std::nextafter(nc, 0.0);
    const auto grid = [&](double v) { return std::clamp(v * nc, 0.0, top); };
    const double gx0 = grid(x0), gy0 = grid(y0), gx1 = grid(x1), gy1 = grid(y1);

    long ix = static_cast<long>(gx0), iy = static_cast<long>(gy0);
    const long jx = static_cast<long>(gx1), jy = static_cast<long>(gy1);
    const auto mark = [&](long cx, long cy) {
        cx = std::clamp<long>(cx, 0, static_cast<long>(ncells) - 1);
        cy = std::clamp<long>(cy, 0, static_cast<long>(ncells) - 1);
        bitmap[static_cast<std::size_t>(cy) * ncells + static_cast<std::size_t>(cx)] = true;
    };
    mark(ix, iy);

    const double dx = gx1 - gx0, dy = gy1 - gy0;
    const long stepx = dx > 0.0 ? 1 : -1;
    const long stepy = dy > 0.0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    double tmax_x = inf, tmax_y = inf, tdel_x = inf, tdel_y = inf;
    if (dx != 0.0) {
        const double edge = dx > 0.0 ? static_cast<double>(ix + 1) : static_cast<double>(ix);
        tmax_x = (edge - gx0) / dx;
        tdel_x = 1.0 / std::abs(dx);
    }
    if (dy != 0.0) {
        const double edge = dy > 0.0 ? static_cast<double>(iy + 1) : static_cast<double>(iy);
        tmax_y = (edge - gy0) / dy;
        tdel_y = 1.0 / std::abs(dy);
    }

    const long budget = (std::labs(jx - ix) + std::labs(jy - iy)) + 4;
    for (long it = 0; it < budget && (ix != jx || iy != jy); ++it) {
        if (tmax_x < tmax_y) {
            ix += stepx;
            tmax_x += tdel_x;
        } else {
            iy += stepy;
            tmax_y += tdel_y;
        }
        mark(ix, iy);
    }
    mark(jx, jy);
}

inline std::size_t count_boxes(const UnitCurve& c, double scale) {
    const std::size_t ncells = cells_for_scale(scale);
    std::vector<bool> bitmap(ncells * ncells, false);
    for (std::size_t j = 0; j + 1 < c.x.size(); ++j)
        mark_segment(bitmap, ncells, c.x[j], c.y[j], c.x[j + 1], c.y[j + 1]);
    return static_cast<std::size_t>(std::count(bitmap.begin(), bitmap.end(), true));
}

} // namespace detail

// Boxes hit per scale.  Rejects an undersampled curve: the smallest box must
// span at least 4 consecutive samples, otherwise counts saturate at the
// polyline's own resolution and the fit is meaningless.
inline std::vector<std::size_t> box_count(const DispersionCurve& curve,
                                          std::span<const double> scales) {
    const auto unit = detail::normalize_curve(curve.kh, curve.omega2);
    if (scales.empty()) throw std::invalid_argument("box_count: no scales given");
    double e_min = scales[0];
    for (double e : scales) {
        if (!(e > 0.0) || !(e <= 1.0))
            throw std::invalid_argument("box_count: scales must lie in (0, 1]");
        e_min = std::min(e_min, e);
    }
    double step_max = 0.0;
    for (std::size_t j = 0; j + 1 < unit.x.size(); ++j)
        step_max = std::max(step_max, std::abs(unit.x[j + 1] - unit.x[j]));
    if (e_min < 4.0 * step_max)
        throw std::invalid_argument(
            "box_count: curve is undersampled for the smallest box (need >= 4 samples per "
            "box width; resample more densely or drop the finest scales)");

    std::vector<std::size_t> counts(scales.size());
    parallel_for(scales.size(),
                 [&](std::size_t i) { counts[i] = detail::count_boxes(unit, scales[i]); });
    return counts;
}

inline DimensionReport estimate_dimension(const DispersionCurve& curve,
                                          const DimensionOptions& opts = {}) {
    std::vector<double> scales = opts.scales;
    std::sort(scales.begin(), scales.end(), std::greater<>());
    const auto counts = box_count(curve, scales);

    const std::size_t discard =
        static_cast<std::size_t>(static_cast<double>(scales.size()) * opts.discard_fraction);
    if (scales.size() < 2 * discard + 5)
        throw std::invalid_argument("estimate_dimension: fewer than 5 usable scales after "
                                    "discarding the biased extremes");

    DimensionReport rep;
    rep.delta = curve.params.delta;
    if (curve.params.delta > 0.0 && curve.params.delta < 1.0)
        rep.D_expected = 2.0 - curve.params.delta;

    std::vector<double> lx, ly;
    for (std::size_t i = discard; i < scales.size() - discard; ++i) {
        const double e_eff = 1.0 / static_cast<double>(detail::cells_for_scale(scales[i]));
        rep.scales.push_back(e_eff);
        rep.counts.push_back(counts[i]);
        lx.push_back(std::log(1.0 / e_eff));
        ly.push_back(std::log(static_cast<double>(counts[i])));
    }
    const LineFit fit = fit_line(lx, ly);
    rep.raw_slope = fit.slope;
    rep.ci = fit.slope_stderr;
    rep.clipped = fit.slope < 1.0 || fit.slope > 2.0;
    rep.D_estimated = std::clamp(fit.slope, 1.0, 2.0);

    const auto [lo, hi] = std::minmax_element(curve.kh.begin(), curve.kh.end());
    rep.kh_min = *lo;
    rep.kh_max = *hi;
    rep.samples = curve.kh.size();
    return rep;
}

} // namespace selfsim
