#pragma once

// A closed-form test field packaged with whatever side information the
// operators can exploit.  Only the callable is mandatory.  Derivative
// callables, when supplied, replace Richardson finite differences in the
// small-displacement expansions; the certification bounds, when supplied,
// replace probed (sampled and inflated) estimates.

#include <functional>
#include <optional>
#include <stdexcept>

namespace selfsim {

struct AnalyticProbe {
    std::function<double(double)> u;
    std::function<double(double)> d2;      // optional second derivative
    std::function<double(double)> d4;      // optional fourth derivative
    double scale = 1.0;                    // characteristic length of variation
    double limit = 0.0;                    // value u approaches far from the origin
    std::optional<double> sup_bound;       // certified sup |u|
    std::optional<double> curvature_bound; // certified sup |u''|

    explicit AnalyticProbe(std::function<double(double)> fn) : u(std::move(fn)) {
        if (!u) throw std::invalid_argument("AnalyticProbe: callable required");
    }

    AnalyticProbe& with_derivatives(std::function<double(double)> second,
                                    std::function<double(double)> fourth) {
        d2 = std::move(second);
        d4 = std::move(fourth);
        return *this;
    }
    AnalyticProbe& with_scale(double s) {
        if (!(s > 0.0)) throw std::invalid_argument("AnalyticProbe: scale must be positive");
        scale = s;
        return *this;
    }
    AnalyticProbe& with_limit(double v) {
        limit = v;
        return *this;
    }
    AnalyticProbe& with_bounds(double sup, double curvature) {
        if (!(sup >= 0.0) || !(curvature >= 0.0))
            throw std::invalid_argument("AnalyticProbe: bounds must be nonnegative");
        sup_bound = sup;
        curvature_bound = curvature;
        return *this;
    }
};

} // namespace selfsim
