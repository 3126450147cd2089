#pragma once

// Parameters of the self-similar chain.  A structure is fixed by the scaling
// base N and the exponent delta; the derived quantities are
//     Lambda = N^delta        (amplitude ratio of the similarity phi(N h) = Lambda phi(h)),
//     xi     = N^(-delta)     (weight ratio of consecutive interaction scales),
//     eps    = ln N           (the small parameter of the continuum limit N -> 1+).
// N = 1 is rejected outright: every scale collapses onto every other and the
// whole construction degenerates, so nothing meaningful can be computed there.

#include <cmath>
#include <stdexcept>
#include <string>

namespace selfsim {

struct ChainParams {
    double N;     // scale base, > 1 (taking N > 1 loses no generality: inverting
                  // N merely reindexes the scale sum s -> -s)
    double delta; // similarity exponent
    double h;     // base spacing, > 0

    ChainParams(double N_, double delta_, double h_) : N(N_), delta(delta_), h(h_) {
        if (!(std::isfinite(N) && std::isfinite(delta) && std::isfinite(h)))
            throw std::invalid_argument("ChainParams: parameters must be finite");
        if (!(N > 1.0))
            throw std::invalid_argument(
                "ChainParams: N must exceed 1 (N = 1 is degenerate: all scales coincide)");
        if (!(h > 0.0)) throw std::invalid_argument("ChainParams: h must be positive");
    }

    double lambda() const { return std::pow(N, delta); }   // Lambda = N^delta
    double xi() const { return std::pow(N, -delta); }      // xi = N^(-delta)
    double eps() const { return std::log(N); }             // eps = ln N

    // Spacing rescaled by one similarity step, h' = N h.
    ChainParams rescaled() const { return ChainParams(N, delta, N * h); }

    // The scale-sum weights deteriorate when N^(-min(delta, 2-delta)) -> 1:
    // both tails of the Laplacian window then shrink so slowly that term
    // counts explode and certified bounds become expensive.  Callers surface
    // this as a conditioning warning.
    bool poorly_conditioned() const {
        const double rate = std::min(delta, 2.0 - delta);
        return std::pow(N, -rate) > 0.99;
    }
};

// Laplacian-band guard shared by the operator modules: the scale series for
// the Laplacian, dispersion and elastic energy converge exactly for
// 0 < delta < 2 (upper tail needs delta > 0, lower tail needs delta < 2).
inline void require_laplacian_band(const ChainParams& p, const char* who) {
    if (!(p.delta > 0.0) || !(p.delta < 2.0))
        throw std::domain_error(std::string(who) +
                                ": delta must lie in the open band (0, 2), got " +
                                std::to_string(p.delta));
}

} // namespace selfsim
