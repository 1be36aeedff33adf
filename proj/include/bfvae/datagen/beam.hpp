#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/rng.hpp"

namespace bfvae::beam {

struct Interval {
    double lo;
    double hi;
};

/// Composite cantilever: geometry in consistent length units, moduli and
/// load drawn uniformly from the given intervals.
struct BeamConfig {
    double length = 50.0;
    double h1 = 0.1;  // top flange height
    double h2 = 0.1;  // bottom flange height
    double h3 = 5.0;  // web height
    double width = 1.0;
    double hole_radius = 1.5;  // not used by the Euler-Bernoulli model
    std::array<Interval, 4> ranges{{{0.9e6, 1.1e6}, {0.9e6, 1.1e6}, {0.9e4, 1.1e4}, {9.0, 11.0}}};
    std::size_t points = 128;

    void validate() const {
        if (!(length > 0 && h1 > 0 && h2 > 0 && h3 > 0 && width > 0))
            throw UsageError("BeamConfig: geometry must be positive");
        for (const auto& r : ranges)
            if (!(r.lo <= r.hi)) throw UsageError("BeamConfig: unordered input range");
        if (points < 2) throw UsageError("BeamConfig: need at least 2 output points");
    }
};

using BeamInputs = std::array<double, 4>;

inline BeamInputs sample_beam_inputs(const BeamConfig& cfg, Rng& rng) {
    BeamInputs xi{};
    for (std::size_t k = 0; k < 4; ++k) xi[k] = uniform(rng, cfg.ranges[k].lo, cfg.ranges[k].hi);
    return xi;
}

/// Second moment of area of the transformed section: bottom flange
/// (w2 x h2), web (w x h3), top flange (w1 x h1) stacked upward, with the
/// flange widths scaled by their modulus ratio to the web (xi1/xi3, xi2/xi3).
inline double transformed_inertia(const BeamConfig& cfg, const BeamInputs& xi) {
    const double w1 = xi[0] / xi[2] * cfg.width;
    const double w2 = xi[1] / xi[2] * cfg.width;
    struct Rect {
        double b, h, y;
    };
    const std::array<Rect, 3> parts{{
        {w2, cfg.h2, cfg.h2 / 2.0},
        {cfg.width, cfg.h3, cfg.h2 + cfg.h3 / 2.0},
        {w1, cfg.h1, cfg.h2 + cfg.h3 + cfg.h1 / 2.0},
    }};
    double area = 0.0;
    double moment = 0.0;
    for (const auto& p : parts) {
        area += p.b * p.h;
        moment += p.b * p.h * p.y;
    }
    const double centroid = moment / area;
    double inertia = 0.0;
    for (const auto& p : parts) {
        const double d = p.y - centroid;
        inertia += p.b * p.h * p.h * p.h / 12.0 + p.b * p.h * d * d;
    }
    return inertia;
}

/// Node positions x_i = L i / (points - 1), both ends included.
inline Vector beam_nodes(const BeamConfig& cfg) {
    Vector x(cfg.points);
    const double last = static_cast<double>(cfg.points - 1);
    for (std::size_t i = 0; i < cfg.points; ++i) x[i] = cfg.length * static_cast<double>(i) / last;
    return x;
}

/// u(x) = -(q L^4 / (24 E I)) ((x/L)^4 - 4 (x/L)^3 + 6 (x/L)^2), E = xi3, q = xi4.
inline Vector beam_lf_displacement(const BeamConfig& cfg, const BeamInputs& xi) {
    cfg.validate();
    const double inertia = transformed_inertia(cfg, xi);
    if (!(inertia > 0.0) || !(xi[2] > 0.0))
        throw NumericError("beam_lf_displacement: non-positive stiffness");
    const double L = cfg.length;
    const double scale = xi[3] * L * L * L * L / (24.0 * xi[2] * inertia);
    Vector u(cfg.points);
    const double last = static_cast<double>(cfg.points - 1);
    for (std::size_t i = 0; i < cfg.points; ++i) {
        const double t = static_cast<double>(i) / last;
        const double t2 = t * t;
        u[i] = -scale * (t2 * t2 - 4.0 * t2 * t + 6.0 * t2);
    }
    return u;
}

}  // namespace bfvae::beam
