#pragma once

#include "geohydro/grid.hpp"
#include "geohydro/spaces.hpp"

#include <random>

namespace geohydro::test_support {

using Rng = std::mt19937_64;

/// Real trigonometric polynomial with random modes |k_i| <= kmax and amplitudes <= 1/waves.
inline Field smooth_field(const Grid& g, Rng& rng, int kmax = 4, int waves = 6) {
    std::uniform_int_distribution<int> kd(-kmax, kmax);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), ph(0.0, kTwoPi);
    Field out = g.zeros();
    for (int w = 0; w < waves; ++w) {
        std::array<int, 3> k{0, 0, 0};
        for (int a = 0; a < g.dim(); ++a) k[a] = kd(rng);
        const double A = amp(rng) / waves, p = ph(rng);
        out += g.sample([&](double x, double y, double z) {
            return A * std::cos(kTwoPi * (k[0] * x / g.length(0) +
                                          (g.dim() > 1 ? k[1] * y / g.length(1) : 0.0) +
                                          (g.dim() > 2 ? k[2] * z / g.length(2) : 0.0)) +
                                p);
        });
    }
    return out;
}

inline Field zero_mean(const Grid& g, const Field& f) { return f - g.integrate(f); }

/// 1 + depth * (normalized smooth field), normalized to unit mass.
inline Density smooth_density(const Grid& g, Rng& rng, int kmax = 4, double depth = 0.5) {
    Field f = zero_mean(g, smooth_field(g, rng, kmax));
    f *= depth / std::max(max_abs(f), 1e-300);
    return Density::normalized(g, Field(1.0 + f));
}

inline TangentDensity smooth_tangent(const Grid& g, Rng& rng, int kmax = 4) {
    return TangentDensity::projected(g, smooth_field(g, rng, kmax));
}

} // namespace geohydro::test_support
