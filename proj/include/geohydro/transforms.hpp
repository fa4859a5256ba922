#pragma once

// Maps between fluid variables (rho, theta) and wave functions: the Madelung
// transform with its differential and the two symplectic forms it relates,
// the real (Hopf-Cole) analogue, and the two-component Madelung transform.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"
#include "geohydro/spaces.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace geohydro {

struct MadelungParams {
    double hbar = 2.0;
    double gamma = 1.0;
};

inline void require_positive_hbar(double hbar) {
    detail::require(std::isfinite(hbar) && hbar > 0.0, "hbar must be positive");
}

/// Pair of complex fields with pointwise norm |psi1|^2 + |psi2|^2.
struct TwoComponentWave {
    Grid grid;
    CField psi1;
    CField psi2;

    TwoComponentWave(Grid g, CField a, CField b) : grid(std::move(g)), psi1(std::move(a)), psi2(std::move(b)) {
        grid.check(psi1, "psi1");
        grid.check(psi2, "psi2");
    }
    Field pointwise_norm2() const { return psi1.abs2() + psi2.abs2(); }
};

struct FluidPair {
    Density rho;
    ThetaWO theta;
};

namespace detail {

inline double wrap_phase(double d) {
    constexpr double pi = std::numbers::pi;
    d = std::remainder(d, 2.0 * pi); // (-pi, pi]
    return d;
}

/// Unwraps arg(psi) along lines: node 0 outward along axis 0, then from each of those
/// along axis 1, then along axis 2. Throws if any grid line carries a nonzero winding.
inline Field unwrap_phase(const Grid& g, const CField& psi) {
    const Field raw = psi.arg();
    const int dim = g.dim();
    // Winding check on every closed grid line.
    for (int a = 0; a < dim; ++a) {
        const std::size_t stride = g.axis_stride(a);
        const int na = g.n(a);
        for (std::size_t start = 0; start < g.size(); ++start) {
            if ((start / stride) % static_cast<std::size_t>(na) != 0) continue;
            double total = 0.0;
            for (int j = 0; j < na; ++j) {
                const auto i0 = static_cast<Eigen::Index>(start + static_cast<std::size_t>(j) * stride);
                const auto i1 = static_cast<Eigen::Index>(start + static_cast<std::size_t>((j + 1) % na) * stride);
                total += wrap_phase(raw[i1] - raw[i0]);
            }
            if (std::abs(total) > std::numbers::pi)
                throw DomainError("madelung_inverse: phase winds by " + std::to_string(total) + " along axis " +
                                  std::to_string(a));
        }
    }
    Field out = raw;
    // Lines along axis a start at nodes whose indices along axes >= a are all 0.
    for (int a = 0; a < dim; ++a) {
        const std::size_t stride = g.axis_stride(a);
        const int na = g.n(a);
        for (std::size_t start = 0; start < g.size(); ++start) {
            bool is_start = true;
            for (int b = a; b < dim; ++b)
                if ((start / g.axis_stride(b)) % static_cast<std::size_t>(g.n(b)) != 0) is_start = false;
            if (!is_start) continue;
            for (int j = 1; j < na; ++j) {
                const auto prev = static_cast<Eigen::Index>(start + static_cast<std::size_t>(j - 1) * stride);
                const auto cur = static_cast<Eigen::Index>(start + static_cast<std::size_t>(j) * stride);
                out[cur] = out[prev] + wrap_phase(raw[cur] - raw[prev]);
            }
        }
    }
    return out;
}

} // namespace detail

// ---- Madelung ------------------------------------------------------------------------------

/// psi = sqrt(rho) exp(i theta / hbar), rotated so that psi at node 0 is real positive.
inline WaveFunction madelung(const Density& rho, const Field& theta, double hbar = 2.0) {
    require_positive_hbar(hbar);
    const Grid& g = rho.grid();
    g.check(theta, "theta");
    CField psi(g.ssize());
    const Field amp = rho.values().sqrt();
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] = std::polar(amp[i], theta[i] / hbar);
    return WaveFunction(g, std::move(psi));
}
inline WaveFunction madelung(const Density& rho, const ThetaWO& theta, double hbar = 2.0) {
    return madelung(rho, theta.values(), hbar);
}
inline WaveFunction madelung(const Density& rho, const ThetaFR& theta, double hbar = 2.0) {
    return madelung(rho, theta.values(), hbar);
}

/// rho = |psi|^2 and theta = hbar * unwrapped arg(psi), with the WO gauge.
inline FluidPair madelung_inverse(const Grid& g, const CField& psi, double hbar = 2.0) {
    require_positive_hbar(hbar);
    g.check(psi, "psi");
    const double lo = psi.abs().minCoeff();
    if (lo <= 1e-6)
        throw DomainError("madelung_inverse: |psi| = " + std::to_string(lo) + " is too close to zero");
    Density rho(g, psi.abs2());
    const Field phase = detail::unwrap_phase(g, psi);
    return {std::move(rho), ThetaWO(g, hbar * phase)};
}
inline FluidPair madelung_inverse(const WaveFunction& psi, double hbar = 2.0) {
    return madelung_inverse(psi.grid(), psi.values(), hbar);
}

/// Differential of the Madelung map, in the same global phase as madelung().
inline CField madelung_pushforward(const Density& rho, const Field& theta, const Field& rho_dot,
                                   const Field& theta_dot, double hbar = 2.0) {
    require_positive_hbar(hbar);
    const Grid& g = rho.grid();
    g.check(theta, "theta");
    g.check(rho_dot, "rho_dot");
    g.check(theta_dot, "theta_dot");
    const Field s = rho.values().sqrt();
    const double phase0 = theta[0] / hbar;
    CField out(g.ssize());
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = Complex(rho_dot[i] / (2.0 * s[i]), s[i] * theta_dot[i] / hbar) *
                 std::polar(1.0, theta[i] / hbar - phase0);
    return out;
}

/// Canonical form on T*Dens:  integral (theta_dot1 rho_dot2 - theta_dot2 rho_dot1).
inline double canonical_symplectic(const Grid& g, const Field& rho_dot1, const Field& theta_dot1,
                                   const Field& rho_dot2, const Field& theta_dot2) {
    g.check(rho_dot1, "rho_dot");
    g.check(rho_dot2, "rho_dot");
    g.check(theta_dot1, "theta_dot");
    g.check(theta_dot2, "theta_dot");
    return g.integrate(theta_dot1 * rho_dot2 - theta_dot2 * rho_dot1);
}

/// 2 hbar integral Im(psi_dot1 conj(psi_dot2)).
inline double projective_symplectic(const Grid& g, const CField& psi_dot1, const CField& psi_dot2,
                                    double hbar = 2.0) {
    require_positive_hbar(hbar);
    g.check(psi_dot1, "psi_dot");
    g.check(psi_dot2, "psi_dot");
    return 2.0 * hbar * g.integrate(Field((psi_dot1 * psi_dot2.conjugate()).imag()));
}

// ---- Hopf-Cole ------------------------------------------------------------------------------

struct HopfColePair {
    Field plus;
    Field minus;
};

/// eta(+/-) = sqrt(rho) exp(+/- theta / (2 gamma)).
inline HopfColePair hopf_cole(const Grid& g, const Field& rho, const Field& theta, double gamma) {
    detail::require(std::isfinite(gamma) && gamma > 0.0, "hopf_cole: gamma must be positive");
    g.check(rho, "rho");
    g.check(theta, "theta");
    detail::require(rho.minCoeff() > 0.0, "hopf_cole: rho must be positive");
    const Field s = rho.sqrt();
    const Field e = (theta / (2.0 * gamma)).exp();
    return {s * e, s / e};
}

/// rho = eta+ eta-, theta = gamma ln(eta+/eta-). No gauge is applied to theta.
inline std::pair<Field, Field> hopf_cole_inverse(const Grid& g, const Field& eta_plus, const Field& eta_minus,
                                                 double gamma) {
    detail::require(std::isfinite(gamma) && gamma > 0.0, "hopf_cole_inverse: gamma must be positive");
    g.check(eta_plus, "eta+");
    g.check(eta_minus, "eta-");
    if (eta_plus.minCoeff() <= 0.0 || eta_minus.minCoeff() <= 0.0)
        throw DomainError("hopf_cole_inverse: eta must be strictly positive");
    return {eta_plus * eta_minus, gamma * (eta_plus / eta_minus).log()};
}

// ---- two-component Madelung ------------------------------------------------------------------

inline TwoComponentWave two_component_madelung(const Grid& g, const Field& rho1, const Field& theta1,
                                               const Field& rho2, const Field& theta2, double hbar = 2.0) {
    require_positive_hbar(hbar);
    for (const Field* f : {&rho1, &theta1, &rho2, &theta2}) g.check(*f, "two-component input");
    detail::require(rho1.minCoeff() >= 0.0 && rho2.minCoeff() >= 0.0,
                    "two_component_madelung: densities must be nonnegative");
    CField a(g.ssize()), b(g.ssize());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a[i] = std::polar(std::sqrt(rho1[i]), theta1[i] / hbar);
        b[i] = std::polar(std::sqrt(rho2[i]), theta2[i] / hbar);
    }
    return TwoComponentWave(g, std::move(a), std::move(b));
}

} // namespace geohydro
