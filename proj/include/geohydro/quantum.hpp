#pragma once

// Split-step solvers for Schrodinger-type equations: linear and nonlinear
// Schrodinger, the heat equation, and the two-component incompressible
// Schrodinger flow, together with the velocity momentum map.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"
#include "geohydro/potentials.hpp"
#include "geohydro/spaces.hpp"
#include "geohydro/transforms.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace geohydro {

struct SchrodingerParams {
    std::optional<Field> V; ///< external potential; absent means V = 0
    Nonlinearity f = Nonlinearity::none();
    double hbar = 2.0;
    double mass = 1.0;
};

namespace detail {

inline void check_schrodinger(const Grid& g, const SchrodingerParams& p) {
    require_positive_hbar(p.hbar);
    require(std::isfinite(p.mass) && p.mass > 0.0, "Schrodinger mass must be positive");
    if (p.V) g.check(*p.V, "potential V");
}

inline Field schrodinger_local_potential(const Grid& g, const SchrodingerParams& p, const CField& psi) {
    Field w = p.V ? *p.V : g.zeros();
    if (!p.f.is_none()) w += p.f.f(Field(psi.abs2()));
    return w;
}

inline CField phase_kick(const CField& psi, const Field& w, double factor) {
    CField out(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) out[i] = psi[i] * std::polar(1.0, factor * w[i]);
    return out;
}

} // namespace detail

/// Strang step of i hbar psi' = -(hbar^2/2m) Laplacian psi + V psi + f(|psi|^2) psi on a raw
/// (ungauged) representative.
inline CField step_schrodinger(const Grid& g, const CField& psi, const SchrodingerParams& p, double dt) {
    detail::check_schrodinger(g, p);
    g.check(psi, "psi");
    detail::require(std::isfinite(dt) && dt > 0.0, "step_schrodinger: dt must be positive");
    const double kin = p.hbar * dt / (2.0 * p.mass);
    CField out = detail::phase_kick(psi, detail::schrodinger_local_potential(g, p, psi), -dt / (2.0 * p.hbar));
    out = g.apply(out, [kin](const detail::SpectralLayout& l, std::size_t i) {
        return std::polar(1.0, -kin * l.k2[static_cast<Eigen::Index>(i)]);
    });
    return detail::phase_kick(out, detail::schrodinger_local_potential(g, p, out), -dt / (2.0 * p.hbar));
}

inline WaveFunction step_schrodinger(const WaveFunction& psi, const SchrodingerParams& p, double dt) {
    const Grid& g = psi.grid();
    CField next = step_schrodinger(g, psi.values(), p, dt);
    return WaveFunction::normalized(g, next);
}

/// (hbar^2/2m) ||grad psi||^2 + integral (V |psi|^2 + F(|psi|^2)).
inline double schrodinger_hamiltonian(const Grid& g, const CField& psi, const SchrodingerParams& p) {
    detail::check_schrodinger(g, p);
    g.check(psi, "psi");
    double grad2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) grad2 += g.integrate(Field(g.derivative(psi, a).abs2()));
    const Field a2 = psi.abs2();
    double pot = 0.0;
    if (p.V) pot += g.integrate(Field(*p.V * a2));
    if (!p.f.is_none()) pot += g.integrate(p.f.primitive(a2));
    return p.hbar * p.hbar / (2.0 * p.mass) * grad2 + pot;
}

/// Fluid potential matching the Schrodinger parameters at mass 1:
/// (hbar^2/4) FisherInfo + Linear(V) + integral F(rho).
inline Potential madelung_potential(const Grid& g, const SchrodingerParams& p) {
    detail::check_schrodinger(g, p);
    detail::require(p.mass == 1.0, "madelung_potential assumes unit mass");
    Potential U = Potential::fisher_info(p.hbar * p.hbar / 4.0);
    if (p.V) U = U + Potential::linear(*p.V);
    if (!p.f.is_none()) U = U + Potential::interaction(p.f);
    return U;
}

// ---- heat equation -----------------------------------------------------------------------------

inline constexpr double kBackwardHeatClip = 1e6;

/// Exact step of eta' = gamma Laplacian(eta). With gamma dt < 0 (backward heat) modes whose
/// amplification would exceed 1e6 are set to zero.
inline Field step_heat(const Grid& g, const Field& eta, double gamma, double dt) {
    g.check(eta, "eta");
    detail::require(std::isfinite(gamma) && std::isfinite(dt), "step_heat: parameters must be finite");
    const double s = gamma * dt;
    return g.apply(eta, [s](const detail::SpectralLayout& l, std::size_t i) {
        const double a = -s * l.k2[static_cast<Eigen::Index>(i)];
        if (a > std::log(kBackwardHeatClip)) return Complex(0.0);
        return Complex(std::exp(a));
    });
}

// ---- velocity momentum map and incompressible Schrodinger ------------------------------------------

/// v = hbar Im(conj(psi1) grad psi1 + conj(psi2) grad psi2) / |Psi|^2.
inline VectorField velocity_from_psi(const TwoComponentWave& w, double hbar) {
    require_positive_hbar(hbar);
    const Grid& g = w.grid;
    const Field n2 = w.pointwise_norm2();
    if (std::sqrt(n2.minCoeff()) <= 1e-6) throw DomainError("velocity_from_psi: |Psi| vanishes");
    VectorField v;
    for (int a = 0; a < g.dim(); ++a) {
        const CField j = w.psi1.conjugate() * g.derivative(w.psi1, a) + w.psi2.conjugate() * g.derivative(w.psi2, a);
        v.push_back(hbar * j.imag() / n2);
    }
    return v;
}

inline VectorField velocity_from_psi(const Grid& g, const CField& psi, double hbar) {
    return velocity_from_psi(TwoComponentWave(g, psi, CField::Zero(g.ssize())), hbar);
}

/// Pressure projection: multiplies both components by exp(-i q) with
/// Laplacian(q) = div(v) / hbar, which removes the divergence of the velocity.
inline TwoComponentWave ise_project(const TwoComponentWave& w, double hbar) {
    const Grid& g = w.grid;
    const Field div = g.divergence(velocity_from_psi(w, hbar));
    const Field q = g.inverse_laplacian(Field(div - g.integrate(div))) / hbar;
    return TwoComponentWave(g, detail::phase_kick(w.psi1, q, -1.0), detail::phase_kick(w.psi2, q, -1.0));
}

/// One step of the incompressible Schrodinger flow: free step exp(-i hbar |k|^2 dt) per
/// component, pressure projection, pointwise renormalization |Psi| = 1.
inline TwoComponentWave step_ise(const TwoComponentWave& w, double hbar, double dt) {
    const Grid& g = w.grid;
    detail::require(g.dim() >= 2, "step_ise needs a 2D or 3D grid");
    require_positive_hbar(hbar);
    detail::require(std::isfinite(dt) && dt > 0.0, "step_ise: dt must be positive");
    auto free = [&](const CField& c) {
        return g.apply(c, [&](const detail::SpectralLayout& l, std::size_t i) {
            return std::polar(1.0, -hbar * l.k2[static_cast<Eigen::Index>(i)] * dt);
        });
    };
    TwoComponentWave next = ise_project(TwoComponentWave(g, free(w.psi1), free(w.psi2)), hbar);
    const Field n = next.pointwise_norm2().sqrt();
    if (n.minCoeff() < 1e-6) throw SolverError("step_ise: |Psi| fell below 1e-6");
    next.psi1 /= n.cast<Complex>();
    next.psi2 /= n.cast<Complex>();
    return next;
}

} // namespace geohydro
