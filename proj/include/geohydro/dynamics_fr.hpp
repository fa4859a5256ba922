#pragma once

// Fisher-Rao side: Newton's equations on densities with the Fisher-Rao metric,
// horizontal muCH flow with its Lagrangian reconstruction, the infinite-dimensional
// Neumann problem, a Klein-Gordon residual evaluator and Sasaki-Fisher-Rao geodesics.
// These steppers are not dealiased: their right-hand sides are pointwise up to
// the potential term, and the exact great-circle and Neumann correspondences
// are checked at the level of roundoff.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"
#include "geohydro/integrators.hpp"
#include "geohydro/potentials.hpp"
#include "geohydro/spaces.hpp"
#include "geohydro/transforms.hpp"

#include <cmath>
#include <string>

namespace geohydro {

struct FRState {
    Density rho;
    ThetaFR theta;
};

/// Point on the unit L2 sphere with a tangent velocity.
struct NeumannState {
    Grid grid;
    Field f;
    Field f_dot;

    NeumannState(Grid g, Field f0, Field f0_dot, double tolerance = 1e-9)
        : grid(std::move(g)), f(std::move(f0)), f_dot(std::move(f0_dot)) {
        grid.check(f, "f");
        grid.check(f_dot, "f_dot");
        const double n2 = grid.integrate(f.square());
        if (std::abs(n2 - 1.0) > tolerance)
            throw DomainError("Neumann state: integral f^2 = " + std::to_string(n2) + " differs from 1");
        const double tang = grid.integrate(f * f_dot);
        if (std::abs(tang) > tolerance)
            throw DomainError("Neumann state: f_dot is not tangent (integral f f_dot = " + std::to_string(tang) + ")");
    }
};

// ---- Newton on (Dens, Fisher-Rao) -------------------------------------------------------------

/// Multiplier integral (dU/drho - theta^2/2) rho, which keeps integral(theta rho) = 0.
inline double fr_multiplier(const Grid& g, const Field& rho, const Field& theta, const Field& vder) {
    return g.integrate((vder - 0.5 * theta.square()) * rho);
}

/// 1/2 integral theta^2 rho + U(rho).
inline double fr_hamiltonian(const FRState& s, const Potential& U) {
    const Grid& g = s.rho.grid();
    return 0.5 * g.integrate(s.theta.values().square() * s.rho.values()) + U.value(s.rho);
}

inline FieldSet newton_fr_rhs(const Grid& g, const Potential& U, const FieldSet& u) {
    const Field& r = u[0];
    const Field& th = u[1];
    // RK stages drift off the mass constraint at O(dt^2); only step results are held to 1e-8.
    const Field d = U.vder(Density(g, r, 1e-4));
    const double lambda = fr_multiplier(g, r, th, d);
    return {Field(th * r), Field(lambda - 0.5 * th.square() - d)};
}

/// One RK4 step of rho' = theta rho, theta' = lambda - theta^2/2 - dU/drho.
inline FRState step_newton_fr(const FRState& s, const Potential& U, double dt) {
    const Grid& g = s.rho.grid();
    detail::require(std::isfinite(dt) && dt > 0.0, "step_newton_fr: dt must be positive");
    const FieldSet next = rk4_step(FieldSet{s.rho.values(), s.theta.values()}, dt,
                                   [&](const FieldSet& x) { return newton_fr_rhs(g, U, x); });
    Density rho(g, next[0], 1e-8);
    ThetaFR theta(next[1], rho);
    return {std::move(rho), std::move(theta)};
}

/// Lambda currently acting on the state.
inline double fr_multiplier(const FRState& s, const Potential& U) {
    return fr_multiplier(s.rho.grid(), s.rho.values(), s.theta.values(), U.vder(s.rho));
}

// ---- horizontal muCH --------------------------------------------------------------------------

/// Same right-hand side as step_newton_fr with U = 0, on the circle.
inline FRState step_muCH_horizontal(const FRState& s, double dt) {
    detail::require(s.rho.grid().dim() == 1, "step_muCH_horizontal is 1D only");
    static const Potential zero = Potential::zero();
    return step_newton_fr(s, zero, dt);
}

/// Horizontal muCH state together with the Lagrangian displacement xi, phi(x) = x + xi(x).
struct MuCHFlowState {
    FRState s;
    Field xi;
};

/// Zero-mean antiderivative on the circle of a zero-mean field.
inline Field antiderivative(const Grid& g, const Field& f) {
    detail::require(g.dim() == 1, "antiderivative is 1D only");
    const double m = g.integrate(f);
    if (std::abs(m) > 1e-10) throw DomainError("antiderivative: input has non-zero mean " + std::to_string(m));
    return g.apply(f, [](const detail::SpectralLayout& l, std::size_t i) {
        const double k = l.k[0][static_cast<Eigen::Index>(i)];
        return (k == 0.0 || l.nyquist[0][i]) ? Complex(0.0) : Complex(0.0, -1.0 / k);
    });
}

/// Initial displacement with phi_x = rho0.
inline MuCHFlowState start_muCH_flow(FRState s) {
    const Grid& g = s.rho.grid();
    Field xi = antiderivative(g, Field(s.rho.values() - 1.0));
    return {std::move(s), std::move(xi)};
}

/// RK4 step of the muCH state together with xi' = u o phi, where (u o phi)_x = theta rho
/// (u_x o phi = theta in the Fisher-Rao gauge). The additive constant of u o phi is fixed to zero mean.
inline MuCHFlowState step_muCH_flow(const MuCHFlowState& st, double dt) {
    const Grid& g = st.s.rho.grid();
    detail::require(g.dim() == 1, "step_muCH_flow is 1D only");
    static const Potential zero = Potential::zero();
    auto rhs = [&](const FieldSet& u) {
        FieldSet f = newton_fr_rhs(g, zero, FieldSet{u[0], u[1]});
        const Field flux = u[1] * u[0];
        f.f.push_back(antiderivative(g, Field(flux - g.integrate(flux))));
        return f;
    };
    const FieldSet next = rk4_step(FieldSet{st.s.rho.values(), st.s.theta.values(), st.xi}, dt, rhs);
    Density rho(g, next[0], 1e-8);
    ThetaFR theta(next[1], rho);
    return {{std::move(rho), std::move(theta)}, next[2]};
}

/// max |phi_x - rho| = max |1 + xi_x - rho|.
inline double muCH_flow_defect(const MuCHFlowState& st) {
    const Grid& g = st.s.rho.grid();
    return max_abs(Field(1.0 + g.derivative(st.xi, 0) - st.s.rho.values()));
}

// ---- Neumann problem ------------------------------------------------------------------------------

/// lambda = integral (f_dot^2 + f Laplacian f).
inline double neumann_multiplier(const Grid& g, const Field& f, const Field& f_dot) {
    return g.integrate(f_dot.square() + f * g.laplacian(f));
}

/// L(f, f_dot) = 1/2 integral (f_dot^2 + f Laplacian f); lambda = 2 L.
inline double neumann_lagrangian(const NeumannState& s) {
    return 0.5 * neumann_multiplier(s.grid, s.f, s.f_dot);
}

/// 1/2 integral (f_dot^2 - f Laplacian f): the conserved energy. The Lagrangian itself
/// changes along solutions at rate 2 integral f_dot Laplacian f.
inline double neumann_energy(const NeumannState& s) {
    return 0.5 * s.grid.integrate(s.f_dot.square() - s.f * s.grid.laplacian(s.f));
}

/// RK4 step of f'' = Laplacian f - lambda f, followed by renormalization of f and
/// projection of f_dot onto the tangent space.
inline NeumannState step_neumann(const NeumannState& s, double dt) {
    const Grid& g = s.grid;
    detail::require(std::isfinite(dt) && dt > 0.0, "step_neumann: dt must be positive");
    auto rhs = [&](const FieldSet& u) {
        const Field lap = g.laplacian(u[0]);
        const double lambda = g.integrate(u[1].square() + u[0] * lap);
        return FieldSet{u[1], Field(lap - lambda * u[0])};
    };
    FieldSet next = rk4_step(FieldSet{s.f, s.f_dot}, dt, rhs);
    Field f = next[0] / g.norm(next[0]);
    Field fd = next[1] - g.integrate(f * next[1]) * f;
    return NeumannState(g, std::move(f), std::move(fd));
}

/// Neumann data corresponding to a Fisher-Rao state: (sqrt(rho), theta sqrt(rho) / 2).
inline NeumannState neumann_from_fr(const FRState& s) {
    const Field f = s.rho.values().sqrt();
    return NeumannState(s.rho.grid(), f, Field(0.5 * s.theta.values() * f));
}

// ---- Klein-Gordon ------------------------------------------------------------------------------------

struct KleinGordonReport {
    double vbar;            ///< 1/2 integral (f_x^2 - f_t^2)
    double mass_stated;     ///< 2 vbar
    double mass_dispersion; ///< -2 vbar
    double residual_stated;
    double residual_dispersion;
};

/// || f_tt - f_xx + m2 f ||_L2 for f on a 2D grid with axes (x, t).
inline double klein_gordon_residual(const Grid& g, const Field& f, double m2) {
    detail::require(g.dim() == 2, "klein_gordon_residual needs a 2D (x, t) grid");
    g.check(f, "space-time field");
    const Field ftt = g.derivative(g.derivative(f, 1), 1);
    const Field fxx = g.derivative(g.derivative(f, 0), 0);
    return g.norm(Field(ftt - fxx + m2 * f));
}

inline double klein_gordon_vbar(const Grid& g, const Field& f) {
    detail::require(g.dim() == 2, "klein_gordon_vbar needs a 2D (x, t) grid");
    return 0.5 * g.integrate(g.derivative(f, 0).square() - g.derivative(f, 1).square());
}

inline KleinGordonReport klein_gordon_report(const Grid& g, const Field& f) {
    const double v = klein_gordon_vbar(g, f);
    return {v, 2.0 * v, -2.0 * v, klein_gordon_residual(g, f, 2.0 * v), klein_gordon_residual(g, f, -2.0 * v)};
}

// ---- Sasaki-Fisher-Rao geodesics ----------------------------------------------------------------------

/// Geodesic of the Sasaki-Fisher-Rao metric at time t, computed as the horizontal
/// great circle through the hbar = 2 Madelung image and pulled back.
inline FRState sasaki_geodesic(const Density& rho0, const Field& theta0, const Field& rho_dot0,
                               const Field& theta_dot0, double t) {
    constexpr double hbar = 2.0;
    const Grid& g = rho0.grid();
    const WaveFunction psi0 = madelung(rho0, theta0, hbar);
    const CField& p = psi0.values();
    CField v = madelung_pushforward(rho0, theta0, rho_dot0, theta_dot0, hbar);
    // Horizontal part: remove the component along psi0.
    v -= detail::inner(g, v, p) * p;
    const double s = g.norm(v);
    CField psi = p;
    if (s > 0.0) psi = std::cos(s * t) * p + (std::sin(s * t) / s) * v;
    if (psi.abs().minCoeff() <= 1e-6)
        throw DomainError("sasaki_geodesic: the wave function vanishes along the geodesic");
    FluidPair pulled = madelung_inverse(g, psi / g.norm(psi), hbar);
    ThetaFR theta(pulled.theta.values(), pulled.rho);
    return {std::move(pulled.rho), std::move(theta)};
}

} // namespace geohydro
