#pragma once

// Time steppers on the Wasserstein-Otto side: Newton's equations on densities in
// (rho, theta) form and in Eulerian (v, rho) form, the fully compressible and
// relativistic 1D systems, 2D vorticity, heat/entropy gradient flow and the
// viscous Hamilton-Jacobi equation. Nonlinear right-hand sides are dealiased
// with the 2/3 rule; every step ends with a positivity check and a spectral
// tail guard.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"
#include "geohydro/integrators.hpp"
#include "geohydro/potentials.hpp"
#include "geohydro/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace geohydro {

inline constexpr double kTailGuard = 1e-4;
/// Mass tolerance applied to intermediate and stepped densities.
inline constexpr double kStepMassTolerance = 1e-8;

struct WOState {
    Density rho;
    ThetaWO theta;
};

struct EulerianState {
    VectorField v;
    Density rho;
};

struct FullState {
    Field v;
    Density rho;
    Field sigma;
};

struct RelState {
    Field m;
    Density rho;
};

struct Vorticity2D {
    Grid grid;
    Field omega;

    Vorticity2D(Grid g, Field w) : grid(std::move(g)), omega(std::move(w)) {
        detail::require(grid.dim() == 2, "vorticity lives on a 2D grid");
        grid.check(omega, "vorticity");
        const double m = grid.integrate(omega);
        if (std::abs(m) > 1e-10) throw DomainError("vorticity must have zero mean, got " + std::to_string(m));
    }
};

namespace detail {

inline Density stage_density(const Grid& g, const Field& rho) { return Density(g, rho, kStepMassTolerance); }

inline void guard_tail(const Grid& g, const Field& f, const char* what) {
    // Fluctuations at roundoff level carry no spectral information.
    const double mean = g.integrate(f);
    if (g.norm(Field(f - mean)) < 1e-10 * std::max(1.0, std::abs(mean))) return;
    const double tail = g.spectral_tail_fraction(f);
    if (tail > kTailGuard)
        throw SpectralBlowup(std::string(what) + ": spectral tail fraction " + std::to_string(tail) +
                             " exceeds the pre-shock guard");
}

inline void require_cfl(double dt, double h, double speed, const char* system) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError(std::string(system) + ": dt must be positive");
    if (speed > 0.0 && dt > 0.5 * h / speed)
        throw DomainError(std::string(system) + ": dt = " + std::to_string(dt) + " violates the CFL bound " +
                          std::to_string(0.5 * h / speed));
}

inline double max_speed(const VectorField& v) { return std::sqrt(norm2(v).maxCoeff()); }

} // namespace detail

/// Largest dt allowed by the CFL rule for a given maximal signal speed.
inline double cfl_limit(const Grid& g, double speed) {
    return speed > 0.0 ? 0.5 * g.min_spacing() / speed : std::numeric_limits<double>::infinity();
}

// ---- (rho, theta) Newton equations --------------------------------------------------------

/// 1/2 integral rho |grad theta|^2 + U(rho).
inline double wo_hamiltonian(const WOState& s, const Potential& U) {
    const Grid& g = s.rho.grid();
    return 0.5 * g.integrate(s.rho.values() * norm2(g.gradient(s.theta.values()))) + U.value(s.rho);
}

/// (rho_dot, theta_dot) = (-div(rho grad theta), -|grad theta|^2/2 - dU/drho), dealiased.
inline FieldSet newton_wo_rhs(const Grid& g, const Potential& U, const FieldSet& u) {
    const Density rho = detail::stage_density(g, u[0]);
    const VectorField grad = g.gradient(u[1]);
    const Field rho_dot = -g.divergence(scale(grad, u[0]));
    const Field theta_dot = -0.5 * norm2(grad) - U.vder(rho);
    return {g.dealias(rho_dot), g.dealias(theta_dot)};
}

inline double newton_wo_speed(const WOState& s, const Potential& U) {
    const Grid& g = s.rho.grid();
    return detail::max_speed(g.gradient(s.theta.values())) +
           std::sqrt(U.sound_speed_squared(s.rho.values()).maxCoeff());
}

/// One step of Newton's equations on densities with the Wasserstein-Otto metric.
/// When U carries a positive Fisher-information weight c the step runs in the
/// variables (l, theta) with l = log(rho), where the dispersive part
/// (l, theta)' = (-Laplacian theta, c Laplacian l) has constant coefficients and is
/// integrated exactly (Lawson RK4); the remainder only holds products of first
/// derivatives. Otherwise classical RK4 on (rho, theta).
inline WOState step_newton_wo(const WOState& s, const Potential& U, double dt) {
    const Grid& g = s.rho.grid();
    detail::require_cfl(dt, g.min_spacing(), newton_wo_speed(s, U), "step_newton_wo");
    const double c = U.fisher_coefficient();
    FieldSet next;
    if (c > 0.0) {
        const double sc = std::sqrt(c);
        const Potential rest = U.without_fisher_info();
        auto propagate = [&](const FieldSet& x, double tau) {
            CField l = g.forward(x[0]);
            CField t = g.forward(x[1]);
            const auto& lay = g.real_layout();
            for (std::size_t i = 0; i < lay.size; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const double k2 = lay.k2[ii];
                if (k2 == 0.0) continue;
                const double w = sc * k2 * tau;
                const double cw = std::cos(w), sw = std::sin(w);
                const Complex l0 = l[ii], t0 = t[ii];
                l[ii] = cw * l0 + sw * t0 / sc;
                t[ii] = cw * t0 - sc * sw * l0;
            }
            return FieldSet{g.backward(l), g.backward(t)};
        };
        auto nonlinear = [&](const FieldSet& x) {
            const VectorField gl = g.gradient(x[0]);
            const VectorField gt = g.gradient(x[1]);
            // Interaction-picture stages of l do not conserve mass exactly; only the step result must.
            const Density rho(g, Field(x[0].exp()), 1e-4);
            const Field l_dot = -dot(gl, gt);
            const Field t_dot = -0.5 * norm2(gt) + 0.5 * c * norm2(gl) - rest.vder(rho);
            return FieldSet{g.dealias(l_dot), g.dealias(t_dot)};
        };
        next = lawson_rk4_step(FieldSet{Field(s.rho.values().log()), s.theta.values()}, dt, propagate, nonlinear);
        next[0] = next[0].exp();
    } else {
        next = rk4_step(FieldSet{s.rho.values(), s.theta.values()}, dt,
                        [&](const FieldSet& x) { return newton_wo_rhs(g, U, x); });
    }
    WOState out{detail::stage_density(g, next[0]), ThetaWO(g, next[1])};
    detail::guard_tail(g, out.rho.values(), "step_newton_wo rho");
    detail::guard_tail(g, out.theta.values(), "step_newton_wo theta");
    return out;
}

// ---- Eulerian (v, rho) ---------------------------------------------------------------------

/// 1/2 integral |v|^2 rho + U(rho).
inline double eulerian_energy(const EulerianState& s, const Potential& U) {
    const Grid& g = s.rho.grid();
    return 0.5 * g.integrate(norm2(s.v) * s.rho.values()) + U.value(s.rho);
}

inline EulerianState make_eulerian_state(VectorField v, Density rho) {
    rho.grid().check(v, "velocity");
    return {std::move(v), std::move(rho)};
}

inline FieldSet eulerian_rhs(const Grid& g, const Potential& U, const FieldSet& u) {
    const auto d = static_cast<std::size_t>(g.dim());
    const Field& r = u[d];
    const Density rho = detail::stage_density(g, r);
    const Field w = U.vder(rho);
    FieldSet out;
    out.f.reserve(d + 1);
    Field flux_div = g.zeros();
    for (std::size_t i = 0; i < d; ++i) {
        Field adv = g.zeros();
        for (std::size_t j = 0; j < d; ++j) adv += u[j] * g.derivative(u[i], static_cast<int>(j));
        out.f.push_back(g.dealias(Field(-adv - g.derivative(w, static_cast<int>(i)))));
        flux_div += g.derivative(Field(r * u[i]), static_cast<int>(i));
    }
    out.f.push_back(g.dealias(Field(-flux_div)));
    return out;
}

/// One RK4 step of v' = -(v.grad)v - grad dU/drho, rho' = -div(rho v).
inline EulerianState step_eulerian(const EulerianState& s, const Potential& U, double dt) {
    const Grid& g = s.rho.grid();
    g.check(s.v, "velocity");
    detail::require_cfl(dt, g.min_spacing(),
                        detail::max_speed(s.v) + std::sqrt(U.sound_speed_squared(s.rho.values()).maxCoeff()),
                        "step_eulerian");
    FieldSet u(s.v);
    u.f.push_back(s.rho.values());
    const FieldSet next = rk4_step(u, dt, [&](const FieldSet& x) { return eulerian_rhs(g, U, x); });
    const auto d = static_cast<std::size_t>(g.dim());
    EulerianState out{VectorField(next.f.begin(), next.f.begin() + static_cast<std::ptrdiff_t>(d)),
                      detail::stage_density(g, next[d])};
    for (const auto& c : out.v) detail::guard_tail(g, c, "step_eulerian v");
    detail::guard_tail(g, out.rho.values(), "step_eulerian rho");
    return out;
}

// ---- fully compressible 1D -----------------------------------------------------------------

inline double full_energy(const FullState& s, const StateFunction2& e) {
    const Grid& g = s.rho.grid();
    const Field& r = s.rho.values();
    return 0.5 * g.integrate(s.v.square() * r) + g.integrate(e.e(r, s.sigma) * r);
}

/// One RK4 step of v' = -v v_x - P_x / rho, rho' = -(rho v)_x, sigma' = -(sigma v)_x.
inline FullState step_full_compressible(const FullState& s, const StateFunction2& e, double dt) {
    const Grid& g = s.rho.grid();
    detail::require(g.dim() == 1, "step_full_compressible is 1D only");
    g.check(s.v, "velocity");
    g.check(s.sigma, "entropy density");
    const Field c2 = e.exponent() * e.pressure(s.rho.values(), s.sigma) / s.rho.values();
    detail::require_cfl(dt, g.min_spacing(), max_abs(s.v) + std::sqrt(c2.maxCoeff()), "step_full_compressible");
    auto rhs = [&](const FieldSet& u) {
        const Field& v = u[0];
        const Field& r = u[1];
        const Field& sg = u[2];
        detail::stage_density(g, r);
        const Field p = e.pressure(r, sg);
        return FieldSet{g.dealias(Field(-v * g.derivative(v, 0) - g.derivative(p, 0) / r)),
                        g.dealias(Field(-g.derivative(Field(r * v), 0))),
                        g.dealias(Field(-g.derivative(Field(sg * v), 0)))};
    };
    const FieldSet next = rk4_step(FieldSet{s.v, s.rho.values(), s.sigma}, dt, rhs);
    if (next[2].minCoeff() < 0.0) throw PositivityLoss("step_full_compressible: entropy density became negative");
    FullState out{next[0], detail::stage_density(g, next[1]), next[2]};
    detail::guard_tail(g, out.v, "step_full_compressible v");
    detail::guard_tail(g, out.rho.values(), "step_full_compressible rho");
    return out;
}

// ---- relativistic 1D -------------------------------------------------------------------------

/// Velocity m / sqrt(rho^2 + m^2/c^2).
inline Field relativistic_velocity(const Field& m, const Field& rho, double c) {
    return m / (rho.square() + m.square() / (c * c)).sqrt();
}

/// Initial momentum m = gamma rho v for a given velocity field (|v| < c).
inline Field relativistic_momentum(const Field& v, const Field& rho, double c) {
    detail::require((v.abs() < c).all(), "relativistic_momentum: |v| must stay below c");
    return rho * v / (1.0 - v.square() / (c * c)).sqrt();
}

/// integral m^2 / (s + rho), s = sqrt(rho^2 + m^2/c^2): the Hamiltonian minus its rest part c^2.
inline double relativistic_kinetic_energy(const RelState& s, double c) {
    const Grid& g = s.rho.grid();
    const Field& r = s.rho.values();
    const Field sq = (r.square() + s.m.square() / (c * c)).sqrt();
    return g.integrate(s.m.square() / (sq + r));
}

/// integral c^2 sqrt(rho^2 + m^2/c^2).
inline double relativistic_hamiltonian(const RelState& s, double c) {
    return c * c * s.rho.grid().integrate(s.rho.values()) + relativistic_kinetic_energy(s, c);
}

/// One RK4 step of m' = -(v m)_x - m v_x - rho (c^2 rho / s)_x, rho' = -(rho v)_x.
/// The pressure-like term is evaluated as -rho (m^2 / (s (s + rho)))_x to avoid cancellation.
inline RelState step_relativistic(const RelState& s, double c, double dt) {
    const Grid& g = s.rho.grid();
    detail::require(g.dim() == 1, "step_relativistic is 1D only");
    detail::require(std::isfinite(c) && c > 0.0, "step_relativistic: c must be positive");
    g.check(s.m, "momentum");
    detail::require_cfl(dt, g.min_spacing(), c, "step_relativistic");
    auto rhs = [&](const FieldSet& u) {
        const Field& m = u[0];
        const Field& r = u[1];
        detail::stage_density(g, r);
        const Field sq = (r.square() + m.square() / (c * c)).sqrt();
        const Field v = m / sq;
        const Field q = m.square() / (sq * (sq + r));
        const Field m_dot = -g.derivative(Field(v * m), 0) - m * g.derivative(v, 0) + r * g.derivative(q, 0);
        return FieldSet{g.dealias(m_dot), g.dealias(Field(-g.derivative(Field(r * v), 0)))};
    };
    const FieldSet next = rk4_step(FieldSet{s.m, s.rho.values()}, dt, rhs);
    RelState out{next[0], detail::stage_density(g, next[1])};
    detail::guard_tail(g, out.m, "step_relativistic m");
    detail::guard_tail(g, out.rho.values(), "step_relativistic rho");
    return out;
}

// ---- 2D incompressible Euler --------------------------------------------------------------------

/// v = (-d_y psi, d_x psi) with psi = inverse_laplacian(omega).
inline VectorField velocity_from_vorticity(const Grid& g, const Field& omega) {
    detail::require(g.dim() == 2, "velocity_from_vorticity needs a 2D grid");
    const Field psi = g.inverse_laplacian(Field(omega - g.integrate(omega)));
    return {-g.derivative(psi, 1), g.derivative(psi, 0)};
}

inline double euler2d_energy(const Vorticity2D& w) {
    return 0.5 * w.grid.integrate(norm2(velocity_from_vorticity(w.grid, w.omega)));
}

/// One RK4 step of omega' = -v.grad omega.
inline Vorticity2D step_euler2d(const Vorticity2D& w, double dt) {
    const Grid& g = w.grid;
    detail::require_cfl(dt, g.min_spacing(), detail::max_speed(velocity_from_vorticity(g, w.omega)),
                        "step_euler2d");
    auto rhs = [&](const FieldSet& u) {
        const Field& om = u[0];
        const VectorField v = velocity_from_vorticity(g, om);
        return FieldSet{g.dealias(Field(-(v[0] * g.derivative(om, 0) + v[1] * g.derivative(om, 1))))};
    };
    FieldSet next = rk4_step(FieldSet{w.omega}, dt, rhs);
    Field om = next[0] - g.integrate(next[0]);
    detail::guard_tail(g, om, "step_euler2d");
    return Vorticity2D(g, std::move(om));
}

// ---- gradient flows ----------------------------------------------------------------------------

/// Exact step of rho' = Laplacian(rho): the WO gradient flow of the entropy.
inline Density heat_flow_entropy(const Density& rho, double dt) {
    detail::require(std::isfinite(dt) && dt >= 0.0, "heat_flow_entropy: dt must be nonnegative");
    const Grid& g = rho.grid();
    const Field r = g.apply(rho.values(), [dt](const detail::SpectralLayout& l, std::size_t i) {
        return Complex(std::exp(-l.k2[static_cast<Eigen::Index>(i)] * dt));
    });
    return detail::stage_density(g, r);
}

/// RK4 step of the generic gradient flow rho' = -wo_gradient(U, rho).
inline Density step_gradient_flow_wo(const Density& rho, const Potential& U, double dt) {
    const Grid& g = rho.grid();
    auto rhs = [&](const FieldSet& u) {
        return FieldSet{Field(-wo_gradient(U, detail::stage_density(g, u[0])).values())};
    };
    const FieldSet next = rk4_step(FieldSet{rho.values()}, dt, rhs);
    return detail::stage_density(g, next[0]);
}

/// One step of theta' + |grad theta|^2 / 2 = gamma Laplacian(theta). Diffusion is
/// integrated exactly (integrating factor), the nonlinearity with RK4. theta is
/// returned without gauge fixing, since its constant part is meaningful here.
inline Field step_hj_viscous(const Grid& g, const Field& theta, double gamma, double dt) {
    g.check(theta, "theta");
    detail::require(std::isfinite(gamma) && gamma > 0.0, "step_hj_viscous: gamma must be positive");
    detail::require_cfl(dt, g.min_spacing(), detail::max_speed(g.gradient(theta)), "step_hj_viscous");
    auto propagate = [&](const FieldSet& x, double tau) {
        return FieldSet{g.apply(x[0], [&](const detail::SpectralLayout& l, std::size_t i) {
            return Complex(std::exp(-gamma * l.k2[static_cast<Eigen::Index>(i)] * tau));
        })};
    };
    auto nonlinear = [&](const FieldSet& x) { return FieldSet{g.dealias(Field(-0.5 * norm2(g.gradient(x[0]))))}; };
    const FieldSet next = lawson_rk4_step(FieldSet{theta}, dt, propagate, nonlinear);
    detail::guard_tail(g, next[0], "step_hj_viscous");
    return next[0];
}

} // namespace geohydro
