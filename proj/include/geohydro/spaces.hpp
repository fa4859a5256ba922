#pragma once

// The space of probability densities on a periodic grid and its two
// geometries: Fisher-Rao (isometric, up to a factor 4, to a piece of the L2
// sphere through the square-root map) and Wasserstein-Otto (evaluated through
// the weighted elliptic operator div(rho grad .)). Also the cotangent-lifted
// Sasaki-Fisher-Rao metric and the Fubini-Study metric on wave functions.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>

namespace geohydro {

inline constexpr double kPositivityFloor = 1e-8;
inline constexpr double kMassTolerance = 1e-10;

/// Strictly positive field with unit mass.
class Density {
  public:
    Density(Grid grid, Field values, double mass_tolerance = kMassTolerance)
        : grid_(std::move(grid)), rho_(std::move(values)) {
        grid_.check(rho_, "density");
        if (!rho_.allFinite()) throw PositivityLoss("density has non-finite values");
        const double lo = rho_.minCoeff();
        if (lo <= kPositivityFloor)
            throw PositivityLoss("density minimum " + std::to_string(lo) + " is below the positivity floor");
        const double mass = grid_.integrate(rho_);
        if (std::abs(mass - 1.0) > mass_tolerance)
            throw DomainError("density mass " + std::to_string(mass) + " differs from 1");
    }

    /// Rescales a positive field to unit mass.
    static Density normalized(const Grid& grid, const Field& values) {
        grid.check(values, "density");
        const double mass = grid.integrate(values);
        detail::require(mass > 0.0, "cannot normalize a field with non-positive mass");
        return Density(grid, values / mass);
    }
    static Density uniform(const Grid& grid) { return Density(grid, grid.constant(1.0)); }

    const Grid& grid() const { return grid_; }
    const Field& values() const { return rho_; }
    double min() const { return rho_.minCoeff(); }

  private:
    Grid grid_;
    Field rho_;
};

/// Zero-mean scalar field: a tangent vector to the density space.
class TangentDensity {
  public:
    TangentDensity(Grid grid, Field values) : grid_(std::move(grid)), v_(std::move(values)) {
        grid_.check(v_, "tangent density");
        const double m = grid_.integrate(v_);
        if (std::abs(m) > kMassTolerance)
            throw DomainError("tangent density has non-zero mean " + std::to_string(m));
    }
    static TangentDensity projected(const Grid& grid, const Field& values) {
        grid.check(values, "tangent density");
        return TangentDensity(grid, values - grid.integrate(values));
    }
    const Grid& grid() const { return grid_; }
    const Field& values() const { return v_; }

  private:
    Grid grid_;
    Field v_;
};

/// Cotangent potential with the Wasserstein-Otto gauge  integral(theta) = 0.
class ThetaWO {
  public:
    ThetaWO(const Grid& grid, const Field& values) : grid_(grid) {
        grid_.check(values, "theta");
        theta_ = values - grid_.integrate(values);
    }
    const Grid& grid() const { return grid_; }
    const Field& values() const { return theta_; }

  private:
    Grid grid_;
    Field theta_;
};

/// Cotangent potential with the Fisher-Rao gauge  integral(theta rho) = 0.
class ThetaFR {
  public:
    ThetaFR(const Field& values, const Density& rho) : grid_(rho.grid()) {
        grid_.check(values, "theta");
        theta_ = values - grid_.integrate(values * rho.values());
    }
    const Grid& grid() const { return grid_; }
    const Field& values() const { return theta_; }
    /// Re-gauges against a new density.
    ThetaFR regauged(const Density& rho) const { return ThetaFR(theta_, rho); }

  private:
    Grid grid_;
    Field theta_;
};

/// Unit-norm complex field, stored with its global phase fixed so that the value
/// at node 0 is real and nonnegative.
class WaveFunction {
  public:
    WaveFunction(Grid grid, CField values) : grid_(std::move(grid)), psi_(std::move(values)) {
        grid_.check(psi_, "wave function");
        const double nrm = grid_.norm(psi_);
        if (std::abs(nrm * nrm - 1.0) > kMassTolerance)
            throw DomainError("wave function norm^2 " + std::to_string(nrm * nrm) + " differs from 1");
        const double a0 = std::abs(psi_[0]);
        if (a0 > 0.0) psi_ *= std::conj(psi_[0]) / a0;
    }
    static WaveFunction normalized(const Grid& grid, const CField& values) {
        grid.check(values, "wave function");
        const double nrm = grid.norm(values);
        detail::require(nrm > 0.0, "cannot normalize the zero wave function");
        return WaveFunction(grid, values / nrm);
    }
    const Grid& grid() const { return grid_; }
    const CField& values() const { return psi_; }

  private:
    Grid grid_;
    CField psi_;
};

/// Anything exposing a variational derivative with respect to the density.
template <class U>
concept DensityFunctional = requires(const U& u, const Density& rho) {
    { u.value(rho) } -> std::convertible_to<double>;
    { u.vder(rho) } -> std::convertible_to<Field>;
};

namespace detail {

inline void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw DomainError("fields live on different grids");
}

inline double l2_inner(const Grid& g, const CField& a, const CField& b) {
    return g.integrate(Field((a * b.conjugate()).real()));
}

inline Complex inner(const Grid& g, const CField& a, const CField& b) {
    return g.integrate(CField(a * b.conjugate()));
}

} // namespace detail

// ---- Fisher-Rao ---------------------------------------------------------------

/// integral (a/rho)(b/rho) rho.
inline double fr_metric(const Density& rho, const TangentDensity& a, const TangentDensity& b) {
    detail::require_same_grid(rho.grid(), a.grid());
    detail::require_same_grid(rho.grid(), b.grid());
    return rho.grid().integrate(a.values() * b.values() / rho.values());
}

/// Fisher-Rao gradient: (dU/drho) rho - lambda rho with lambda making it zero-mean.
template <DensityFunctional U>
TangentDensity fr_gradient(const U& potential, const Density& rho) {
    const Grid& g = rho.grid();
    const Field d = potential.vder(rho);
    const double lambda = g.integrate(d * rho.values());
    return TangentDensity::projected(g, (d - lambda) * rho.values());
}

inline Field sqrt_map(const Density& rho) { return rho.values().sqrt(); }

inline Density sqrt_map_inverse(const Grid& grid, const Field& f) {
    grid.check(f, "sqrt-map preimage");
    if (f.minCoeff() <= 0.0) throw DomainError("sqrt_map_inverse: f must be strictly positive");
    const double n2 = grid.integrate(f.square());
    if (std::abs(n2 - 1.0) > kMassTolerance)
        throw DomainError("sqrt_map_inverse: f must have unit L2 norm, got " + std::to_string(n2));
    return Density(grid, f.square());
}

/// Differential of the square-root map: rho_dot / (2 sqrt(rho)).
inline Field sqrt_map_pushforward(const Density& rho, const TangentDensity& a) {
    return a.values() / (2.0 * rho.values().sqrt());
}

namespace detail {

inline double sphere_cosine(const Density& r0, const Density& r1) {
    require_same_grid(r0.grid(), r1.grid());
    const double c = r0.grid().integrate((r0.values() * r1.values()).sqrt());
    if (c > 1.0 + 1e-12 || c < -1e-12)
        throw DomainError("Bhattacharyya coefficient " + std::to_string(c) + " outside [0,1]");
    return std::clamp(c, 0.0, 1.0);
}

} // namespace detail

/// 2 arccos of the Bhattacharyya coefficient.
inline double fr_distance(const Density& r0, const Density& r1) {
    return 2.0 * std::acos(detail::sphere_cosine(r0, r1));
}

/// Point at parameter t on the Fisher-Rao geodesic (squared spherical interpolation).
inline Density fr_geodesic(const Density& r0, const Density& r1, double t) {
    detail::require(t >= 0.0 && t <= 1.0, "fr_geodesic: t must lie in [0,1]");
    const Grid& g = r0.grid();
    const double c = detail::sphere_cosine(r0, r1);
    const double omega = std::acos(c);
    const Field f0 = r0.values().sqrt();
    const Field f1 = r1.values().sqrt();
    if (omega < 1e-14) return r0;
    const Field f = (std::sin((1.0 - t) * omega) * f0 + std::sin(t * omega) * f1) / std::sin(omega);
    // Renormalize to absorb rounding in the slerp weights.
    return Density::normalized(g, f.square());
}

// ---- Wasserstein-Otto -----------------------------------------------------------

/// div(rho grad theta).
inline Field weighted_laplacian(const Density& rho, const Field& theta) {
    const Grid& g = rho.grid();
    VectorField grad = g.gradient(theta);
    for (auto& c : grad) c *= rho.values();
    return g.divergence(grad);
}

struct PoissonOptions {
    double tolerance = 1e-10;
    int max_iterations = 500;
    double residual_check = 1e-9;
};

/// Solves div(rho grad theta) = rhs for zero-mean theta by conjugate gradients,
/// preconditioned with the constant-coefficient spectral inverse Laplacian.
inline ThetaWO weighted_poisson_solve(const Density& rho, const Field& rhs, PoissonOptions opt = {}) {
    const Grid& g = rho.grid();
    g.check(rhs, "poisson right-hand side");
    const double m = g.integrate(rhs);
    if (std::abs(m) >= 1e-10)
        throw DomainError("weighted_poisson_solve: right-hand side has non-zero mean " + std::to_string(m));
    const Field b = -(rhs - m); // SPD form: -div(rho grad) theta = -rhs
    const double bnorm = g.norm(b);
    if (bnorm == 0.0) return ThetaWO(g, g.zeros());

    const double rho_bar = g.integrate(rho.values());
    auto apply_a = [&](const Field& x) -> Field { return -weighted_laplacian(rho, x); };
    auto precondition = [&](const Field& r) -> Field {
        return -g.inverse_laplacian(Field(r - g.integrate(r))) / rho_bar;
    };

    Field x = precondition(b);
    Field r = b - apply_a(x);
    Field z = precondition(r);
    Field p = z;
    double rz = g.integrate(r * z);
    int it = 0;
    for (; it < opt.max_iterations && g.norm(r) > opt.tolerance * bnorm; ++it) {
        const Field ap = apply_a(p);
        const double alpha = rz / g.integrate(p * ap);
        x += alpha * p;
        r -= alpha * ap;
        z = precondition(r);
        const double rz_new = g.integrate(r * z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    x -= g.integrate(x);
    const double residual = g.norm(Field(weighted_laplacian(rho, x) - (rhs - m))) / bnorm;
    if (residual > opt.residual_check)
        throw SolverError("weighted_poisson_solve: relative residual " + std::to_string(residual) +
                          " after " + std::to_string(it) + " iterations");
    return ThetaWO(g, x);
}

/// integral theta_a b where div(rho grad theta_a) = -a.
inline double wo_metric(const Density& rho, const TangentDensity& a, const TangentDensity& b) {
    detail::require_same_grid(rho.grid(), a.grid());
    detail::require_same_grid(rho.grid(), b.grid());
    const ThetaWO theta_a = weighted_poisson_solve(rho, -a.values());
    return rho.grid().integrate(theta_a.values() * b.values());
}

/// Wasserstein-Otto gradient: -div(rho grad dU/drho), made exactly zero-mean.
template <DensityFunctional U>
TangentDensity wo_gradient(const U& potential, const Density& rho) {
    const Field d = potential.vder(rho);
    return TangentDensity::projected(rho.grid(), -weighted_laplacian(rho, d));
}

// ---- Sasaki-Fisher-Rao and Fubini-Study -------------------------------------------

/// Cotangent lift of the Fisher-Rao metric:  integral ((a1 a2 / rho^2) + t1 t2) rho.
/// The theta directions must satisfy  integral(t_i rho) = 0.
inline double sasaki_fr_metric(const Density& rho, const Field& /*theta*/, const TangentDensity& rho_dot1,
                               const Field& theta_dot1, const TangentDensity& rho_dot2,
                               const Field& theta_dot2) {
    const Grid& g = rho.grid();
    g.check(theta_dot1, "theta_dot");
    g.check(theta_dot2, "theta_dot");
    for (const Field* t : {&theta_dot1, &theta_dot2}) {
        const double gauge = g.integrate(*t * rho.values());
        if (std::abs(gauge) > 1e-8)
            throw DomainError("sasaki_fr_metric: theta direction violates the gauge by " + std::to_string(gauge));
    }
    const Field& r = rho.values();
    return g.integrate((rho_dot1.values() * rho_dot2.values() / r.square() + theta_dot1 * theta_dot2) * r);
}

/// Real part of the polarized Fubini-Study form at psi.
inline double fubini_study_metric(const WaveFunction& psi, const CField& psi_dot1, const CField& psi_dot2) {
    const Grid& g = psi.grid();
    g.check(psi_dot1, "psi_dot");
    g.check(psi_dot2, "psi_dot");
    const CField& p = psi.values();
    const double pp = detail::l2_inner(g, p, p);
    const Complex a = detail::inner(g, psi_dot1, psi_dot2);
    const Complex b = detail::inner(g, psi_dot1, p) * detail::inner(g, p, psi_dot2);
    return (a / pp - b / (pp * pp)).real();
}

/// Fubini-Study distance between the rays through two nonzero wave functions.
inline double fubini_study_distance(const Grid& g, const CField& a, const CField& b) {
    const double c = std::abs(detail::inner(g, a, b)) / (g.norm(a) * g.norm(b));
    return std::acos(std::clamp(c, 0.0, 1.0));
}

} // namespace geohydro
