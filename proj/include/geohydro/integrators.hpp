#pragma once

// Explicit Runge-Kutta on lists of fields, plus the Lawson (integrating-factor)
// variant for systems with an exactly solvable linear part.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"

#include <initializer_list>
#include <vector>

namespace geohydro {

/// Ordered list of real fields with vector-space arithmetic.
struct FieldSet {
    std::vector<Field> f;

    FieldSet() = default;
    FieldSet(std::initializer_list<Field> init) : f(init) {}
    explicit FieldSet(std::vector<Field> v) : f(std::move(v)) {}

    std::size_t size() const { return f.size(); }
    Field& operator[](std::size_t i) { return f[i]; }
    const Field& operator[](std::size_t i) const { return f[i]; }

    FieldSet& operator+=(const FieldSet& o) {
        detail::require(o.f.size() == f.size(), "FieldSet size mismatch");
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += o.f[i];
        return *this;
    }
    friend FieldSet operator+(FieldSet a, const FieldSet& b) { return a += b; }
    friend FieldSet operator*(double s, FieldSet a) {
        for (auto& x : a.f) x *= s;
        return a;
    }
};

/// One classical RK4 step of u' = rhs(u).
template <class State, class Rhs>
State rk4_step(const State& u, double dt, Rhs&& rhs) {
    const State k1 = rhs(u);
    const State k2 = rhs(u + (0.5 * dt) * k1);
    const State k3 = rhs(u + (0.5 * dt) * k2);
    const State k4 = rhs(u + dt * k3);
    return u + (dt / 6.0) * (k1 + (2.0 * k2) + (2.0 * k3) + k4);
}

/// One Lawson RK4 step of u' = L u + N(u), where propagate(v, tau) applies exp(tau L)
/// and nonlinear(u) evaluates N(u).
template <class State, class Propagate, class Nonlinear>
State lawson_rk4_step(const State& u, double dt, Propagate&& propagate, Nonlinear&& nonlinear) {
    const double h = dt;
    const State a = nonlinear(u);
    const State b = nonlinear(propagate(u + (0.5 * h) * a, 0.5 * h));
    const State c = nonlinear(propagate(u, 0.5 * h) + (0.5 * h) * b);
    const State d = nonlinear(propagate(u, h) + h * propagate(c, 0.5 * h));
    return propagate(u, h) + (h / 6.0) * (propagate(a, h) + 2.0 * propagate(b + c, 0.5 * h) + d);
}

} // namespace geohydro
