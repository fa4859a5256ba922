#pragma once

// Property batteries shared by the acceptance binary and `geohydro test-invariants`.
// Every check reports the measured quantity next to its tolerance; a battery never
// throws for a failed property, only for broken inputs.

#include "geohydro/casimirs.hpp"
#include "geohydro/dynamics_fr.hpp"
#include "geohydro/dynamics_wo.hpp"
#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"
#include "geohydro/potentials.hpp"
#include "geohydro/quantum.hpp"
#include "geohydro/spaces.hpp"
#include "geohydro/transforms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace geohydro {

struct InvariantCheck {
    std::string name;
    int criterion = 0;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

using InvariantReport = std::vector<InvariantCheck>;

namespace invariants {

/// measured <= tolerance
inline InvariantCheck at_most(std::string name, int criterion, double measured, double tolerance,
                              std::string note = {}) {
    const bool ok = std::isfinite(measured) && measured <= tolerance;
    return {std::move(name), criterion, measured, tolerance, ok, std::move(note)};
}

/// measured >= tolerance
inline InvariantCheck at_least(std::string name, int criterion, double measured, double tolerance,
                               std::string note = {}) {
    const bool ok = std::isfinite(measured) && measured >= tolerance;
    return {std::move(name), criterion, measured, tolerance, ok, std::move(note)};
}

using Rng = std::mt19937_64;

/// Zero-mean sum of a few random plane waves with integer wave numbers up to kmax.
inline Field random_field(const Grid& g, Rng& rng, int kmax = 4, int waves = 6) {
    std::uniform_int_distribution<int> kd(-kmax, kmax);
    std::uniform_real_distribution<double> ph(0.0, kTwoPi), amp(-1.0, 1.0);
    Field f = g.zeros();
    std::array<Field, 3> x;
    for (int a = 0; a < g.dim(); ++a) x[static_cast<std::size_t>(a)] = g.coordinate(a) * (kTwoPi / g.length(a));
    for (int w = 0; w < waves; ++w) {
        std::array<int, 3> k{0, 0, 0};
        double k2 = 0.0;
        while (k2 == 0.0) {
            k2 = 0.0;
            for (int a = 0; a < g.dim(); ++a) {
                k[static_cast<std::size_t>(a)] = kd(rng);
                k2 += k[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(a)];
            }
        }
        Field arg = Field::Constant(g.ssize(), ph(rng));
        for (int a = 0; a < g.dim(); ++a) arg += k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        f += amp(rng) / std::sqrt(k2) * arg.cos();
    }
    return f;
}

/// Smooth density with relative oscillation `depth`.
inline Density random_density(const Grid& g, Rng& rng, int kmax = 4, double depth = 0.5) {
    const Field f = random_field(g, rng, kmax);
    return Density::normalized(g, Field(1.0 + depth * f / max_abs(f)));
}

inline VectorField random_vector_field(const Grid& g, Rng& rng, int kmax = 3) {
    VectorField v;
    for (int a = 0; a < g.dim(); ++a) v.push_back(random_field(g, rng, kmax));
    return v;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline std::string sci_list(std::initializer_list<double> v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : ", ") + sci(x);
    return out;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---- 1: Madelung transform is symplectic ---------------------------------------------------------

inline InvariantReport madelung_symplectic() {
    const auto t0 = std::chrono::steady_clock::now();
    const Grid g = Grid::line(128);
    Rng rng(101);
    double worst = 0.0;
    for (double hbar : {0.5, 1.0, 2.0}) {
        for (int trial = 0; trial < 100; ++trial) {
            const Density rho = random_density(g, rng, 5);
            const Field theta = 2.0 * random_field(g, rng, 5);
            const Field rd1 = TangentDensity::projected(g, random_field(g, rng, 6)).values();
            const Field rd2 = TangentDensity::projected(g, random_field(g, rng, 6)).values();
            const Field td1 = random_field(g, rng, 6) + 0.3;
            const Field td2 = random_field(g, rng, 6) - 0.7;
            const double can = canonical_symplectic(g, rd1, td1, rd2, td2);
            const CField p1 = madelung_pushforward(rho, theta, rd1, td1, hbar);
            const CField p2 = madelung_pushforward(rho, theta, rd2, td2, hbar);
            const double pc = projective_symplectic(g, p1, p2, hbar);
            const double scale = g.norm(td1) * g.norm(rd2) + g.norm(td2) * g.norm(rd1);
            worst = std::max(worst, std::abs(pc - can) / scale);
        }
    }
    return {at_most("madelung pullback of the projective form equals the canonical form", 1, worst, 1e-10,
                    "300 trials, hbar in {0.5, 1, 2}, N = 128"),
            at_most("madelung symplectic battery runtime [s]", 1, seconds_since(t0), 5.0)};
}

// ---- 2: factor-4 isometries -------------------------------------------------------------------------

inline InvariantReport factor_four_isometries() {
    const Grid g = Grid::line(128);
    Rng rng(202);
    double worst_sqrt = 0.0, worst_sasaki = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Density rho = random_density(g, rng, 5);
        const TangentDensity a = TangentDensity::projected(g, random_field(g, rng, 6));
        const TangentDensity b = TangentDensity::projected(g, random_field(g, rng, 6));
        const double fr = fr_metric(rho, a, b);
        const double sphere =
            g.integrate(Field(sqrt_map_pushforward(rho, a) * sqrt_map_pushforward(rho, b)));
        const double scale = std::sqrt(fr_metric(rho, a, a) * fr_metric(rho, b, b));
        worst_sqrt = std::max(worst_sqrt, std::abs(fr - 4.0 * sphere) / scale);
    }
    for (int trial = 0; trial < 100; ++trial) {
        const Density rho = random_density(g, rng, 5);
        const Field theta = ThetaFR(random_field(g, rng, 5), rho).values();
        const TangentDensity r1 = TangentDensity::projected(g, random_field(g, rng, 6));
        const TangentDensity r2 = TangentDensity::projected(g, random_field(g, rng, 6));
        const Field t1 = ThetaFR(random_field(g, rng, 6), rho).values();
        const Field t2 = ThetaFR(random_field(g, rng, 6), rho).values();
        const double s12 = sasaki_fr_metric(rho, theta, r1, t1, r2, t2);
        const double s11 = sasaki_fr_metric(rho, theta, r1, t1, r1, t1);
        const double s22 = sasaki_fr_metric(rho, theta, r2, t2, r2, t2);
        const WaveFunction psi = madelung(rho, theta, 2.0);
        const CField p1 = madelung_pushforward(rho, theta, r1.values(), t1, 2.0);
        const CField p2 = madelung_pushforward(rho, theta, r2.values(), t2, 2.0);
        const double fs = fubini_study_metric(psi, p1, p2);
        worst_sasaki = std::max(worst_sasaki, std::abs(s12 - 4.0 * fs) / std::sqrt(s11 * s22));
    }
    return {at_most("fisher-rao metric is 4x the sphere metric under the square-root map", 2, worst_sqrt, 1e-9,
                    "100 trials"),
            at_most("sasaki-fisher-rao metric is 4x fubini-study under madelung at hbar = 2", 2, worst_sasaki, 1e-9,
                    "100 trials")};
}

// ---- 3: Schrodinger vs fluid ------------------------------------------------------------------------------

/// WKB catalog profile: rho = 1 + eps cos(kx), theta = eps sin(kx) along axis 0.
inline std::pair<Density, Field> wkb_profile(const Grid& g, double eps, int k) {
    const Field x = g.coordinate(0) * (kTwoPi / g.length(0));
    return {Density::normalized(g, Field(1.0 + eps * (k * x).cos())), Field(eps * (k * x).sin())};
}

inline double schrodinger_fluid_discrepancy(double dt) {
    const Grid g = Grid::line(256);
    const double hbar = 2.0, t_end = 0.1;
    const auto [rho0, theta0] = wkb_profile(g, 0.05, 1);
    SchrodingerParams p;
    p.hbar = hbar;
    p.V = g.coordinate(0).cos();
    const Potential U = madelung_potential(g, p);
    CField psi = madelung(rho0, theta0, hbar).values();
    WOState s{rho0, ThetaWO(g, theta0)};
    const int steps = static_cast<int>(std::lround(t_end / dt));
    for (int n = 0; n < steps; ++n) {
        psi = step_schrodinger(g, psi, p, dt);
        s = step_newton_wo(s, U, dt);
    }
    return g.norm(Field(psi.abs2() - s.rho.values()));
}

inline InvariantReport schrodinger_commutation() {
    const double e1 = schrodinger_fluid_discrepancy(1e-3);
    const double e2 = schrodinger_fluid_discrepancy(5e-4);
    const double e3 = schrodinger_fluid_discrepancy(2.5e-4);
    const std::string errs = "errors " + sci_list({e1, e2, e3});
    return {at_least("schrodinger/fluid density discrepancy reduction, dt 1e-3 -> 5e-4", 3, e1 / e2, 3.5, errs),
            at_least("schrodinger/fluid density discrepancy reduction, dt 5e-4 -> 2.5e-4", 3, e2 / e3, 3.5, errs),
            at_most("schrodinger/fluid L2 density discrepancy at dt = 2.5e-4", 3, e3, 1e-5)};
}

// ---- 4: Hopf-Cole ------------------------------------------------------------------------------------------

inline InvariantReport hopf_cole_linearization() {
    const Grid g = Grid::line(256);
    const double gamma = 1.0, dt = 1e-3, t_end = 1.0;
    const Field x = g.coordinate(0);
    auto exact = [&](double t) { return Field(-2.0 * gamma * (1.0 + 0.5 * std::exp(-gamma * t) * x.cos()).log()); };
    Field theta = exact(0.0);
    const int steps = static_cast<int>(std::lround(t_end / dt));
    for (int n = 0; n < steps; ++n) theta = step_hj_viscous(g, theta, gamma, dt);
    return {at_most("viscous hamilton-jacobi vs exact heat solution, L-inf at t = 1", 4,
                    max_abs(Field(theta - exact(t_end))), 1e-7)};
}

// ---- 5: Fisher-Rao geodesics are great circles ----------------------------------------------------------

inline InvariantReport fisher_rao_geodesic() {
    const Grid g = Grid::line(128);
    const Field x = g.coordinate(0);
    const Density rho0 = Density::normalized(g, Field(1.0 + 0.3 * x.cos() + 0.2 * (2.0 * x).sin()));
    Field th = ThetaFR(Field(x.sin() + 0.5 * (3.0 * x).cos()), rho0).values();
    th /= std::sqrt(g.integrate(Field(th.square() * rho0.values())));
    const double dt = 1e-4, t_end = 0.3;
    const int steps = static_cast<int>(std::lround(t_end / dt));

    FRState s{rho0, ThetaFR(th, rho0)};
    static const Potential zero = Potential::zero();
    FieldSet raw{rho0.values(), th};
    for (int n = 0; n < steps; ++n) {
        s = step_newton_fr(s, zero, dt);
        raw = rk4_step(raw, dt, [&](const FieldSet& u) { return newton_fr_rhs(g, zero, u); });
    }
    // Sphere speed is half the Fisher-Rao speed.
    const Field f0 = rho0.values().sqrt();
    const Field fd0 = 0.5 * th * f0;
    const Field f = std::cos(0.5 * t_end) * f0 + 2.0 * std::sin(0.5 * t_end) * fd0;
    const double err = max_abs(Field(s.rho.values() - f.square()));
    const double mass = std::abs(g.integrate(raw[0]) - 1.0);
    const double gauge = std::abs(g.integrate(Field(raw[0] * raw[1])));
    return {at_most("fisher-rao newton (U = 0) vs great circle, L-inf density at t = 0.3", 5, err, 1e-7),
            at_most("fisher-rao newton mass drift", 5, mass, 1e-9),
            at_most("fisher-rao newton gauge drift", 5, gauge, 1e-9)};
}

// ---- 6: Neumann problem ---------------------------------------------------------------------------------------

inline InvariantReport neumann_problem() {
    InvariantReport out;
    {
        const Grid g = Grid::line(64);
        const Field x = g.coordinate(0);
        const double r2 = std::sqrt(2.0);
        auto f_exact = [&](double t) { return Field(r2 * (std::cos(t) * x.cos() + std::sin(t) * x.sin())); };
        auto fd_exact = [&](double t) { return Field(r2 * (-std::sin(t) * x.cos() + std::cos(t) * x.sin())); };
        NeumannState s(g, f_exact(0.0), fd_exact(0.0));
        const double dt = 1e-4;
        const int steps = 62832;
        double lam = std::abs(neumann_multiplier(g, s.f, s.f_dot));
        for (int n = 0; n < steps; ++n) {
            s = step_neumann(s, dt);
            lam = std::max(lam, std::abs(neumann_multiplier(g, s.f, s.f_dot)));
        }
        out.push_back(at_most("neumann quasi-stationary solution over one period, L-inf", 6,
                              max_abs(Field(s.f - f_exact(steps * dt))), 1e-8));
        out.push_back(at_most("neumann multiplier along the quasi-stationary solution", 6, lam, 1e-9));
    }
    {
        const Grid g = Grid::line(64);
        const Field x = g.coordinate(0);
        Field f0 = 1.0 + 0.2 * x.cos() + 0.1 * (2.0 * x).sin();
        f0 /= g.norm(f0);
        Field fd0 = 0.3 * x.sin() + 0.2 * (2.0 * x).cos();
        fd0 -= g.integrate(Field(f0 * fd0)) * f0;
        NeumannState nm(g, f0, fd0);
        const Density rho0(g, f0.square(), 1e-9);
        FRState fr{rho0, ThetaFR(Field(2.0 * fd0 / f0), rho0)};
        const Potential U = Potential::fisher_info(1.0);
        const double dt = 1e-4;
        for (int n = 0; n < 10000; ++n) {
            nm = step_neumann(nm, dt);
            fr = step_newton_fr(fr, U, dt);
        }
        out.push_back(at_most("fisher-information newton flow vs neumann flow through sqrt(rho), t = 1", 6,
                              max_abs(Field(fr.rho.values().sqrt() - nm.f)), 1e-6));
    }
    return out;
}

// ---- 7: gradient solutions stay gradient ----------------------------------------------------------------------

inline InvariantReport gradient_invariance() {
    const Grid g = Grid::square(64);
    const Field x = g.coordinate(0), y = g.coordinate(1);
    const Density rho0(g, Field(1.0 + 0.1 * x.cos() * y.cos()));
    const Field theta0 = 0.2 * (x.sin() + (2.0 * y).cos() + 0.5 * (x + y).sin());
    const Potential U = Potential::barotropic(StateFunction::shallow());
    EulerianState e = make_eulerian_state(g.gradient(theta0), rho0);
    WOState w{rho0, ThetaWO(g, theta0)};
    const double dt = 1e-3;
    double curl = g.norm(g.curl2d(e.v));
    for (int n = 0; n < 100; ++n) {
        e = step_eulerian(e, U, dt);
        w = step_newton_wo(w, U, dt);
        curl = std::max(curl, g.norm(g.curl2d(e.v)));
    }
    const VectorField vw = g.gradient(w.theta.values());
    const double dv = std::max(max_abs(Field(e.v[0] - vw[0])), max_abs(Field(e.v[1] - vw[1])));
    const double dr = max_abs(Field(e.rho.values() - w.rho.values()));
    return {at_most("shallow-water eulerian run keeps ||curl v||", 7, curl, 1e-8),
            at_most("eulerian vs (rho, theta) run, velocity L-inf at t = 0.1", 7, dv, 1e-7),
            at_most("eulerian vs (rho, theta) run, density L-inf at t = 0.1", 7, dr, 1e-7)};
}

// ---- 8: Casimirs along the dynamics ----------------------------------------------------------------------------

inline InvariantReport casimir_conservation() {
    InvariantReport out;
    {
        const Grid g = Grid::square(128);
        const Field x = g.coordinate(0), y = g.coordinate(1);
        Vorticity2D w(g, Field(x.cos() + y.cos() + 0.6 * (x + y).cos()));
        const double e2 = enstrophy_family(g, w.omega, CasimirIntegrand::square);
        const double e3 = enstrophy_family(g, w.omega, CasimirIntegrand::cube);
        double d2 = 0.0, d3 = 0.0;
        const double dt = 2.5e-3;
        for (int n = 0; n < 400; ++n) {
            w = step_euler2d(w, dt);
            d2 = std::max(d2, rel(enstrophy_family(g, w.omega, CasimirIntegrand::square), e2));
            d3 = std::max(d3, rel(enstrophy_family(g, w.omega, CasimirIntegrand::cube), e3));
        }
        out.push_back(at_most("2D euler relative drift of integral omega^2 on [0, 1]", 8, d2, 1e-6));
        out.push_back(at_most("2D euler relative drift of integral omega^3 on [0, 1]", 8, d3, 1e-6));
    }
    {
        const Grid g = Grid::square(64);
        const Field x = g.coordinate(0), y = g.coordinate(1);
        const Density rho0(g, Field(1.0 + 0.1 * (x + y).cos() + 0.05 * (2.0 * x).sin()));
        VectorField v{Field(0.2 * y.sin() + 0.05 * x.cos()), Field(0.2 * x.sin() - 0.1 * (x + 2.0 * y).cos())};
        EulerianState e = make_eulerian_state(v, rho0);
        const Potential U = Potential::barotropic(StateFunction::shallow());
        auto pv = [&](const EulerianState& s) {
            return enstrophy_family(g, g.curl2d(s.v), s.rho.values(), CasimirIntegrand::square);
        };
        const double i0 = pv(e);
        double drift = 0.0;
        const double dt = 1e-3;
        for (int n = 0; n < 200; ++n) {
            e = step_eulerian(e, U, dt);
            drift = std::max(drift, rel(pv(e), i0));
        }
        out.push_back(at_most("shallow-water relative drift of integral (omega/rho)^2 rho on [0, 0.2]", 8, drift,
                              1e-6));
    }
    return out;
}

// ---- 9: coadjoint invariance ----------------------------------------------------------------------------------

inline ShearFlow random_shear(Rng& rng, int dim) {
    std::uniform_int_distribution<int> ax(0, dim - 1), kk(1, 3);
    std::uniform_real_distribution<double> a(0.3, 1.0), ph(0.0, kTwoPi);
    ShearFlow s;
    s.axis = ax(rng);
    do s.across = ax(rng);
    while (s.across == s.axis);
    s.amplitude = a(rng);
    s.k = kk(rng);
    s.phase = ph(rng);
    return s;
}

/// ABC field with A = B = C = 1.
inline VectorField abc_field(const Grid& g, double A = 1.0, double B = 1.0, double C = 1.0) {
    const Field x = g.coordinate(0), y = g.coordinate(1), z = g.coordinate(2);
    return {Field(A * z.sin() + C * y.cos()), Field(B * x.sin() + A * z.cos()), Field(C * y.sin() + B * x.cos())};
}

inline InvariantReport coadjoint_invariance() {
    const auto t0 = std::chrono::steady_clock::now();
    InvariantReport out;
    Rng rng(909);
    const int trials = 20;
    {
        // Compressible 2D: I_h = integral h(d alpha / varrho) varrho.
        const Grid g = Grid::square(128);
        MHDSnapshot s{g, random_vector_field(g, rng, 3), random_density(g, rng, 3, 0.4).values(), {}};
        for (CasimirIntegrand h : {CasimirIntegrand::square, CasimirIntegrand::cube, CasimirIntegrand::quartic,
                                   CasimirIntegrand::abs}) {
            auto I = [&](const MHDSnapshot& m) { return enstrophy_family(g, g.curl2d(m.alpha), m.varrho, h); };
            const double i0 = I(s);
            double worst = 0.0, worst_exact = 0.0;
            for (int t = 0; t < trials; ++t) {
                const Field f = random_field(g, rng, 4);
                MHDSnapshot p = coadjoint_perturb(s, random_shear(rng, 2), &f, 0.25);
                p = coadjoint_perturb(p, random_shear(rng, 2), nullptr, 0.25);
                worst = std::max(worst, rel(I(p), i0));
                worst_exact = std::max(worst_exact, rel(I(coadjoint_perturb(s, ShearFlow{}, &f, 0.0)), i0));
            }
            const std::string nm = std::string("I_h, h = ") + integrand_name(h);
            out.push_back(at_most(nm + ", random area-preserving pullbacks + df", 9, worst, 1e-6, "N = 128"));
            out.push_back(at_most(nm + ", exact-form shifts", 9, worst_exact, 1e-8));
        }
    }
    {
        // 3D compressible MHD dual.
        const Grid g = Grid::cube(64);
        VectorField P = abc_field(g);
        const VectorField R = random_vector_field(g, rng, 2);
        for (std::size_t a = 0; a < 3; ++a) P[a] += 0.3 * R[a];
        const VectorField B = g.curl(P);
        VectorField alpha = random_vector_field(g, rng, 2);
        for (std::size_t a = 0; a < 3; ++a) alpha[a] += B[a];
        MHDSnapshot s{g, alpha, random_density(g, rng, 2, 0.4).values(), B};
        const Density rho_s(g, s.varrho, 1e-9);
        auto mag = [&](const MHDSnapshot& m) { return magnetic_helicity(g, m.B); };
        auto cross = [&](const MHDSnapshot& m) { return cross_helicity(g, m.alpha, m.B); };
        auto gcross = [&](const MHDSnapshot& m) {
            return gen_cross_helicity(g, m.alpha, Density(g, m.varrho, 1e-8), m.B);
        };
        auto hel = [&](const MHDSnapshot& m) { return helicity(g, m.alpha); };
        const double m0 = mag(s), c0 = cross(s), gc0 = gcross(s), h0 = hel(s);
        double wm = 0, wc = 0, wg = 0, wh = 0, ec = 0, eg = 0, eh = 0;
        for (int t = 0; t < trials; ++t) {
            const Field f = random_field(g, rng, 3);
            const VectorField Q = random_vector_field(g, rng, 2);
            MHDSnapshot p = coadjoint_perturb(s, random_shear(rng, 3), &f, 0.2, &Q);
            p = coadjoint_perturb(p, random_shear(rng, 3), nullptr, 0.2);
            wm = std::max(wm, rel(mag(p), m0));
            wc = std::max(wc, rel(cross(p), c0));
            wg = std::max(wg, rel(gcross(p), gc0));
            MHDSnapshot q = coadjoint_perturb(s, random_shear(rng, 3), &f, 0.2);
            wh = std::max(wh, rel(hel(q), h0));
            const MHDSnapshot e = coadjoint_perturb(s, ShearFlow{}, &f, 0.0, &Q);
            ec = std::max(ec, rel(cross(e), c0));
            eg = std::max(eg, rel(gcross(e), gc0));
            eh = std::max(eh, rel(hel(coadjoint_perturb(s, ShearFlow{}, &f, 0.0)), h0));
        }
        out.push_back(at_most("magnetic helicity, random volume-preserving pullbacks", 9, wm, 1e-6, "N = 64^3"));
        out.push_back(at_most("cross-helicity, pullbacks + i_u beta + df", 9, wc, 1e-6));
        out.push_back(at_most("generalized cross-helicity, pullbacks + i_u beta + df", 9, wg, 1e-6));
        out.push_back(at_most("helicity of alpha, pullbacks + df", 9, wh, 1e-6));
        out.push_back(at_most("cross-helicity, exact shifts i_u beta + df", 9, ec, 1e-8));
        out.push_back(at_most("generalized cross-helicity, exact shifts i_u beta + df", 9, eg, 1e-8));
        out.push_back(at_most("helicity of alpha, exact-form shifts", 9, eh, 1e-8));
    }
    {
        const Grid g = Grid::cube(64);
        const VectorField v = abc_field(g);
        out.push_back(at_most("ABC helicity |H - 3|", 9, std::abs(helicity(g, v) - 3.0), 1e-8, "N = 64^3"));
        out.push_back(at_most("ABC magnetic helicity |H_m - 3|", 9, std::abs(magnetic_helicity(g, v) - 3.0), 1e-8,
                              "N = 64^3"));
    }
    out.push_back(at_most("casimir battery runtime [s]", 9, seconds_since(t0), 30.0));
    return out;
}

// ---- 10: relativistic classical limit ------------------------------------------------------------------------

inline double relativistic_gap(double c) {
    const Grid g = Grid::line(64);
    const Field x = g.coordinate(0);
    const Density rho0 = Density::uniform(g);
    const Field v0 = 0.5 * x.sin();
    const double t_end = 0.1;
    const double dt_max = std::min(1e-3, 0.8 * cfl_limit(g, c));
    const int steps = static_cast<int>(std::ceil(t_end / dt_max));
    const double dt = t_end / steps;
    RelState r{relativistic_momentum(v0, rho0.values(), c), rho0};
    EulerianState e = make_eulerian_state({v0}, rho0);
    static const Potential zero = Potential::zero();
    for (int n = 0; n < steps; ++n) {
        r = step_relativistic(r, c, dt);
        e = step_eulerian(e, zero, dt);
    }
    // Distance of the (m, rho) states. Pressureless dust keeps its velocity in both
    // models, so the separation sits in m = gamma rho v.
    const Field dm = r.m - e.rho.values() * e.v[0];
    const Field dr = r.rho.values() - e.rho.values();
    return std::sqrt(g.integrate(Field(dm.square() + dr.square())));
}

inline InvariantReport relativistic_limit() {
    const double cs[3] = {10.0, 100.0, 1000.0};
    double d[3];
    for (int i = 0; i < 3; ++i) d[i] = relativistic_gap(cs[i]);
    InvariantReport out;
    const std::string gaps = "gaps " + sci_list({d[0], d[1], d[2]});
    for (int i = 1; i < 3; ++i) {
        // d c^2 constant within 20%
        const double ratio = d[i] * cs[i] * cs[i] / (d[i - 1] * cs[i - 1] * cs[i - 1]);
        out.push_back(at_most("relativistic-classical gap times c^2, deviation between c = " +
                                  std::to_string(static_cast<int>(cs[i - 1])) + " and " +
                                  std::to_string(static_cast<int>(cs[i])),
                              10, std::abs(ratio - 1.0), 0.2, gaps));
    }
    return out;
}

// ---- 11: classical limit of Schrodinger -----------------------------------------------------------------------

/// Hamilton-Jacobi solution with V = 0 by characteristics: x = a + t v0(a),
/// theta = theta0(a) + t v0(a)^2 / 2, for theta0 = eps sin x (pre-caustic: t eps < 1).
inline Field hamilton_jacobi_free(const Grid& g, double eps, double t) {
    const Field x = g.coordinate(0);
    Field out(g.ssize());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double a = x[i];
        for (int it = 0; it < 100; ++it) {
            const double r = a + t * eps * std::cos(a) - x[i];
            const double step = r / (1.0 - t * eps * std::sin(a));
            a -= step;
            if (std::abs(step) < 1e-15) break;
        }
        const double v = eps * std::cos(a);
        out[i] = eps * std::sin(a) + 0.5 * t * v * v;
    }
    return out;
}

inline double classical_gap(double hbar) {
    const Grid g = Grid::line(512);
    const double eps = 0.5, t_end = 0.5, dt = 0.01;
    const auto [rho0, theta0] = wkb_profile(g, eps, 1);
    SchrodingerParams p;
    p.hbar = hbar;
    CField psi = madelung(rho0, theta0, hbar).values();
    const int steps = static_cast<int>(std::lround(t_end / dt));
    for (int n = 0; n < steps; ++n) psi = step_schrodinger(g, psi, p, dt);
    const FluidPair fp = madelung_inverse(g, psi, hbar);
    const Field hj = ThetaWO(g, hamilton_jacobi_free(g, eps, t_end)).values();
    return max_abs(Field(fp.theta.values() - hj));
}

inline InvariantReport classical_limit() {
    const double hs[3] = {0.4, 0.2, 0.1};
    double e[3];
    for (int i = 0; i < 3; ++i) e[i] = classical_gap(hs[i]);
    const std::string errs = "errors " + sci_list({e[0], e[1], e[2]});
    return {at_least("classical-limit order, hbar 0.4 -> 0.2", 11, std::log2(e[0] / e[1]), 1.5, errs),
            at_least("classical-limit order, hbar 0.2 -> 0.1", 11, std::log2(e[1] / e[2]), 1.5, errs)};
}

// ---- 12: incompressible Schrodinger --------------------------------------------------------------------------

inline InvariantReport incompressible_schrodinger() {
    const Grid g = Grid::square(64);
    const Field x = g.coordinate(0), y = g.coordinate(1);
    const Field a = 0.7 + 0.3 * x.sin() * y.cos();
    TwoComponentWave w = two_component_madelung(g, Field(a.cos().square()), Field(0.5 * (x + y).sin()),
                                                Field(a.sin().square()), Field(0.3 * (2.0 * x).cos() - 0.2 * y.sin()),
                                                1.0);
    double unit = 0.0, div = 0.0;
    for (int n = 0; n < 200; ++n) {
        w = step_ise(w, 1.0, 1e-3);
        unit = std::max(unit, max_abs(Field(w.pointwise_norm2() - 1.0)));
        div = std::max(div, g.norm(g.divergence(velocity_from_psi(w, 1.0))));
    }
    return {at_most("incompressible schrodinger, max ||Psi|^2 - 1|", 12, unit, 1e-12),
            at_most("incompressible schrodinger, ||div v|| after projection", 12, div, 1e-6)};
}

// ---- 13: heat flow is the entropy gradient flow --------------------------------------------------------------

inline InvariantReport entropy_gradient_flow() {
    // log(rho) must be resolved for the spectral identity to hold at 1e-9.
    const Grid g = Grid::square(128);
    Rng rng(1313);
    const Potential H = Potential::entropy();
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Density rho = random_density(g, rng, 2, 0.5);
        worst = std::max(worst, max_abs(Field(wo_gradient(H, rho).values() + g.laplacian(rho.values()))));
    }
    Density rho = random_density(g, rng, 4, 0.8);
    double prev = H.value(rho), worst_increase = 0.0;
    for (int n = 0; n < 100; ++n) {
        rho = heat_flow_entropy(rho, 0.01);
        const double cur = H.value(rho);
        worst_increase = std::max(worst_increase, cur - prev);
        prev = cur;
    }
    return {at_most("wasserstein gradient of entropy + laplacian(rho), L-inf over 50 densities", 13, worst, 1e-9),
            at_most("largest entropy increase along the heat flow", 13, worst_increase, 0.0)};
}

// ---- 14: variational derivatives ---------------------------------------------------------------------------

struct NamedPotential {
    std::string name;
    Potential U;
};

inline std::vector<NamedPotential> potential_catalog(const Grid& g) {
    const Field x = g.coordinate(0);
    return {{"zero", Potential::zero()},
            {"linear", Potential::linear(Field(x.cos() + 0.3 * (2.0 * x).sin()))},
            {"quadratic", Potential::quadratic()},
            {"barotropic shallow", Potential::barotropic(StateFunction::shallow())},
            {"barotropic polytropic(1.4)", Potential::barotropic(StateFunction::polytropic(1.4))},
            {"barotropic constant(0.7)", Potential::barotropic(StateFunction::constant(0.7))},
            {"interaction kerr(0.8)", Potential::interaction(Nonlinearity::kerr(0.8))},
            {"interaction well", Potential::interaction(Nonlinearity::well())},
            {"gravity", Potential::gravity(0.5)},
            {"fisher information", Potential::fisher_info(1.0)},
            {"entropy", Potential::entropy()},
            {"madelung mix", Potential::fisher_info(0.25) + Potential::linear(Field(x.sin())) +
                                 Potential::interaction(Nonlinearity::kerr(-0.3))}};
}

/// Worst observed order of the central difference error over a halving sequence,
/// skipping pairs already at the roundoff floor. Returns +inf when every error is at the floor.
inline double variational_order(const Potential& U, const Density& rho, const Field& eta, double* floor_err) {
    const Grid& g = rho.grid();
    const double exact = g.integrate(Field(U.vder(rho) * eta));
    const double floor = 1e-10 * std::max(1.0, std::abs(exact));
    std::vector<double> errs;
    for (double eps = 1e-1; eps > 1e-3; eps *= 0.5) {
        const Density rp(g, Field(rho.values() + eps * eta));
        const Density rm(g, Field(rho.values() - eps * eta));
        errs.push_back(std::abs((U.value(rp) - U.value(rm)) / (2.0 * eps) - exact));
    }
    *floor_err = *std::max_element(errs.begin(), errs.end());
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < errs.size(); ++i) {
        if (errs[i] < floor || errs[i - 1] < 8.0 * floor) continue;
        worst = std::min(worst, std::log2(errs[i - 1] / errs[i]));
    }
    return worst;
}

inline InvariantReport variational_derivatives() {
    const Grid g = Grid::line(128);
    Rng rng(1414);
    InvariantReport out;
    for (const auto& [name, U] : potential_catalog(g)) {
        double worst = std::numeric_limits<double>::infinity(), largest = 0.0;
        for (int t = 0; t < 5; ++t) {
            const Density rho = random_density(g, rng, 4, 0.5);
            Field eta = TangentDensity::projected(g, random_field(g, rng, 4)).values();
            eta *= 0.2 / max_abs(eta);
            double e = 0.0;
            worst = std::min(worst, variational_order(U, rho, eta, &e));
            largest = std::max(largest, e);
        }
        const std::string note = std::isinf(worst) ? "central differences exact to roundoff"
                                                   : "largest error " + sci(largest);
        out.push_back(at_least("observed order of the variational-derivative test, " + name, 14,
                               std::isinf(worst) ? 2.0 : worst, 1.8, note));
    }
    return out;
}

// ---- registry ------------------------------------------------------------------------------------------------

struct Criterion {
    int id;
    const char* title;
    std::function<InvariantReport()> run;
};

inline const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {1, "madelung symplectomorphism", madelung_symplectic},
        {2, "factor-4 isometries", factor_four_isometries},
        {3, "schrodinger / fluid commutation", schrodinger_commutation},
        {4, "hopf-cole linearization", hopf_cole_linearization},
        {5, "fisher-rao geodesic exactness", fisher_rao_geodesic},
        {6, "neumann problem", neumann_problem},
        {7, "gradient invariance", gradient_invariance},
        {8, "casimir conservation", casimir_conservation},
        {9, "coadjoint invariance", coadjoint_invariance},
        {10, "relativistic classical limit", relativistic_limit},
        {11, "hbar -> 0 classical limit", classical_limit},
        {12, "incompressible schrodinger", incompressible_schrodinger},
        {13, "heat flow as entropy gradient flow", entropy_gradient_flow},
        {14, "variational derivatives", variational_derivatives},
    };
    return all;
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"madelung", "fisher_rao", "casimirs", "commutation", "limits", "all"};
    return names;
}

inline std::vector<int> suite_criteria(const std::string& suite) {
    if (suite == "madelung") return {1, 2};
    if (suite == "fisher_rao") return {5, 6};
    if (suite == "casimirs") return {8, 9};
    if (suite == "commutation") return {3, 4, 7, 12, 13, 14};
    if (suite == "limits") return {10, 11};
    if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    throw ConfigError("unknown invariant suite '" + suite + "'");
}

/// Runs one criterion; an exception inside the battery becomes a failed entry.
inline InvariantReport run_criterion(const Criterion& c) {
    try {
        return c.run();
    } catch (const std::exception& e) {
        return {{std::string(c.title) + " raised an error", c.id, std::numeric_limits<double>::quiet_NaN(), 0.0,
                 false, e.what()}};
    }
}

inline InvariantReport run_suite(const std::string& suite) {
    const std::vector<int> ids = suite_criteria(suite);
    InvariantReport out;
    for (const auto& c : criteria()) {
        if (std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
        InvariantReport r = run_criterion(c);
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

} // namespace invariants
} // namespace geohydro
