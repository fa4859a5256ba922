#include "geohydro/dynamics_wo.hpp"
#include "geohydro/quantum.hpp"
#include "support.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>

using namespace geohydro;
namespace ts = geohydro::test_support;

namespace {

CField plane_wave(const Grid& g, double k, double t_phase = 0.0) {
    const Field x = g.coordinate(0);
    CField out(g.ssize());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = std::polar(1.0, k * x[i] - t_phase);
    return out;
}

// Ground state of -(hbar^2/2m) d^2/dx^2 + V on the retained Fourier modes, by dense diagonalization.
CField ground_state(const Grid& g, double hbar, double m, double eps) {
    const int n = g.n(0), kmax = n / 2 - 1;
    const int dim = 2 * kmax + 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const int k = i - kmax;
        H(i, i) = hbar * hbar * k * k / (2.0 * m);
        if (i + 1 < dim) H(i, i + 1) = H(i + 1, i) = 0.5 * eps; // eps cos x couples k and k + 1
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd c = es.eigenvectors().col(0);
    const Field x = g.coordinate(0);
    CField psi = CField::Zero(g.ssize());
    for (int i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < psi.size(); ++j) psi[j] += c[i] * std::polar(1.0, (i - kmax) * x[j]);
    return psi / g.norm(psi);
}

// Hamilton-Jacobi density by characteristics for theta0 = eps sin x, rho0 = 1 + eps cos x:
// x = a + t eps cos a, rho(x) = rho0(a) / (1 - t eps sin a).
Field hj_density(const Field& x, double eps, double t) {
    Field out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double a = x[i];
        for (int it = 0; it < 100; ++it) {
            const double step = (a + t * eps * std::cos(a) - x[i]) / (1.0 - t * eps * std::sin(a));
            a -= step;
            if (std::abs(step) < 1e-15) break;
        }
        out[i] = (1.0 + eps * std::cos(a)) / (1.0 - t * eps * std::sin(a));
    }
    return out;
}

} // namespace

TEST(Schrodinger, PlaneWave) {
    const Grid g = Grid::line(64);
    CField psi = plane_wave(g, 1.0);
    SchrodingerParams p; // hbar = 2, m = 1
    for (int n = 0; n < 100; ++n) psi = step_schrodinger(g, psi, p, 0.01);
    EXPECT_LT(max_abs(CField(psi - plane_wave(g, 1.0, 1.0))), 1e-12);
}

TEST(Schrodinger, GroundStateIsStationary) {
    const Grid g = Grid::line(64);
    SchrodingerParams p;
    p.hbar = 1.0;
    p.V = 0.3 * g.coordinate(0).cos();
    const CField psi0 = ground_state(g, p.hbar, p.mass, 0.3);
    auto drift = [&](double dt) {
        CField psi = psi0;
        for (int n = 0; n < static_cast<int>(std::lround(1.0 / dt)); ++n) psi = step_schrodinger(g, psi, p, dt);
        return max_abs(Field(psi.abs() - psi0.abs()));
    };
    const double d1 = drift(0.02), d2 = drift(0.01);
    EXPECT_LT(d2, 1e-5);
    EXPECT_NEAR(std::log2(d1 / d2), 2.0, 0.3) << d1 << " " << d2;
}

TEST(Schrodinger, HamiltonianExamples) {
    const Grid g = Grid::line(64);
    SchrodingerParams p;
    EXPECT_EQ(schrodinger_hamiltonian(g, CField::Ones(g.ssize()), p), 0.0);
    EXPECT_NEAR(schrodinger_hamiltonian(g, plane_wave(g, 1.0), p), 2.0, 1e-13);
    p.mass = 4.0;
    EXPECT_NEAR(schrodinger_hamiltonian(g, plane_wave(g, 1.0), p), 0.5, 1e-13);
}

TEST(Schrodinger, HamiltonianEqualsFluidHamiltonian) {
    const Grid g = Grid::line(256);
    const Field x = g.coordinate(0);
    for (double hbar : {2.0, 1.0}) {
        SchrodingerParams p;
        p.hbar = hbar;
        p.V = 0.5 * (2.0 * x).sin();
        p.f = Nonlinearity::kerr(0.4);
        const Density rho(g, Field(1.0 + 0.3 * x.cos() + 0.1 * (2.0 * x).sin()));
        const Field theta = 0.4 * x.sin() + 0.2 * (3.0 * x).cos();
        const CField psi = madelung(rho, theta, hbar).values();
        const WOState s{rho, ThetaWO(g, theta)};
        EXPECT_NEAR(schrodinger_hamiltonian(g, psi, p), wo_hamiltonian(s, madelung_potential(g, p)), 1e-10);
    }
}

TEST(Schrodinger, HamiltonianDrift) {
    const Grid g = Grid::line(256);
    const Field x = g.coordinate(0);
    SchrodingerParams p;
    p.V = 0.5 * x.cos();
    p.f = Nonlinearity::kerr(0.5);
    CField psi = madelung(Density(g, Field(1.0 + 0.3 * (2.0 * x).cos())), Field(0.2 * x.sin())).values();
    const double h0 = schrodinger_hamiltonian(g, psi, p);
    double worst = 0.0;
    for (int n = 0; n < 4000; ++n) {
        psi = step_schrodinger(g, psi, p, 2.5e-4);
        worst = std::max(worst, std::abs(schrodinger_hamiltonian(g, psi, p) - h0));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Schrodinger, Unitarity) {
    ts::Rng rng(41);
    const Grid g = Grid::line(64);
    SchrodingerParams p;
    p.V = ts::smooth_field(g, rng);
    p.f = Nonlinearity::well();
    CField psi = madelung(ts::smooth_density(g, rng), ts::smooth_field(g, rng)).values();
    for (int n = 0; n < 10000; ++n) psi = step_schrodinger(g, psi, p, 1e-3);
    EXPECT_LT(std::abs(g.norm(psi) - 1.0), 1e-12);
}

TEST(Schrodinger, Errors) {
    const Grid g = Grid::line(16);
    const CField one = CField::Ones(g.ssize());
    SchrodingerParams p;
    EXPECT_THROW(step_schrodinger(g, one, p, 0.0), DomainError);
    p.mass = 0.0;
    EXPECT_THROW(step_schrodinger(g, one, p, 0.1), DomainError);
    p.mass = 1.0;
    p.hbar = -1.0;
    EXPECT_THROW(schrodinger_hamiltonian(g, one, p), DomainError);
    p.hbar = 1.0;
    p.V = Grid::line(32).zeros();
    EXPECT_THROW(step_schrodinger(g, one, p, 0.1), DomainError);
}

TEST(Schrodinger, CommutesWithFluidFlow) {
    // Madelung image of the Schrodinger flow against Newton's equations with the matching potential.
    const Grid g = Grid::line(256);
    const Field x = g.coordinate(0);
    SchrodingerParams p;
    p.f = Nonlinearity::kerr(0.5);
    const Density rho0(g, Field(1.0 + 0.1 * x.sin()));
    const Field theta0 = 0.1 * (2.0 * x).cos();
    const Potential U = madelung_potential(g, p);
    auto gap = [&](double dt) {
        CField psi = madelung(rho0, theta0, p.hbar).values();
        WOState s{rho0, ThetaWO(g, theta0)};
        for (int n = 0; n < static_cast<int>(std::lround(0.1 / dt)); ++n) {
            psi = step_schrodinger(g, psi, p, dt);
            s = step_newton_wo(s, U, dt);
        }
        const FluidPair fp = madelung_inverse(g, psi, p.hbar);
        return std::max(g.norm(Field(fp.rho.values() - s.rho.values())),
                        g.norm(Field(fp.theta.values() - s.theta.values())));
    };
    const double e1 = gap(2e-3), e2 = gap(1e-3);
    EXPECT_LT(e2, 1e-5);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.3) << e1 << " " << e2;
}

TEST(Schrodinger, ClassicalLimitOfDensity) {
    const Grid g = Grid::line(512);
    const Field x = g.coordinate(0);
    const double eps = 0.5, t_end = 0.5, dt = 0.01;
    const Field exact = hj_density(x, eps, t_end);
    std::vector<double> err;
    for (double hbar : {0.4, 0.2, 0.1}) {
        SchrodingerParams p;
        p.hbar = hbar;
        CField psi = madelung(Density(g, Field(1.0 + eps * x.cos())), Field(eps * x.sin()), hbar).values();
        for (int n = 0; n < static_cast<int>(std::lround(t_end / dt)); ++n) psi = step_schrodinger(g, psi, p, dt);
        err.push_back(max_abs(Field(psi.abs2() - exact)));
    }
    EXPECT_GT(std::log2(err[0] / err[1]), 1.5) << err[0] << " " << err[1];
    EXPECT_GT(std::log2(err[1] / err[2]), 1.5) << err[1] << " " << err[2];
}

TEST(Heat, Examples) {
    const Grid g = Grid::line(64);
    const Field x = g.coordinate(0);
    EXPECT_LT(max_abs(Field(step_heat(g, g.constant(1.0), 0.7, 1.0) - 1.0)), 1e-15);
    for (double gamma : {0.5, 2.0})
        EXPECT_LT(max_abs(Field(step_heat(g, Field(1.0 + 0.5 * x.cos()), gamma, 0.3) -
                                (1.0 + 0.5 * std::exp(-gamma * 0.3) * x.cos()))),
                  1e-15);
}

TEST(Heat, ForwardBackwardPair) {
    ts::Rng rng(42);
    const Grid g = Grid::line(64);
    const Field eta = 1.0 + 0.3 * ts::smooth_field(g, rng, 4);
    const double gamma = 0.5, t = 0.4;
    // The backward run amplifies roundoff in high modes by up to the clip factor 1e6.
    const Field back = step_heat(g, step_heat(g, eta, gamma, t), -gamma, t);
    EXPECT_LT(max_abs(Field(back - eta)), 1e-9);
    const Field there = step_heat(g, step_heat(g, eta, -gamma, t), gamma, t);
    EXPECT_LT(max_abs(Field(there - eta)), 1e-12);
    // A mode amplified beyond the clip is removed instead of blowing up.
    const Field high = (20.0 * g.coordinate(0)).cos();
    EXPECT_LT(max_abs(step_heat(g, high, -1.0, 0.1)), 1e-9);
    EXPECT_GT(max_abs(step_heat(g, high, -1.0, 0.01)), 50.0);
}

TEST(Velocity, MomentumMap) {
    const Grid g = Grid::square(64);
    const Field x = g.coordinate(0), y = g.coordinate(1);
    const TwoComponentWave c(g, CField::Constant(g.ssize(), Complex(0.6, 0.0)),
                             CField::Constant(g.ssize(), Complex(0.0, 0.8)));
    for (const auto& v : velocity_from_psi(c, 1.0)) EXPECT_LT(max_abs(v), 1e-15);

    const double hbar = 1.5;
    const Density rho(g, Field(1.0 + 0.2 * x.cos() * y.cos()));
    const Field theta = 0.5 * (x + y).sin() + 0.3 * (2.0 * x).cos();
    const VectorField v = velocity_from_psi(g, madelung(rho, theta, hbar).values(), hbar);
    const VectorField expect = g.gradient(theta);
    for (int a = 0; a < 2; ++a) EXPECT_LT(max_abs(Field(v[a] - expect[a])), 1e-12);

    const TwoComponentWave dead(g, CField::Zero(g.ssize()), CField::Zero(g.ssize()));
    EXPECT_THROW(velocity_from_psi(dead, 1.0), DomainError);
}

TEST(IncompressibleSchrodinger, FixedPointAndConstraints) {
    const Grid g = Grid::square(64);
    TwoComponentWave still(g, CField::Ones(g.ssize()), CField::Zero(g.ssize()));
    for (int n = 0; n < 5; ++n) still = step_ise(still, 1.0, 1e-2);
    EXPECT_LT(max_abs(CField(still.psi1 - 1.0)), 1e-14);
    EXPECT_LT(max_abs(still.psi2), 1e-15);

    const Field x = g.coordinate(0), y = g.coordinate(1);
    const Field r1 = 0.5 + 0.2 * x.sin() * y.cos();
    TwoComponentWave w = two_component_madelung(g, r1, Field(0.4 * (x + 2.0 * y).sin()), Field(1.0 - r1),
                                                Field(0.3 * (2.0 * x - y).cos()), 1.0);
    double norm_defect = 0.0, div = 0.0;
    for (int n = 0; n < 100; ++n) {
        w = step_ise(w, 1.0, 1e-3);
        norm_defect = std::max(norm_defect, max_abs(Field(w.pointwise_norm2() - 1.0)));
        div = std::max(div, g.norm(g.divergence(velocity_from_psi(w, 1.0))));
    }
    EXPECT_LT(norm_defect, 1e-12);
    EXPECT_LT(div, 1e-6);
    EXPECT_THROW(step_ise(TwoComponentWave(Grid::line(16), CField::Ones(16), CField::Zero(16)), 1.0, 1e-3),
                 DomainError);
}
