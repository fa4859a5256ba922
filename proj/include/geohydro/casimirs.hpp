#pragma once

// Casimir functionals on field snapshots (helicity, the I_h family, magnetic
// and cross-helicity, generalized cross-helicity) and the coadjoint action of
// volume-preserving diffeomorphisms used to test their invariance.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"
#include "geohydro/spaces.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace geohydro {

/// Fixed catalog of integrands for the I_h family.
enum class CasimirIntegrand { square, cube, quartic, abs };

inline const char* integrand_name(CasimirIntegrand h) {
    switch (h) {
    case CasimirIntegrand::square: return "s2";
    case CasimirIntegrand::cube: return "s3";
    case CasimirIntegrand::quartic: return "s4";
    case CasimirIntegrand::abs: return "abs";
    }
    return "?";
}

inline CasimirIntegrand parse_integrand(const std::string& s) {
    if (s == "s2") return CasimirIntegrand::square;
    if (s == "s3") return CasimirIntegrand::cube;
    if (s == "s4") return CasimirIntegrand::quartic;
    if (s == "abs") return CasimirIntegrand::abs;
    throw ConfigError("unknown Casimir integrand '" + s + "'");
}

inline Field apply_integrand(CasimirIntegrand h, const Field& s) {
    switch (h) {
    case CasimirIntegrand::square: return s.square();
    case CasimirIntegrand::cube: return s.cube();
    case CasimirIntegrand::quartic: return s.square().square();
    case CasimirIntegrand::abs: return s.abs();
    }
    return {};
}

/// integral v . curl v on a 3D grid.
inline double helicity(const Grid& g, const VectorField& v) {
    detail::require(g.dim() == 3, "helicity needs a 3D grid");
    g.check(v, "velocity");
    return g.integrate(dot(v, g.curl(v)));
}

namespace detail {

/// Mean of |f| by the trapezoid rule on a band-limited refinement of f with about 2^20
/// nodes: |f| has kinks on the zero set, so quadrature on the coarse nodes alone is only
/// accurate to a few 1e-5. Fine grids are cached per coarse shape.
inline double refined_abs_mean(const Grid& g, const Field& f) {
    static std::mutex m;
    static std::vector<Grid> cache;
    std::array<int, 3> fine_n{1, 1, 1};
    const int target = g.dim() == 1 ? (1 << 20) : g.dim() == 2 ? 1024 : 128;
    for (int a = 0; a < g.dim(); ++a) fine_n[static_cast<std::size_t>(a)] = std::max(g.n(a), target);
    std::optional<Grid> fine;
    {
        std::lock_guard lock(m);
        for (const auto& fg : cache) {
            bool same = fg.dim() == g.dim();
            for (int a = 0; same && a < g.dim(); ++a)
                same = fg.n(a) == fine_n[static_cast<std::size_t>(a)] && fg.length(a) == g.length(a);
            if (same) fine = fg;
        }
        if (!fine) {
            std::array<double, 3> len{1.0, 1.0, 1.0};
            for (int a = 0; a < g.dim(); ++a) len[static_cast<std::size_t>(a)] = g.length(a);
            fine = Grid(g.dim(), fine_n, len);
            if (cache.size() >= 4) cache.erase(cache.begin());
            cache.push_back(*fine);
        }
    }
    if (fine->size() == g.size()) return g.integrate(f.abs());
    return fine->integrate(g.interpolate_to(*fine, f).abs());
}

} // namespace detail

/// integral h(omega / rho) rho. For h = |s| this equals integral |omega|, which is
/// evaluated on a band-limited refinement.
inline double enstrophy_family(const Grid& g, const Field& omega, const Field& rho, CasimirIntegrand h) {
    g.check(omega, "vorticity");
    g.check(rho, "density");
    detail::require(rho.minCoeff() > 0.0, "enstrophy_family: density must be positive");
    if (h == CasimirIntegrand::abs) return detail::refined_abs_mean(g, omega);
    return g.integrate(Field(apply_integrand(h, Field(omega / rho)) * rho));
}

inline double enstrophy_family(const Grid& g, const Field& omega, CasimirIntegrand h) {
    return enstrophy_family(g, omega, g.constant(1.0), h);
}

namespace detail {

inline void require_solenoidal(const Grid& g, const VectorField& B) {
    require(g.dim() == 3, "magnetic fields live on a 3D grid");
    g.check(B, "magnetic field");
    const double div = g.norm(g.divergence(B));
    if (div > 1e-8) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", div);
        throw DomainError(std::string("magnetic field is not solenoidal: ||div B|| = ") + buf);
    }
    for (int a = 0; a < 3; ++a) {
        const double m = g.integrate(B[static_cast<std::size_t>(a)]);
        if (std::abs(m) > 1e-10)
            throw DomainError("magnetic field has a nonzero mean mode; it has no periodic vector potential");
    }
}

} // namespace detail

/// Zero-mean periodic vector potential A with curl A = B and div A = 0.
inline VectorField vector_potential(const Grid& g, const VectorField& B) {
    detail::require_solenoidal(g, B);
    std::array<CField, 3> b;
    for (int a = 0; a < 3; ++a) b[static_cast<std::size_t>(a)] = g.forward(B[static_cast<std::size_t>(a)]);
    const auto& lay = g.real_layout();
    std::array<CField, 3> A{CField(b[0].size()), CField(b[0].size()), CField(b[0].size())};
    const Complex I(0.0, 1.0);
    for (std::size_t i = 0; i < lay.size; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double k2 = lay.k2[ii];
        if (k2 == 0.0) {
            for (auto& c : A) c[ii] = 0.0;
            continue;
        }
        const double kx = lay.nyquist[0][i] ? 0.0 : lay.k[0][ii];
        const double ky = lay.nyquist[1][i] ? 0.0 : lay.k[1][ii];
        const double kz = lay.nyquist[2][i] ? 0.0 : lay.k[2][ii];
        // A = i k x B / |k|^2
        A[0][ii] = I * (ky * b[2][ii] - kz * b[1][ii]) / k2;
        A[1][ii] = I * (kz * b[0][ii] - kx * b[2][ii]) / k2;
        A[2][ii] = I * (kx * b[1][ii] - ky * b[0][ii]) / k2;
    }
    return {g.backward(A[0]), g.backward(A[1]), g.backward(A[2])};
}

/// integral A . B with curl A = B.
inline double magnetic_helicity(const Grid& g, const VectorField& B) {
    return g.integrate(dot(vector_potential(g, B), B));
}

/// integral alpha(B).
inline double cross_helicity(const Grid& g, const VectorField& alpha, const VectorField& B) {
    detail::require_solenoidal(g, B);
    g.check(alpha, "alpha");
    return g.integrate(dot(alpha, B));
}

/// integral alpha(B / varrho) varrho: the contraction with the field B~ satisfying
/// i_{B~}(varrho mu) = beta.
inline double gen_cross_helicity(const Grid& g, const VectorField& alpha, const Density& varrho,
                                 const VectorField& B) {
    detail::require_solenoidal(g, B);
    g.check(alpha, "alpha");
    const Field& r = varrho.values();
    return g.integrate(Field(dot(alpha, scale(B, Field(1.0 / r))) * r));
}

// ---- coadjoint action ----------------------------------------------------------------------------

/// (alpha, varrho, B) for the compressible MHD / Hall-type dual; B is empty on 2D grids.
struct MHDSnapshot {
    Grid grid;
    VectorField alpha;
    Field varrho;
    VectorField B;
};

/// Exact shear flow w = a sin(k x_across + phase) e_axis, divergence-free for across != axis.
struct ShearFlow {
    int axis = 0;
    int across = 1;
    double amplitude = 0.0;
    int k = 1;
    double phase = 0.0;

    VectorField field(const Grid& g) const {
        VectorField w(static_cast<std::size_t>(g.dim()), g.zeros());
        w[static_cast<std::size_t>(axis)] = g.sample([&](double x, double y, double z) {
            const double c[3] = {x, y, z};
            return amplitude * std::sin(k * kTwoPi / g.length(across) * c[across] + phase);
        });
        return w;
    }
};

namespace detail {

inline void check_snapshot(const MHDSnapshot& s) {
    const Grid& g = s.grid;
    g.check(s.alpha, "alpha");
    g.check(s.varrho, "varrho");
    if (!s.B.empty()) g.check(s.B, "B");
    require(s.varrho.minCoeff() > 0.0, "varrho must be positive");
}

/// Adds df, and i_u beta with u = curl(P) / varrho (3D, B present), to alpha.
inline void add_alpha_shifts(MHDSnapshot& s, const Field* f, const VectorField* P) {
    const Grid& g = s.grid;
    if (f) {
        g.check(*f, "f");
        const VectorField df = g.gradient(*f);
        for (std::size_t i = 0; i < s.alpha.size(); ++i) s.alpha[i] += df[i];
    }
    if (P) {
        require(g.dim() == 3 && !s.B.empty(), "the i_u beta shift needs a 3D snapshot with B");
        g.check(*P, "P");
        const VectorField cp = g.curl(*P);
        const VectorField u = scale(cp, Field(1.0 / s.varrho));
        const VectorField& B = s.B;
        // i_u beta corresponds to B x u.
        s.alpha[0] += B[1] * u[2] - B[2] * u[1];
        s.alpha[1] += B[2] * u[0] - B[0] * u[2];
        s.alpha[2] += B[0] * u[1] - B[1] * u[0];
    }
}

} // namespace detail

/// Pull-back of the snapshot by the time-dt flow of a shear, evaluated exactly with
/// line shifts: alpha' = Dphi^T alpha o phi, varrho' = varrho o phi, B' = Dphi^-1 B o phi.
/// Afterwards adds df (if given) and i_u beta for u = curl(P)/varrho (if given).
inline MHDSnapshot coadjoint_perturb(const MHDSnapshot& s, const ShearFlow& w, const Field* f, double dt,
                                     const VectorField* P = nullptr) {
    detail::check_snapshot(s);
    const Grid& g = s.grid;
    detail::require(w.axis != w.across && w.axis >= 0 && w.across >= 0 && w.axis < g.dim() && w.across < g.dim(),
                    "shear axis and transverse axis must be distinct grid axes");
    const double kk = w.k * kTwoPi / g.length(w.across);
    const Field xa = g.coordinate(w.across);
    const Field shift = dt * w.amplitude * (kk * xa + w.phase).sin();
    const Field dshift = dt * w.amplitude * kk * (kk * xa + w.phase).cos();
    auto pull = [&](const Field& x) { return g.shift_along(x, w.axis, shift); };
    const auto i = static_cast<std::size_t>(w.axis);
    const auto j = static_cast<std::size_t>(w.across);

    MHDSnapshot out{g, {}, pull(s.varrho), {}};
    for (const auto& c : s.alpha) out.alpha.push_back(pull(c));
    out.alpha[j] += dshift * out.alpha[i];
    if (!s.B.empty()) {
        for (const auto& c : s.B) out.B.push_back(pull(c));
        out.B[i] -= dshift * out.B[j];
    }
    detail::add_alpha_shifts(out, f, P);
    return out;
}

struct FlowMapOptions {
    int substeps = 16;
};

/// General form: the flow of a divergence-free field w is traced from every node with RK4
/// (variational equation for Dphi alongside) and fields are evaluated off-grid by their
/// band-limited interpolants. Cost grows like nodes x modes; intended for small grids.
inline MHDSnapshot coadjoint_perturb(const MHDSnapshot& s, const VectorField& w, const Field* f, double dt,
                                     const VectorField* P = nullptr, FlowMapOptions opt = {}) {
    detail::check_snapshot(s);
    const Grid& g = s.grid;
    g.check(w, "generator");
    const double div = g.norm(g.divergence(w));
    if (div > 1e-10) throw DomainError("coadjoint_perturb: generator is not divergence-free (" + std::to_string(div) + ")");
    const int d = g.dim();
    const std::size_t n = g.size();

    // Gradient of w, evaluated along trajectories.
    std::vector<Field> dw; // dw[a*d+b] = d w_a / d x_b
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) dw.push_back(g.derivative(w[static_cast<std::size_t>(a)], b));

    std::vector<Point> x(n);
    for (std::size_t p = 0; p < n; ++p) x[p] = g.node(p);
    // J stored per node, row-major d x d.
    std::vector<double> J(n * static_cast<std::size_t>(d * d), 0.0);
    for (std::size_t p = 0; p < n; ++p)
        for (int a = 0; a < d; ++a) J[p * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(a * d + a)] = 1.0;

    auto velocity = [&](const std::vector<Point>& pts, const std::vector<double>& Jm, std::vector<Point>& dx,
                        std::vector<double>& dJ) {
        std::vector<Field> wv, gw;
        for (int a = 0; a < d; ++a) wv.push_back(g.evaluate(w[static_cast<std::size_t>(a)], pts));
        for (const auto& c : dw) gw.push_back(g.evaluate(c, pts));
        dx.assign(n, Point{0.0, 0.0, 0.0});
        dJ.assign(Jm.size(), 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            const auto pi = static_cast<Eigen::Index>(p);
            for (int a = 0; a < d; ++a) dx[p][static_cast<std::size_t>(a)] = wv[static_cast<std::size_t>(a)][pi];
            const std::size_t base = p * static_cast<std::size_t>(d * d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    double acc = 0.0;
                    for (int c = 0; c < d; ++c)
                        acc += gw[static_cast<std::size_t>(a * d + c)][pi] * Jm[base + static_cast<std::size_t>(c * d + b)];
                    dJ[base + static_cast<std::size_t>(a * d + b)] = acc;
                }
        }
    };
    auto axpy = [&](const std::vector<Point>& a, const std::vector<Point>& b, double h) {
        std::vector<Point> r = a;
        for (std::size_t p = 0; p < n; ++p)
            for (int c = 0; c < 3; ++c) r[p][static_cast<std::size_t>(c)] += h * b[p][static_cast<std::size_t>(c)];
        return r;
    };
    auto axpyv = [](const std::vector<double>& a, const std::vector<double>& b, double h) {
        std::vector<double> r = a;
        for (std::size_t q = 0; q < r.size(); ++q) r[q] += h * b[q];
        return r;
    };

    const int steps = std::max(1, opt.substeps);
    const double h = dt / steps;
    if (dt != 0.0) {
        for (int st = 0; st < steps; ++st) {
            std::vector<Point> k1, k2, k3, k4;
            std::vector<double> j1, j2, j3, j4;
            velocity(x, J, k1, j1);
            velocity(axpy(x, k1, 0.5 * h), axpyv(J, j1, 0.5 * h), k2, j2);
            velocity(axpy(x, k2, 0.5 * h), axpyv(J, j2, 0.5 * h), k3, j3);
            velocity(axpy(x, k3, h), axpyv(J, j3, h), k4, j4);
            for (std::size_t p = 0; p < n; ++p)
                for (int c = 0; c < d; ++c) {
                    const auto cc = static_cast<std::size_t>(c);
                    x[p][cc] += h / 6.0 * (k1[p][cc] + 2.0 * k2[p][cc] + 2.0 * k3[p][cc] + k4[p][cc]);
                }
            for (std::size_t q = 0; q < J.size(); ++q) J[q] += h / 6.0 * (j1[q] + 2.0 * j2[q] + 2.0 * j3[q] + j4[q]);
        }
    }

    auto at_phi = [&](const Field& fld) { return g.evaluate(fld, x); };
    MHDSnapshot out{g, {}, at_phi(s.varrho), {}};
    std::vector<Field> a_phi, b_phi;
    for (const auto& c : s.alpha) a_phi.push_back(at_phi(c));
    for (const auto& c : s.B) b_phi.push_back(at_phi(c));
    out.alpha.assign(static_cast<std::size_t>(d), g.zeros());
    if (!s.B.empty()) out.B.assign(static_cast<std::size_t>(d), g.zeros());
    for (std::size_t p = 0; p < n; ++p) {
        const auto pi = static_cast<Eigen::Index>(p);
        const std::size_t base = p * static_cast<std::size_t>(d * d);
        auto Jab = [&](int a, int b) { return J[base + static_cast<std::size_t>(a * d + b)]; };
        // alpha' = J^T alpha o phi
        for (int b = 0; b < d; ++b) {
            double acc = 0.0;
            for (int a = 0; a < d; ++a) acc += Jab(a, b) * a_phi[static_cast<std::size_t>(a)][pi];
            out.alpha[static_cast<std::size_t>(b)][pi] = acc;
        }
        if (!s.B.empty()) {
            // B' = J^-1 B o phi, det J = 1
            Eigen::Matrix3d M;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) M(a, b) = Jab(a, b);
            Eigen::Vector3d bv(b_phi[0][pi], b_phi[1][pi], b_phi[2][pi]);
            const Eigen::Vector3d r = M.partialPivLu().solve(bv);
            for (int a = 0; a < 3; ++a) out.B[static_cast<std::size_t>(a)][pi] = r[a];
        }
    }
    detail::add_alpha_shifts(out, f, P);
    return out;
}

} // namespace geohydro
