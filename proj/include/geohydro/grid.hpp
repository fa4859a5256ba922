#pragma once

// Periodic rectangular grids with normalized quadrature and Fourier calculus.
//
// Node values are stored row-major with axis 0 slowest. The quadrature weight
// of every node is 1/(N_0 N_1 ...), so the integral of the constant 1 is 1 and
// integrals are averages. Fourier coefficients are normalized so that
// f(x) = sum_k c_k exp(i k.x).

#include "geohydro/errors.hpp"

#include <fftw3.h>

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace geohydro {

using Complex = std::complex<double>;
using Field = Eigen::ArrayXd;
using CField = Eigen::ArrayXcd;
/// One Field per axis.
using VectorField = std::vector<Field>;
using Point = std::array<double, 3>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace detail {

// FFTW's planner is not re-entrant; execution with the new-array interface is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct SpectralLayout {
    std::size_t size = 0;
    std::array<int, 3> shape{1, 1, 1};
    std::array<Eigen::ArrayXd, 3> k;          // wavenumber per axis
    std::array<std::vector<std::uint8_t>, 3> nyquist;
    std::array<std::vector<int>, 3> index;    // signed integer mode number
    Eigen::ArrayXd k2;
    std::vector<std::uint8_t> keep;            // 2/3-rule mask
    std::vector<std::uint8_t> tail;            // top third of the retained band
    Eigen::ArrayXd multiplicity;               // Parseval weight (2 for folded r2c modes)
};

struct GridData {
    int dim = 1;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> length{kTwoPi, kTwoPi, kTwoPi};
    std::size_t size = 1;
    double weight = 1.0;
    SpectralLayout real_layout;
    SpectralLayout complex_layout;
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    fftw_plan c2c_fwd = nullptr;
    fftw_plan c2c_bwd = nullptr;
    std::array<fftw_plan, 3> line_fwd{nullptr, nullptr, nullptr};
    std::array<fftw_plan, 3> line_bwd{nullptr, nullptr, nullptr};

    GridData() = default;
    GridData(const GridData&) = delete;
    GridData& operator=(const GridData&) = delete;

    ~GridData() {
        std::lock_guard lock(planner_mutex());
        for (fftw_plan p : {r2c, c2r, c2c_fwd, c2c_bwd})
            if (p) fftw_destroy_plan(p);
        for (int a = 0; a < 3; ++a) {
            if (line_fwd[a]) fftw_destroy_plan(line_fwd[a]);
            if (line_bwd[a]) fftw_destroy_plan(line_bwd[a]);
        }
    }
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
inline fftw_complex* as_fftw(const Complex* p) {
    return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

inline SpectralLayout make_layout(int dim, const std::array<int, 3>& n,
                                  const std::array<double, 3>& length, bool half_last) {
    SpectralLayout s;
    dim = std::clamp(dim, 1, 3); // validated by Grid; lets the optimizer bound the loops below
    for (int a = 0; a < dim; ++a) s.shape[a] = n[a];
    if (half_last) s.shape[dim - 1] = n[dim - 1] / 2 + 1;
    s.size = static_cast<std::size_t>(s.shape[0]) * s.shape[1] * s.shape[2];
    for (int a = 0; a < 3; ++a) {
        s.k[a] = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(s.size));
        s.nyquist[a].assign(s.size, 0);
        s.index[a].assign(s.size, 0);
    }
    s.keep.assign(s.size, 1);
    s.tail.assign(s.size, 0);
    s.multiplicity = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(s.size));

    std::array<int, 3> j{0, 0, 0};
    for (std::size_t idx = 0; idx < s.size; ++idx) {
        std::size_t rem = idx;
        for (int a = 2; a >= 0; --a) {
            j[a] = static_cast<int>(rem % static_cast<std::size_t>(s.shape[a]));
            rem /= static_cast<std::size_t>(s.shape[a]);
        }
        for (int a = 0; a < dim; ++a) {
            const int na = n[a];
            const int signed_j = (j[a] <= na / 2) ? j[a] : j[a] - na;
            s.index[a][idx] = signed_j;
            s.k[a][static_cast<Eigen::Index>(idx)] = kTwoPi / length[a] * signed_j;
            s.nyquist[a][idx] = (j[a] == na / 2) ? 1 : 0;
            if (3 * std::abs(signed_j) > na) s.keep[idx] = 0;
            if (9 * std::abs(signed_j) > 2 * na) s.tail[idx] = 1;
        }
        if (half_last) {
            const int jl = j[dim - 1];
            const int nl = n[dim - 1];
            if (jl > 0 && 2 * jl < nl) s.multiplicity[static_cast<Eigen::Index>(idx)] = 2.0;
        }
    }
    s.k2 = s.k[0].square() + s.k[1].square() + s.k[2].square();
    return s;
}

} // namespace detail

/// A periodic lattice on [0,L_0) x ... with power-of-two sizes and spectral calculus.
///
/// Copies share the FFT plans. All member functions are const and thread-safe.
class Grid {
  public:
    Grid(int dim, std::array<int, 3> n, std::array<double, 3> length = {kTwoPi, kTwoPi, kTwoPi}) {
        detail::require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
        auto d = std::make_shared<detail::GridData>();
        d->dim = dim;
        for (int a = 0; a < 3; ++a) {
            if (a < dim) {
                detail::require(detail::is_power_of_two(n[a]) && n[a] >= 16,
                                "grid points per axis must be a power of two >= 16, got " +
                                    std::to_string(n[a]));
                detail::require(length[a] > 0.0 && std::isfinite(length[a]),
                                "grid period lengths must be positive");
                d->n[a] = n[a];
                d->length[a] = length[a];
            } else {
                d->n[a] = 1;
                d->length[a] = 1.0;
            }
        }
        d->size = static_cast<std::size_t>(d->n[0]) * d->n[1] * d->n[2];
        d->weight = 1.0 / static_cast<double>(d->size);
        d->real_layout = detail::make_layout(dim, d->n, d->length, true);
        d->complex_layout = detail::make_layout(dim, d->n, d->length, false);
        make_plans(*d);
        data_ = std::move(d);
    }

    static Grid line(int n, double length = kTwoPi) { return Grid(1, {n, 1, 1}, {length, 1, 1}); }
    static Grid square(int n, double length = kTwoPi) {
        return Grid(2, {n, n, 1}, {length, length, 1});
    }
    static Grid cube(int n, double length = kTwoPi) {
        return Grid(3, {n, n, n}, {length, length, length});
    }

    int dim() const { return data_->dim; }
    int n(int axis) const { return data_->n[check_axis(axis)]; }
    double length(int axis) const { return data_->length[check_axis(axis)]; }
    double spacing(int axis) const { return length(axis) / n(axis); }
    double min_spacing() const {
        double h = spacing(0);
        for (int a = 1; a < dim(); ++a) h = std::min(h, spacing(a));
        return h;
    }
    std::size_t size() const { return data_->size; }
    Eigen::Index ssize() const { return static_cast<Eigen::Index>(data_->size); }
    /// Quadrature weight of every node; sums to 1.
    double weight() const { return data_->weight; }

    friend bool operator==(const Grid& a, const Grid& b) {
        if (a.data_ == b.data_) return true;
        if (a.dim() != b.dim()) return false;
        for (int i = 0; i < a.dim(); ++i)
            if (a.n(i) != b.n(i) || a.length(i) != b.length(i)) return false;
        return true;
    }

    void check(const Field& f, const char* what = "field") const {
        detail::require(f.size() == ssize(), std::string(what) + " does not match grid shape");
    }
    void check(const CField& f, const char* what = "field") const {
        detail::require(f.size() == ssize(), std::string(what) + " does not match grid shape");
    }
    void check(const VectorField& v, const char* what = "vector field") const {
        detail::require(static_cast<int>(v.size()) == dim(),
                        std::string(what) + " must have one component per axis");
        for (const auto& c : v) check(c, what);
    }

    Point node(std::size_t idx) const {
        Point x{0.0, 0.0, 0.0};
        for (int a = 2; a >= 0; --a) {
            const std::size_t na = static_cast<std::size_t>(data_->n[a]);
            x[a] = data_->length[a] * static_cast<double>(idx % na) / static_cast<double>(na);
            idx /= na;
        }
        return x;
    }

    Field coordinate(int axis) const {
        check_axis(axis);
        Field out(ssize());
        for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = node(i)[axis];
        return out;
    }

    Field constant(double c) const { return Field::Constant(ssize(), c); }
    Field zeros() const { return Field::Zero(ssize()); }

    /// Samples fn(x, y, z) at every node (unused coordinates are 0).
    template <class Fn>
    Field sample(Fn&& fn) const {
        Field out(ssize());
        for (std::size_t i = 0; i < size(); ++i) {
            const Point x = node(i);
            out[static_cast<Eigen::Index>(i)] = fn(x[0], x[1], x[2]);
        }
        return out;
    }
    template <class Fn>
    CField sample_complex(Fn&& fn) const {
        CField out(ssize());
        for (std::size_t i = 0; i < size(); ++i) {
            const Point x = node(i);
            out[static_cast<Eigen::Index>(i)] = fn(x[0], x[1], x[2]);
        }
        return out;
    }

    // ---- transforms -------------------------------------------------------

    const detail::SpectralLayout& real_layout() const { return data_->real_layout; }
    const detail::SpectralLayout& complex_layout() const { return data_->complex_layout; }

    /// Normalized r2c coefficients.
    CField forward(const Field& f) const {
        check(f);
        CField out(static_cast<Eigen::Index>(real_layout().size));
        fftw_execute_dft_r2c(data_->r2c, const_cast<double*>(f.data()), detail::as_fftw(out.data()));
        out *= weight();
        return out;
    }

    Field backward(const CField& spec) const {
        detail::require(static_cast<std::size_t>(spec.size()) == real_layout().size,
                        "spectrum does not match real layout");
        CField tmp = spec; // c2r destroys its input
        Field out(ssize());
        fftw_execute_dft_c2r(data_->c2r, detail::as_fftw(tmp.data()), out.data());
        return out;
    }

    CField forward(const CField& f) const {
        check(f);
        CField out(ssize());
        fftw_execute_dft(data_->c2c_fwd, detail::as_fftw(f.data()), detail::as_fftw(out.data()));
        out *= weight();
        return out;
    }

    CField backward_complex(const CField& spec) const {
        check(spec);
        CField out(ssize());
        fftw_execute_dft(data_->c2c_bwd, detail::as_fftw(spec.data()), detail::as_fftw(out.data()));
        return out;
    }

    /// Applies a Fourier multiplier m(layout, spectral index) to a real field.
    template <class Mult>
    Field apply(const Field& f, Mult&& m) const {
        CField s = forward(f);
        const auto& lay = real_layout();
        for (std::size_t i = 0; i < lay.size; ++i) s[static_cast<Eigen::Index>(i)] *= m(lay, i);
        return backward(s);
    }

    template <class Mult>
    CField apply(const CField& f, Mult&& m) const {
        CField s = forward(f);
        const auto& lay = complex_layout();
        for (std::size_t i = 0; i < lay.size; ++i) s[static_cast<Eigen::Index>(i)] *= m(lay, i);
        return backward_complex(s);
    }

    // ---- calculus ---------------------------------------------------------

    /// Exact Fourier derivative; the Nyquist mode of the axis is dropped.
    Field derivative(const Field& f, int axis) const {
        check_axis(axis);
        return apply(f, [axis](const detail::SpectralLayout& l, std::size_t i) {
            return l.nyquist[axis][i] ? Complex(0.0) : Complex(0.0, l.k[axis][static_cast<Eigen::Index>(i)]);
        });
    }
    CField derivative(const CField& f, int axis) const {
        check_axis(axis);
        return apply(f, [axis](const detail::SpectralLayout& l, std::size_t i) {
            return l.nyquist[axis][i] ? Complex(0.0) : Complex(0.0, l.k[axis][static_cast<Eigen::Index>(i)]);
        });
    }

    VectorField gradient(const Field& f) const {
        VectorField g;
        g.reserve(static_cast<std::size_t>(dim()));
        for (int a = 0; a < dim(); ++a) g.push_back(derivative(f, a));
        return g;
    }

    Field divergence(const VectorField& v) const {
        check(v);
        Field out = derivative(v[0], 0);
        for (int a = 1; a < dim(); ++a) out += derivative(v[static_cast<std::size_t>(a)], a);
        return out;
    }

    /// Scalar vorticity d_x v_y - d_y v_x on a 2D grid.
    Field curl2d(const VectorField& v) const {
        detail::require(dim() == 2, "curl2d needs a 2D grid");
        check(v);
        return derivative(v[1], 0) - derivative(v[0], 1);
    }

    VectorField curl(const VectorField& v) const {
        detail::require(dim() == 3, "curl needs a 3D grid");
        check(v);
        return {derivative(v[2], 1) - derivative(v[1], 2), derivative(v[0], 2) - derivative(v[2], 0),
                derivative(v[1], 0) - derivative(v[0], 1)};
    }

    Field laplacian(const Field& f) const {
        return apply(f, [](const detail::SpectralLayout& l, std::size_t i) {
            return Complex(-l.k2[static_cast<Eigen::Index>(i)]);
        });
    }
    CField laplacian(const CField& f) const {
        return apply(f, [](const detail::SpectralLayout& l, std::size_t i) {
            return Complex(-l.k2[static_cast<Eigen::Index>(i)]);
        });
    }

    /// Zero-mean solution of Laplacian(u) = f. Requires |mean(f)| < 1e-10.
    Field inverse_laplacian(const Field& f) const {
        const double m = integrate(f);
        if (std::abs(m) >= 1e-10)
            throw DomainError("inverse_laplacian: input has non-zero mean " + std::to_string(m));
        return apply(f, [](const detail::SpectralLayout& l, std::size_t i) {
            const double k2 = l.k2[static_cast<Eigen::Index>(i)];
            return k2 == 0.0 ? Complex(0.0) : Complex(-1.0 / k2);
        });
    }

    /// Sum of w f over all nodes; accepts real or complex array expressions.
    template <class Derived>
    typename Derived::Scalar integrate(const Eigen::ArrayBase<Derived>& f) const {
        detail::require(f.size() == ssize(), "field does not match grid shape");
        return f.sum() * weight();
    }
    template <class Derived>
    typename Derived::Scalar mean(const Eigen::ArrayBase<Derived>& f) const {
        return integrate(f);
    }

    /// L2 norm with respect to the normalized measure.
    template <class Derived>
    double norm(const Eigen::ArrayBase<Derived>& f) const {
        detail::require(f.size() == ssize(), "field does not match grid shape");
        return std::sqrt(f.abs2().sum() * weight());
    }
    double norm(const VectorField& v) const {
        double s = 0.0;
        for (const auto& c : v) s += integrate(c.square());
        return std::sqrt(s);
    }

    /// 2/3 rule: zeroes every mode with some |k_i| > N_i/3.
    Field dealias(const Field& f) const {
        return apply(f, [](const detail::SpectralLayout& l, std::size_t i) {
            return l.keep[i] ? Complex(1.0) : Complex(0.0);
        });
    }
    CField dealias(const CField& f) const {
        return apply(f, [](const detail::SpectralLayout& l, std::size_t i) {
            return l.keep[i] ? Complex(1.0) : Complex(0.0);
        });
    }

    /// Sum over all Fourier modes of |c_k|^2 (equals integrate(f^2)).
    double parseval_sum(const Field& f) const {
        const CField s = forward(f);
        return (s.abs2() * real_layout().multiplicity).sum();
    }

    /// Share of the fluctuation energy (mean mode excluded) carried by modes in the
    /// top third of the 2/3-retained band, or beyond it.
    double spectral_tail_fraction(const Field& f) const {
        const CField s = forward(f);
        const auto& lay = real_layout();
        double total = 0.0;
        double tail = 0.0;
        for (std::size_t i = 0; i < lay.size; ++i) {
            if (lay.k2[static_cast<Eigen::Index>(i)] == 0.0) continue;
            const double e = std::norm(s[static_cast<Eigen::Index>(i)]) * lay.multiplicity[static_cast<Eigen::Index>(i)];
            total += e;
            if (lay.tail[i]) tail += e;
        }
        return total > 0.0 ? tail / total : 0.0;
    }

    /// Band-limited interpolation onto a grid with the same periods whose sizes are
    /// integer multiples of these. Nyquist modes are split evenly between +/-N/2.
    Field interpolate_to(const Grid& fine, const Field& f) const {
        check(f);
        detail::require(fine.dim() == dim(), "interpolate_to: dimension mismatch");
        for (int a = 0; a < dim(); ++a)
            detail::require(fine.n(a) % n(a) == 0 && fine.length(a) == length(a),
                            "interpolate_to: target grid must refine this one");
        const CField c = forward(f);
        const auto& lay = real_layout();
        const auto& flay = fine.real_layout();
        CField out = CField::Zero(static_cast<Eigen::Index>(flay.size));
        const int last = dim() - 1;
        for (std::size_t i = 0; i < lay.size; ++i) {
            // Every sign combination over the Nyquist axes that are not the half axis.
            int split = 0;
            double w = 1.0;
            for (int a = 0; a < dim(); ++a)
                if (lay.nyquist[a][i]) {
                    w *= 0.5;
                    if (a != last) split |= 1 << a;
                }
            for (int mask = split;; mask = (mask - 1) & split) {
                std::size_t idx = 0;
                for (int a = 0; a < dim(); ++a) {
                    int j = lay.index[a][i];
                    if (lay.nyquist[a][i]) j = (a == last || (mask >> a) & 1) ? n(a) / 2 : -n(a) / 2;
                    const int nf = fine.n(a);
                    const int fs = (a == last) ? nf / 2 + 1 : nf;
                    idx = idx * static_cast<std::size_t>(fs) + static_cast<std::size_t>(j < 0 ? j + nf : j);
                }
                out[static_cast<Eigen::Index>(idx)] += w * c[static_cast<Eigen::Index>(i)];
                if (mask == 0) break;
            }
        }
        return fine.backward(out);
    }

    /// Band-limited interpolant of f evaluated at arbitrary points (direct sum).
    Field evaluate(const Field& f, std::span<const Point> points) const {
        const CField s = forward(f);
        const auto& lay = real_layout();
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < lay.size; ++i)
            if (std::abs(s[static_cast<Eigen::Index>(i)]) > 0.0) active.push_back(i);
        Field out(static_cast<Eigen::Index>(points.size()));
        for (std::size_t p = 0; p < points.size(); ++p) {
            double acc = 0.0;
            for (std::size_t i : active) {
                const auto ii = static_cast<Eigen::Index>(i);
                double phase = 0.0;
                for (int a = 0; a < dim(); ++a) phase += lay.k[a][ii] * points[p][a];
                const Complex c = s[ii];
                acc += lay.multiplicity[ii] * (c.real() * std::cos(phase) - c.imag() * std::sin(phase));
            }
            out[static_cast<Eigen::Index>(p)] = acc;
        }
        return out;
    }

    /// Evaluates f(x + shift(x) e_axis) where shift is constant along each line parallel
    /// to `axis`. Exact for band-limited f.
    Field shift_along(const Field& f, int axis, const Field& shift) const {
        check_axis(axis);
        check(f);
        check(shift, "shift");
        const int na = n(axis);
        const std::size_t stride = axis_stride(axis);
        std::vector<Complex> buf(static_cast<std::size_t>(na));
        std::vector<Complex> spec(static_cast<std::size_t>(na));
        Field out(ssize());
        const double k0 = kTwoPi / length(axis);
        for (std::size_t start = 0; start < size(); ++start) {
            if ((start / stride) % static_cast<std::size_t>(na) != 0) continue;
            for (int j = 0; j < na; ++j)
                buf[static_cast<std::size_t>(j)] = f[static_cast<Eigen::Index>(start + static_cast<std::size_t>(j) * stride)];
            fftw_execute_dft(data_->line_fwd[axis], detail::as_fftw(buf.data()), detail::as_fftw(spec.data()));
            const double s = shift[static_cast<Eigen::Index>(start)];
            for (int j = 0; j < na; ++j) {
                const int m = (j <= na / 2) ? j : j - na;
                const double kk = (2 * j == na) ? 0.0 : k0 * m;
                Complex c = spec[static_cast<std::size_t>(j)] / static_cast<double>(na);
                if (2 * j == na) c *= std::cos(k0 * m * s);
                else c *= std::polar(1.0, kk * s);
                spec[static_cast<std::size_t>(j)] = c;
            }
            fftw_execute_dft(data_->line_bwd[axis], detail::as_fftw(spec.data()), detail::as_fftw(buf.data()));
            for (int j = 0; j < na; ++j)
                out[static_cast<Eigen::Index>(start + static_cast<std::size_t>(j) * stride)] = buf[static_cast<std::size_t>(j)].real();
        }
        return out;
    }

    std::size_t axis_stride(int axis) const {
        std::size_t s = 1;
        for (int a = 2; a > axis; --a) s *= static_cast<std::size_t>(data_->n[a]);
        return s;
    }

  private:
    int check_axis(int axis) const {
        if (axis < 0 || axis >= data_->dim)
            throw DomainError("axis " + std::to_string(axis) + " out of range for a " +
                              std::to_string(data_->dim) + "D grid");
        return axis;
    }

    static void make_plans(detail::GridData& d) {
        std::array<int, 3> dims{d.n[0], d.n[1], d.n[2]};
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        const std::size_t half = d.real_layout.size;
        std::lock_guard lock(detail::planner_mutex());
        double* rbuf = fftw_alloc_real(d.size);
        fftw_complex* cbuf = fftw_alloc_complex(std::max(half, d.size));
        fftw_complex* cbuf2 = fftw_alloc_complex(d.size);
        d.r2c = fftw_plan_dft_r2c(d.dim, dims.data(), rbuf, cbuf, flags);
        d.c2r = fftw_plan_dft_c2r(d.dim, dims.data(), cbuf, rbuf, flags);
        d.c2c_fwd = fftw_plan_dft(d.dim, dims.data(), cbuf, cbuf2, FFTW_FORWARD, flags);
        d.c2c_bwd = fftw_plan_dft(d.dim, dims.data(), cbuf, cbuf2, FFTW_BACKWARD, flags);
        for (int a = 0; a < d.dim; ++a) {
            d.line_fwd[a] = fftw_plan_dft_1d(d.n[a], cbuf, cbuf2, FFTW_FORWARD, flags);
            d.line_bwd[a] = fftw_plan_dft_1d(d.n[a], cbuf, cbuf2, FFTW_BACKWARD, flags);
        }
        fftw_free(rbuf);
        fftw_free(cbuf);
        fftw_free(cbuf2);
        if (!d.r2c || !d.c2r || !d.c2c_fwd || !d.c2c_bwd) throw Error("FFTW planning failed");
    }

    std::shared_ptr<const detail::GridData> data_;
};

// ---- small field helpers ----------------------------------------------------

inline double max_abs(const Field& f) { return f.size() ? f.abs().maxCoeff() : 0.0; }
inline double max_abs(const CField& f) { return f.size() ? f.abs().maxCoeff() : 0.0; }

inline Field dot(const VectorField& a, const VectorField& b) {
    detail::require(a.size() == b.size() && !a.empty(), "dot: component mismatch");
    Field out = a[0] * b[0];
    for (std::size_t i = 1; i < a.size(); ++i) out += a[i] * b[i];
    return out;
}

inline Field norm2(const VectorField& a) { return dot(a, a); }

inline VectorField scale(const VectorField& v, const Field& s) {
    VectorField out = v;
    for (auto& c : out) c *= s;
    return out;
}

} // namespace geohydro
