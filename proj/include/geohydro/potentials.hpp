#pragma once

// Potential functionals on densities: value U(rho) and variational derivative
// dU/drho (returned with zero mean, since cotangent potentials are defined up
// to constants). A Potential is a weighted sum of closed-form terms.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"
#include "geohydro/spaces.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace geohydro {

// ---- barotropic state functions ---------------------------------------------------

/// Internal energy per unit mass e(rho) from a fixed catalog.
class StateFunction {
  public:
    enum class Kind { shallow, polytropic, constant };

    static StateFunction shallow() { return StateFunction(Kind::shallow, 0.0); }
    /// e = rho^(a-1).
    static StateFunction polytropic(double a) {
        detail::require(std::isfinite(a) && a > 1.0, "polytropic exponent must exceed 1");
        return StateFunction(Kind::polytropic, a);
    }
    static StateFunction constant(double c) { return StateFunction(Kind::constant, c); }

    /// Parses "shallow", "polytropic(a)" or "constant(c)" / "constant".
    static StateFunction parse(const std::string& spec) {
        auto arg = [&](const std::string& head) -> std::optional<double> {
            if (spec.rfind(head + "(", 0) != 0 || spec.back() != ')') return std::nullopt;
            try {
                std::size_t used = 0;
                const std::string body = spec.substr(head.size() + 1, spec.size() - head.size() - 2);
                const double v = std::stod(body, &used);
                if (used != body.size()) return std::nullopt;
                return v;
            } catch (const std::exception&) {
                return std::nullopt;
            }
        };
        if (spec == "shallow") return shallow();
        if (spec == "constant") return constant(1.0);
        if (auto a = arg("polytropic")) return polytropic(*a);
        if (auto c = arg("constant")) return constant(*c);
        throw ConfigError("unknown state function '" + spec + "'");
    }

    Kind kind() const { return kind_; }
    double parameter() const { return p_; }
    std::string name() const {
        switch (kind_) {
        case Kind::shallow: return "shallow";
        case Kind::polytropic: return "polytropic(" + std::to_string(p_) + ")";
        case Kind::constant: return "constant(" + std::to_string(p_) + ")";
        }
        return "?";
    }

    Field e(const Field& rho) const {
        switch (kind_) {
        case Kind::shallow: return 0.5 * rho;
        case Kind::polytropic: return rho.pow(p_ - 1.0);
        case Kind::constant: return Field::Constant(rho.size(), p_);
        }
        return {};
    }
    Field de(const Field& rho) const {
        switch (kind_) {
        case Kind::shallow: return Field::Constant(rho.size(), 0.5);
        case Kind::polytropic: return (p_ - 1.0) * rho.pow(p_ - 2.0);
        case Kind::constant: return Field::Zero(rho.size());
        }
        return {};
    }
    Field d2e(const Field& rho) const {
        switch (kind_) {
        case Kind::shallow: return Field::Zero(rho.size());
        case Kind::polytropic: return (p_ - 1.0) * (p_ - 2.0) * rho.pow(p_ - 3.0);
        case Kind::constant: return Field::Zero(rho.size());
        }
        return {};
    }

  private:
    StateFunction(Kind k, double p) : kind_(k), p_(p) {}
    Kind kind_;
    double p_;
};

/// W = e'(rho) rho + e(rho).
inline Field work_function(const StateFunction& e, const Field& rho) { return e.de(rho) * rho + e.e(rho); }

/// P = e'(rho) rho^2.
inline Field pressure(const StateFunction& e, const Field& rho) { return e.de(rho) * rho.square(); }

/// Sound speed squared rho dW/drho = rho (2e' + rho e'').
inline Field sound_speed_squared(const StateFunction& e, const Field& rho) {
    return rho * (2.0 * e.de(rho) + rho * e.d2e(rho));
}

// ---- Schrodinger nonlinearities ------------------------------------------------------

/// f(a) and its primitive F with F(0) = 0 (or F(1) = 0 for the shifted well).
class Nonlinearity {
  public:
    enum class Kind { none, kerr, well };

    static Nonlinearity none() { return Nonlinearity(Kind::none, 0.0); }
    /// f(a) = kappa a.
    static Nonlinearity kerr(double kappa) { return Nonlinearity(Kind::kerr, kappa); }
    /// f(a) = (a - 1)^2 / 2.
    static Nonlinearity well() { return Nonlinearity(Kind::well, 0.0); }

    static Nonlinearity parse(const std::string& spec) {
        if (spec == "none") return none();
        if (spec == "well") return well();
        if (spec.rfind("kerr(", 0) == 0 && spec.back() == ')') {
            try {
                std::size_t used = 0;
                const std::string body = spec.substr(5, spec.size() - 6);
                const double k = std::stod(body, &used);
                if (used == body.size()) return kerr(k);
            } catch (const std::exception&) {
            }
        }
        throw ConfigError("unknown nonlinearity '" + spec + "'");
    }

    Kind kind() const { return kind_; }
    bool is_none() const { return kind_ == Kind::none; }

    Field f(const Field& a) const {
        switch (kind_) {
        case Kind::none: return Field::Zero(a.size());
        case Kind::kerr: return kappa_ * a;
        case Kind::well: return 0.5 * (a - 1.0).square();
        }
        return {};
    }
    Field primitive(const Field& a) const {
        switch (kind_) {
        case Kind::none: return Field::Zero(a.size());
        case Kind::kerr: return 0.5 * kappa_ * a.square();
        case Kind::well: return (a - 1.0).cube() / 6.0;
        }
        return {};
    }

  private:
    Nonlinearity(Kind k, double kappa) : kind_(k), kappa_(kappa) {}
    Kind kind_;
    double kappa_;
};

// ---- potential terms ----------------------------------------------------------------------

namespace terms {

struct Zero {};
/// integral V rho.
struct Linear {
    Field V;
};
/// integral rho^2 / 2.
struct Quadratic {};
/// integral e(rho) rho.
struct Barotropic {
    StateFunction e;
};
/// integral F(rho), with dF/drho = f.
struct Interaction {
    Nonlinearity f;
};
/// 2 pi G integral (rho-1) inverse_laplacian(rho-1).
struct Gravity {
    double G = 1.0;
};
/// (1/2) integral |grad rho|^2 / rho.
struct FisherInfo {};
/// integral rho ln rho.
struct Entropy {};

using Any = std::variant<Zero, Linear, Quadratic, Barotropic, Interaction, Gravity, FisherInfo, Entropy>;

} // namespace terms

/// Sum of weighted potential terms.
class Potential {
  public:
    struct Term {
        double weight;
        terms::Any term;
    };

    Potential() = default;

    static Potential zero() { return single(terms::Zero{}); }
    static Potential linear(Field V) { return single(terms::Linear{std::move(V)}); }
    static Potential quadratic() { return single(terms::Quadratic{}); }
    static Potential barotropic(StateFunction e) { return single(terms::Barotropic{e}); }
    static Potential interaction(Nonlinearity f) { return single(terms::Interaction{f}); }
    static Potential gravity(double G) { return single(terms::Gravity{G}); }
    /// `scale` multiplies the functional; negative scales give the anti-diffusive quantum pressure.
    static Potential fisher_info(double scale = 1.0) { return Potential({{scale, terms::FisherInfo{}}}); }
    static Potential entropy() { return single(terms::Entropy{}); }

    const std::vector<Term>& terms() const { return terms_; }

    friend Potential operator+(Potential a, const Potential& b) {
        a.terms_.insert(a.terms_.end(), b.terms_.begin(), b.terms_.end());
        return a;
    }
    friend Potential operator*(double s, Potential p) {
        for (auto& t : p.terms_) t.weight *= s;
        return p;
    }

    double value(const Density& rho) const {
        double total = 0.0;
        for (const auto& t : terms_) total += t.weight * term_value(t.term, rho);
        return total;
    }

    /// Zero-mean variational derivative.
    Field vder(const Density& rho) const {
        const Grid& g = rho.grid();
        Field out = g.zeros();
        for (const auto& t : terms_)
            if (t.weight != 0.0) out += t.weight * term_vder(t.term, rho);
        return out - g.integrate(out);
    }

    /// Total weight on Fisher-information terms: the coefficient c of the
    /// dispersive linearization dU/drho ~ -c Laplacian(delta rho) about rho = 1.
    double fisher_coefficient() const {
        double c = 0.0;
        for (const auto& t : terms_)
            if (std::holds_alternative<terms::FisherInfo>(t.term)) c += t.weight;
        return c;
    }

    /// The same potential with every Fisher-information term removed.
    Potential without_fisher_info() const {
        Potential p;
        for (const auto& t : terms_)
            if (!std::holds_alternative<terms::FisherInfo>(t.term)) p.terms_.push_back(t);
        return p;
    }

    /// Squared speed of the barotropic and quadratic terms (0 if none).
    Field sound_speed_squared(const Field& rho) const {
        Field c2 = Field::Zero(rho.size());
        for (const auto& t : terms_) {
            if (std::holds_alternative<terms::Quadratic>(t.term)) c2 += t.weight * rho;
            if (const auto* b = std::get_if<terms::Barotropic>(&t.term))
                c2 += t.weight * geohydro::sound_speed_squared(b->e, rho);
            if (const auto* n = std::get_if<terms::Interaction>(&t.term)) {
                // rho f'(rho)
                const Field eps = Field::Constant(rho.size(), 1e-6);
                c2 += t.weight * rho * (n->f.f(rho + eps) - n->f.f(rho - eps)) / 2e-6;
            }
        }
        return c2.max(0.0);
    }

  private:
    explicit Potential(std::vector<Term> t) : terms_(std::move(t)) {}
    template <class T>
    static Potential single(T t) {
        return Potential({{1.0, terms::Any(std::move(t))}});
    }

    static double term_value(const terms::Any& term, const Density& rho) {
        const Grid& g = rho.grid();
        const Field& r = rho.values();
        return std::visit(
            [&](const auto& t) -> double {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, terms::Zero>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, terms::Linear>) {
                    g.check(t.V, "potential V");
                    return g.integrate(t.V * r);
                } else if constexpr (std::is_same_v<T, terms::Quadratic>) {
                    return 0.5 * g.integrate(r.square());
                } else if constexpr (std::is_same_v<T, terms::Barotropic>) {
                    return g.integrate(t.e.e(r) * r);
                } else if constexpr (std::is_same_v<T, terms::Interaction>) {
                    return g.integrate(t.f.primitive(r));
                } else if constexpr (std::is_same_v<T, terms::Gravity>) {
                    const Field d = r - g.integrate(r);
                    return 2.0 * std::numbers::pi * t.G * g.integrate(d * g.inverse_laplacian(d));
                } else if constexpr (std::is_same_v<T, terms::FisherInfo>) {
                    return 0.5 * g.integrate(norm2(g.gradient(r)) / r);
                } else {
                    return g.integrate(r.log() * r);
                }
            },
            term);
    }

    static Field term_vder(const terms::Any& term, const Density& rho) {
        const Grid& g = rho.grid();
        const Field& r = rho.values();
        return std::visit(
            [&](const auto& t) -> Field {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, terms::Zero>) {
                    return g.zeros();
                } else if constexpr (std::is_same_v<T, terms::Linear>) {
                    g.check(t.V, "potential V");
                    return t.V;
                } else if constexpr (std::is_same_v<T, terms::Quadratic>) {
                    return r;
                } else if constexpr (std::is_same_v<T, terms::Barotropic>) {
                    return work_function(t.e, r);
                } else if constexpr (std::is_same_v<T, terms::Interaction>) {
                    return t.f.f(r);
                } else if constexpr (std::is_same_v<T, terms::Gravity>) {
                    return 4.0 * std::numbers::pi * t.G * g.inverse_laplacian(Field(r - g.integrate(r)));
                } else if constexpr (std::is_same_v<T, terms::FisherInfo>) {
                    const Field s = r.sqrt();
                    return -2.0 * g.laplacian(s) / s;
                } else {
                    return r.log();
                }
            },
            term);
    }

    std::vector<Term> terms_;
};

static_assert(DensityFunctional<Potential>);

// ---- two-argument state functions (fully compressible gas) -----------------------------

/// Internal energy e(rho, sigma) for the fully compressible system.
class StateFunction2 {
  public:
    enum class Kind { ideal_gas };

    /// e = exp(sigma/rho) rho^(a-1).
    static StateFunction2 ideal_gas(double a) {
        detail::require(std::isfinite(a) && a > 1.0, "ideal gas exponent must exceed 1");
        return StateFunction2(a);
    }
    static StateFunction2 parse(const std::string& spec) {
        if (spec.rfind("ideal_gas(", 0) == 0 && spec.back() == ')') {
            try {
                std::size_t used = 0;
                const std::string body = spec.substr(10, spec.size() - 11);
                const double a = std::stod(body, &used);
                if (used == body.size()) return ideal_gas(a);
            } catch (const std::exception&) {
            }
        }
        throw ConfigError("unknown two-argument state function '" + spec + "'");
    }

    double exponent() const { return a_; }

    Field e(const Field& rho, const Field& sigma) const { return (sigma / rho).exp() * rho.pow(a_ - 1.0); }
    Field e_rho(const Field& rho, const Field& sigma) const {
        return e(rho, sigma) * ((a_ - 1.0) / rho - sigma / rho.square());
    }
    Field e_sigma(const Field& rho, const Field& sigma) const { return e(rho, sigma) / rho; }

    /// P = rho^2 e_rho + sigma rho e_sigma.
    Field pressure(const Field& rho, const Field& sigma) const {
        return rho.square() * e_rho(rho, sigma) + sigma * rho * e_sigma(rho, sigma);
    }

  private:
    explicit StateFunction2(double a) : a_(a) {}
    double a_;
};

} // namespace geohydro
