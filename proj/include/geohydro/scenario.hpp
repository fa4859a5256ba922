#pragma once

// Scenario runner: JSON configuration, initial-condition catalog, dispatch to the
// steppers, diagnostics CSV and snapshot output.
//
// {
//   "schema_version": 1,
//   "system": "newton_wo",
//   "grid": {"n": 256},                       // or [64, 64], optional "length"
//   "potential": [{"kind": "barotropic", "state": "shallow"}],
//   "initial": {"theta": {"profile": "cosine-bump", "eps": 0.01, "k": 1}},
//   "dt": 1e-3, "t_end": 0.1,
//   "output": {"diagnostics_every": 1, "snapshot_every": 50},
//   "diagnostics": ["hamiltonian", "mass"]
// }

#include "geohydro/casimirs.hpp"
#include "geohydro/dynamics_fr.hpp"
#include "geohydro/dynamics_wo.hpp"
#include "geohydro/errors.hpp"
#include "geohydro/quantum.hpp"
#include "geohydro/snapshot.hpp"
#include "geohydro/transforms.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace geohydro::scenario {

using nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_positivity = 3,
    exit_blowup = 4,
    exit_numerical = 5,
    exit_io = 6,
};

class IoError : public Error {
  public:
    using Error::Error;
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return exit_config;
    if (dynamic_cast<const PositivityLoss*>(&e)) return exit_positivity;
    if (dynamic_cast<const SpectralBlowup*>(&e)) return exit_blowup;
    if (dynamic_cast<const IoError*>(&e)) return exit_io;
    if (dynamic_cast<const DomainError*>(&e) || dynamic_cast<const SolverError*>(&e)) return exit_numerical;
    return exit_failure;
}

inline const char* exit_label(int code) {
    switch (code) {
    case exit_config: return "config error";
    case exit_positivity: return "positivity loss";
    case exit_blowup: return "spectral blowup";
    case exit_numerical: return "numerical error";
    case exit_io: return "I/O error";
    default: return "error";
    }
}

namespace detail {

/// JSON object reader that remembers which keys were consumed.
class Reader {
  public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(where_ + "." + key + ": must be finite");
        return d;
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    int integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        return v.get<int>();
    }
    int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }

    const std::string& where() const { return where_; }

  private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

inline Grid parse_grid(const json& j) {
    Reader r(j, "grid");
    const json& n = r.raw("n");
    std::vector<int> sizes;
    if (n.is_number_integer()) {
        sizes.push_back(n.get<int>());
    } else if (n.is_array()) {
        for (const auto& x : n) {
            if (!x.is_number_integer()) throw ConfigError("grid.n: entries must be integers");
            sizes.push_back(x.get<int>());
        }
    } else {
        throw ConfigError("grid.n: expected an integer or an array of integers");
    }
    if (sizes.empty()) throw ConfigError("grid.n: grid size is empty");
    if (sizes.size() > 3) throw ConfigError("grid.n: at most three axes");
    std::vector<double> lengths(sizes.size(), kTwoPi);
    if (r.has("length")) {
        const json& L = r.raw("length");
        if (L.is_number()) {
            std::fill(lengths.begin(), lengths.end(), L.get<double>());
        } else if (L.is_array() && L.size() == sizes.size()) {
            for (std::size_t a = 0; a < sizes.size(); ++a) {
                if (!L[a].is_number()) throw ConfigError("grid.length: entries must be numbers");
                lengths[a] = L[a].get<double>();
            }
        } else {
            throw ConfigError("grid.length: expected a number or one entry per axis");
        }
    }
    r.finish();
    std::array<int, 3> nn{1, 1, 1};
    std::array<double, 3> ll{1.0, 1.0, 1.0};
    for (std::size_t a = 0; a < sizes.size(); ++a) {
        nn[a] = sizes[a];
        ll[a] = lengths[a];
    }
    try {
        return Grid(static_cast<int>(sizes.size()), nn, ll);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
}

// ---- initial-condition catalog -----------------------------------------------------------------

/// Phase 2 pi k x / L along one axis; k must be an integer so the profile is periodic.
inline Field axis_phase(const Grid& g, Reader& r) {
    const double k = r.number("k", 1.0);
    if (k != std::round(k)) throw ConfigError(r.where() + ".k: wavenumber must be an integer");
    const int axis = r.integer("axis", 0);
    if (axis < 0 || axis >= g.dim()) throw ConfigError(r.where() + ".axis: out of range");
    return (kTwoPi * k / g.length(axis)) * g.coordinate(axis);
}

inline Field taylor_green_vorticity(const Grid& g, double A) {
    const Field x = kTwoPi / g.length(0) * g.coordinate(0);
    const Field y = kTwoPi / g.length(1) * g.coordinate(1);
    return 2.0 * A * x.sin() * y.sin();
}

/// One scalar profile term. `role` is the field name (wkb needs to know rho from theta).
inline Field scalar_term(const Grid& g, const json& spec, const std::string& role, double base,
                         const std::string& where, bool& has_uniform) {
    Reader r(spec, where);
    const std::string profile = r.string("profile");
    Field out;
    if (profile == "uniform") {
        out = g.constant(r.number("value", base));
        has_uniform = true;
    } else if (profile == "cosine-bump") {
        const double eps = r.number("eps");
        const double shift = r.number("shift", 0.0);
        out = eps * (axis_phase(g, r) + shift).cos();
    } else if (profile == "wkb") {
        const double eps = r.number("eps");
        const Field ph = axis_phase(g, r);
        if (role == "rho")
            out = eps * ph.cos();
        else if (role == "theta")
            out = eps * ph.sin();
        else
            throw ConfigError(where + ": wkb applies to rho and theta only");
    } else if (profile == "taylor-green") {
        if (g.dim() != 2) throw ConfigError(where + ": scalar taylor-green (vorticity) needs a 2D grid");
        out = taylor_green_vorticity(g, r.number("amplitude", 1.0));
    } else if (profile == "abc") {
        throw ConfigError(where + ": abc is a vector profile");
    } else {
        throw ConfigError(where + ": unknown profile '" + profile + "'");
    }
    r.finish();
    return out;
}

/// Scalar field: a profile object or an array of profiles (summed). The field's base
/// value is added unless a uniform profile sets the level explicitly.
inline Field scalar_field(const Grid& g, const json* spec, const std::string& role, double base,
                          const std::string& where) {
    if (!spec) return g.constant(base);
    bool has_uniform = false;
    Field sum = g.zeros();
    if (spec->is_array()) {
        if (spec->empty()) throw ConfigError(where + ": empty profile list");
        for (std::size_t i = 0; i < spec->size(); ++i)
            sum += scalar_term(g, (*spec)[i], role, base, where + "[" + std::to_string(i) + "]", has_uniform);
    } else {
        sum = scalar_term(g, *spec, role, base, where, has_uniform);
    }
    return has_uniform ? sum : Field(sum + base);
}

/// Vector field: a vector profile object (abc, taylor-green, uniform) or an array with
/// one scalar spec per component. In 1D a scalar spec is accepted as well.
inline VectorField vector_field(const Grid& g, const json* spec, const std::string& where) {
    const auto d = static_cast<std::size_t>(g.dim());
    if (!spec) return VectorField(d, g.zeros());
    if (spec->is_array()) {
        if (spec->size() != d) throw ConfigError(where + ": expected " + std::to_string(d) + " components");
        VectorField v;
        for (std::size_t a = 0; a < d; ++a)
            v.push_back(scalar_field(g, &(*spec)[a], "v", 0.0, where + "[" + std::to_string(a) + "]"));
        return v;
    }
    if (!spec->is_object() || !spec->contains("profile")) throw ConfigError(where + ": expected a profile");
    const std::string profile = (*spec)["profile"].is_string() ? (*spec)["profile"].get<std::string>() : "";
    if (profile == "abc") {
        Reader r(*spec, where);
        r.string("profile");
        const double A = r.number("A", 1.0), B = r.number("B", 1.0), C = r.number("C", 1.0);
        r.finish();
        if (g.dim() != 3) throw ConfigError(where + ": abc needs a 3D grid");
        const Field x = kTwoPi / g.length(0) * g.coordinate(0);
        const Field y = kTwoPi / g.length(1) * g.coordinate(1);
        const Field z = kTwoPi / g.length(2) * g.coordinate(2);
        return {A * z.sin() + C * y.cos(), B * x.sin() + A * z.cos(), C * y.sin() + B * x.cos()};
    }
    if (profile == "taylor-green") {
        Reader r(*spec, where);
        r.string("profile");
        const double A = r.number("amplitude", 1.0);
        r.finish();
        if (g.dim() < 2) throw ConfigError(where + ": taylor-green needs a 2D or 3D grid");
        const Field x = kTwoPi / g.length(0) * g.coordinate(0);
        const Field y = kTwoPi / g.length(1) * g.coordinate(1);
        if (g.dim() == 2) return {A * x.sin() * y.cos(), -A * x.cos() * y.sin()};
        const Field z = kTwoPi / g.length(2) * g.coordinate(2);
        return {A * x.sin() * y.cos() * z.cos(), -A * x.cos() * y.sin() * z.cos(), g.zeros()};
    }
    if (d == 1) return {scalar_field(g, spec, "v", 0.0, where)};
    if (profile == "uniform") {
        Reader r(*spec, where);
        r.string("profile");
        const double value = r.number("value", 0.0);
        r.finish();
        return VectorField(d, g.constant(value));
    }
    throw ConfigError(where + ": profile '" + profile + "' is not a vector profile; list one spec per component");
}

inline Density density_field(const Grid& g, const json* spec, const std::string& role, const std::string& where) {
    const Field f = scalar_field(g, spec, role, 1.0, where);
    if (f.minCoeff() <= 0.0) throw ConfigError(where + ": initial density must be positive");
    return Density::normalized(g, f);
}

// ---- potential descriptor ----------------------------------------------------------------------

inline Potential parse_potential(const Grid& g, const json& j) {
    if (!j.is_array()) throw ConfigError("potential: expected an array of terms");
    Potential U = Potential::zero();
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = "potential[" + std::to_string(i) + "]";
        Reader r(j[i], where);
        const std::string kind = r.string("kind");
        const double w = r.number("weight", 1.0);
        Potential term;
        if (kind == "zero") {
            term = Potential::zero();
        } else if (kind == "linear") {
            term = Potential::linear(scalar_field(g, &r.raw("V"), "V", 0.0, where + ".V"));
        } else if (kind == "quadratic") {
            term = Potential::quadratic();
        } else if (kind == "barotropic") {
            term = Potential::barotropic(StateFunction::parse(r.string("state")));
        } else if (kind == "interaction") {
            term = Potential::interaction(Nonlinearity::parse(r.string("f")));
        } else if (kind == "gravity") {
            term = Potential::gravity(r.number("G", 1.0));
        } else if (kind == "fisher_info") {
            term = Potential::fisher_info();
        } else if (kind == "entropy") {
            term = Potential::entropy();
        } else {
            throw ConfigError(where + ": unknown potential kind '" + kind + "'");
        }
        r.finish();
        U = U + w * term;
    }
    return U;
}

/// Linear and interaction terms as Schrodinger parameters.
inline SchrodingerParams parse_schrodinger_potential(const Grid& g, const json& j, double hbar, double mass) {
    if (!j.is_array()) throw ConfigError("potential: expected an array of terms");
    SchrodingerParams p;
    p.hbar = hbar;
    p.mass = mass;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = "potential[" + std::to_string(i) + "]";
        Reader r(j[i], where);
        const std::string kind = r.string("kind");
        if (kind == "linear") {
            const double w = r.number("weight", 1.0);
            Field V = w * scalar_field(g, &r.raw("V"), "V", 0.0, where + ".V");
            p.V = p.V ? Field(*p.V + V) : V;
        } else if (kind == "interaction") {
            if (!p.f.is_none()) throw ConfigError(where + ": only one interaction term is supported");
            p.f = Nonlinearity::parse(r.string("f"));
        } else {
            throw ConfigError(where + ": the schrodinger system takes linear and interaction terms only");
        }
        r.finish();
    }
    return p;
}

} // namespace detail

// ---- systems -------------------------------------------------------------------------------------

/// A running simulation: a state, a stepper, named diagnostics and a snapshot view.
class System {
  public:
    using Diagnostic = std::function<double()>;

    virtual ~System() = default;
    virtual void step(double dt) = 0;
    virtual Snapshot snapshot() const = 0;

    const std::vector<std::pair<std::string, Diagnostic>>& diagnostics() const { return diags_; }

  protected:
    void add(std::string name, Diagnostic d) { diags_.emplace_back(std::move(name), std::move(d)); }
    static Snapshot empty(const Grid& g) { return Snapshot{g, 0.0, {}}; }

  private:
    std::vector<std::pair<std::string, Diagnostic>> diags_;
};

class NewtonWO : public System {
  public:
    NewtonWO(WOState s, Potential U) : s_(std::move(s)), U_(std::move(U)) {
        const Grid& g = s_.rho.grid();
        add("hamiltonian", [this] { return wo_hamiltonian(s_, U_); });
        add("mass", [this, g] { return g.integrate(s_.rho.values()); });
        add("min_rho", [this] { return s_.rho.min(); });
        add("tail", [this, g] { return g.spectral_tail_fraction(s_.rho.values()); });
    }
    void step(double dt) override { s_ = step_newton_wo(s_, U_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(s_.rho.grid());
        out.add("rho", s_.rho.values());
        out.add("theta", s_.theta.values());
        return out;
    }

  private:
    WOState s_;
    Potential U_;
};

class Eulerian : public System {
  public:
    Eulerian(EulerianState s, Potential U) : s_(std::move(s)), U_(std::move(U)) {
        const Grid& g = s_.rho.grid();
        add("energy", [this] { return eulerian_energy(s_, U_); });
        add("mass", [this, g] { return g.integrate(s_.rho.values()); });
        add("min_rho", [this] { return s_.rho.min(); });
        add("tail", [this, g] { return g.spectral_tail_fraction(s_.rho.values()); });
        if (g.dim() == 2) {
            for (auto h : {CasimirIntegrand::square, CasimirIntegrand::cube, CasimirIntegrand::quartic,
                           CasimirIntegrand::abs})
                add(std::string("casimir_") + integrand_name(h),
                    [this, g, h] { return enstrophy_family(g, g.curl2d(s_.v), s_.rho.values(), h); });
        }
        if (g.dim() == 3) add("helicity", [this, g] { return helicity(g, s_.v); });
    }
    void step(double dt) override { s_ = step_eulerian(s_, U_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(s_.rho.grid());
        for (std::size_t a = 0; a < s_.v.size(); ++a) out.add("v" + std::to_string(a), s_.v[a]);
        out.add("rho", s_.rho.values());
        return out;
    }

  private:
    EulerianState s_;
    Potential U_;
};

class FullCompressible : public System {
  public:
    FullCompressible(FullState s, StateFunction2 e) : s_(std::move(s)), e_(e) {
        const Grid& g = s_.rho.grid();
        add("energy", [this] { return full_energy(s_, e_); });
        add("mass", [this, g] { return g.integrate(s_.rho.values()); });
        add("entropy", [this, g] { return g.integrate(s_.sigma); });
        add("min_rho", [this] { return s_.rho.min(); });
        add("tail", [this, g] { return g.spectral_tail_fraction(s_.rho.values()); });
    }
    void step(double dt) override { s_ = step_full_compressible(s_, e_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(s_.rho.grid());
        out.add("v", s_.v);
        out.add("rho", s_.rho.values());
        out.add("sigma", s_.sigma);
        return out;
    }

  private:
    FullState s_;
    StateFunction2 e_;
};

class Relativistic : public System {
  public:
    Relativistic(RelState s, double c) : s_(std::move(s)), c_(c) {
        const Grid& g = s_.rho.grid();
        add("hamiltonian", [this] { return relativistic_hamiltonian(s_, c_); });
        add("kinetic", [this] { return relativistic_kinetic_energy(s_, c_); });
        add("mass", [this, g] { return g.integrate(s_.rho.values()); });
        add("min_rho", [this] { return s_.rho.min(); });
        add("tail", [this, g] { return g.spectral_tail_fraction(s_.rho.values()); });
    }
    void step(double dt) override { s_ = step_relativistic(s_, c_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(s_.rho.grid());
        out.add("m", s_.m);
        out.add("rho", s_.rho.values());
        return out;
    }

  private:
    RelState s_;
    double c_;
};

class Euler2D : public System {
  public:
    explicit Euler2D(Vorticity2D w) : w_(std::move(w)) {
        const Grid& g = w_.grid;
        add("energy", [this] { return euler2d_energy(w_); });
        for (auto h :
             {CasimirIntegrand::square, CasimirIntegrand::cube, CasimirIntegrand::quartic, CasimirIntegrand::abs})
            add(std::string("casimir_") + integrand_name(h),
                [this, h] { return enstrophy_family(w_.grid, w_.omega, h); });
        add("tail", [this, g] { return g.spectral_tail_fraction(w_.omega); });
    }
    void step(double dt) override { w_ = step_euler2d(w_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(w_.grid);
        out.add("omega", w_.omega);
        return out;
    }

  private:
    Vorticity2D w_;
};

class NewtonFR : public System {
  public:
    NewtonFR(FRState s, Potential U) : s_(std::move(s)), U_(std::move(U)) {
        const Grid& g = s_.rho.grid();
        add("hamiltonian", [this] { return fr_hamiltonian(s_, U_); });
        add("mass", [this, g] { return g.integrate(s_.rho.values()); });
        add("min_rho", [this] { return s_.rho.min(); });
        add("tail", [this, g] { return g.spectral_tail_fraction(s_.rho.values()); });
        add("lambda", [this] { return fr_multiplier(s_, U_); });
    }
    void step(double dt) override { s_ = step_newton_fr(s_, U_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(s_.rho.grid());
        out.add("rho", s_.rho.values());
        out.add("theta", s_.theta.values());
        return out;
    }

  private:
    FRState s_;
    Potential U_;
};

class Neumann : public System {
  public:
    explicit Neumann(NeumannState s) : s_(std::move(s)) {
        add("energy", [this] { return neumann_energy(s_); });
        add("lagrangian", [this] { return neumann_lagrangian(s_); });
        add("norm", [this] { return s_.grid.integrate(s_.f.square()); });
        add("lambda", [this] { return neumann_multiplier(s_.grid, s_.f, s_.f_dot); });
        add("tail", [this] { return s_.grid.spectral_tail_fraction(s_.f); });
    }
    void step(double dt) override { s_ = step_neumann(s_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(s_.grid);
        out.add("f", s_.f);
        out.add("f_dot", s_.f_dot);
        return out;
    }

  private:
    NeumannState s_;
};

class Schrodinger : public System {
  public:
    Schrodinger(Grid g, CField psi, SchrodingerParams p) : g_(std::move(g)), psi_(std::move(psi)), p_(std::move(p)) {
        add("hamiltonian", [this] { return schrodinger_hamiltonian(g_, psi_, p_); });
        add("norm", [this] { return g_.integrate(Field(psi_.abs2())); });
        add("min_rho", [this] { return psi_.abs2().minCoeff(); });
        add("tail", [this] { return g_.spectral_tail_fraction(Field(psi_.abs2())); });
    }
    void step(double dt) override { psi_ = step_schrodinger(g_, psi_, p_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(g_);
        out.add("psi", psi_);
        return out;
    }

  private:
    Grid g_;
    CField psi_;
    SchrodingerParams p_;
};

class ISE : public System {
  public:
    ISE(TwoComponentWave w, double hbar) : w_(std::move(w)), hbar_(hbar) {
        add("energy", [this] { return 0.5 * w_.grid.integrate(norm2(velocity_from_psi(w_, hbar_))); });
        add("norm_defect", [this] { return max_abs(Field(w_.pointwise_norm2() - 1.0)); });
        add("divergence", [this] { return w_.grid.norm(w_.grid.divergence(velocity_from_psi(w_, hbar_))); });
    }
    void step(double dt) override { w_ = step_ise(w_, hbar_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(w_.grid);
        out.add("psi1", w_.psi1);
        out.add("psi2", w_.psi2);
        return out;
    }

  private:
    TwoComponentWave w_;
    double hbar_;
};

class Heat : public System {
  public:
    Heat(Grid g, Field eta, double gamma) : g_(std::move(g)), eta_(std::move(eta)), gamma_(gamma) {
        add("mass", [this] { return g_.integrate(eta_); });
        add("min", [this] { return eta_.minCoeff(); });
        add("max", [this] { return eta_.maxCoeff(); });
        add("norm", [this] { return g_.norm(eta_); });
    }
    void step(double dt) override { eta_ = step_heat(g_, eta_, gamma_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(g_);
        out.add("eta", eta_);
        return out;
    }

  private:
    Grid g_;
    Field eta_;
    double gamma_;
};

class HJViscous : public System {
  public:
    HJViscous(Grid g, Field theta, double gamma) : g_(std::move(g)), theta_(std::move(theta)), gamma_(gamma) {
        add("mean", [this] { return g_.integrate(theta_); });
        add("min", [this] { return theta_.minCoeff(); });
        add("max", [this] { return theta_.maxCoeff(); });
        add("tail", [this] { return g_.spectral_tail_fraction(theta_); });
    }
    void step(double dt) override { theta_ = step_hj_viscous(g_, theta_, gamma_, dt); }
    Snapshot snapshot() const override {
        Snapshot out = empty(g_);
        out.add("theta", theta_);
        return out;
    }

  private:
    Grid g_;
    Field theta_;
    double gamma_;
};

// ---- configuration -------------------------------------------------------------------------------

struct Scenario {
    std::string system;
    Grid grid;
    double dt = 0.0;
    double t_end = 0.0;
    long steps = 0;
    int diagnostics_every = 1;
    int snapshot_every = 0;
    std::vector<std::string> diagnostics;
    std::unique_ptr<System> sim;
};

inline const std::vector<std::string>& system_names() {
    static const std::vector<std::string> names{"newton_wo", "eulerian",  "full_compressible", "relativistic",
                                                "euler2d",   "newton_fr", "neumann",           "schrodinger",
                                                "ise",       "heat",      "hj_viscous"};
    return names;
}

namespace detail {

inline const json* optional_field(Reader& init, const std::string& name) {
    return init.has(name) ? &init.raw(name) : nullptr;
}

/// Builds the initial state and the stepper. Reads the system-specific keys from `top`.
inline std::unique_ptr<System> build_system(const std::string& system, const Grid& g, Reader& top) {
    static const json empty_object = json::object();
    Reader init(top.has("initial") ? top.raw("initial") : empty_object, "initial");
    auto potential = [&] { return top.has("potential") ? parse_potential(g, top.raw("potential")) : Potential::zero(); };
    std::unique_ptr<System> sim;

    if (system == "newton_wo" || system == "newton_fr" || system == "neumann") {
        const Density rho = density_field(g, optional_field(init, "rho"), "rho", "initial.rho");
        const Field theta = scalar_field(g, optional_field(init, "theta"), "theta", 0.0, "initial.theta");
        if (system == "newton_wo") {
            sim = std::make_unique<NewtonWO>(WOState{rho, ThetaWO(g, theta)}, potential());
        } else if (system == "newton_fr") {
            sim = std::make_unique<NewtonFR>(FRState{rho, ThetaFR(theta, rho)}, potential());
        } else {
            sim = std::make_unique<Neumann>(neumann_from_fr(FRState{rho, ThetaFR(theta, rho)}));
        }
    } else if (system == "eulerian") {
        const Density rho = density_field(g, optional_field(init, "rho"), "rho", "initial.rho");
        VectorField v = vector_field(g, optional_field(init, "v"), "initial.v");
        sim = std::make_unique<Eulerian>(make_eulerian_state(std::move(v), rho), potential());
    } else if (system == "full_compressible") {
        if (g.dim() != 1) throw ConfigError("full_compressible runs on a 1D grid");
        const Density rho = density_field(g, optional_field(init, "rho"), "rho", "initial.rho");
        const VectorField v = vector_field(g, optional_field(init, "v"), "initial.v");
        const Field sigma = scalar_field(g, optional_field(init, "sigma"), "sigma", 0.0, "initial.sigma");
        const StateFunction2 e = StateFunction2::parse(top.string("state"));
        sim = std::make_unique<FullCompressible>(FullState{v[0], rho, sigma}, e);
    } else if (system == "relativistic") {
        if (g.dim() != 1) throw ConfigError("relativistic runs on a 1D grid");
        const double c = top.number("c");
        if (c <= 0.0) throw ConfigError("c must be positive");
        const Density rho = density_field(g, optional_field(init, "rho"), "rho", "initial.rho");
        const VectorField v = vector_field(g, optional_field(init, "v"), "initial.v");
        if (!(v[0].abs() < c).all()) throw ConfigError("initial.v: |v| must stay below c");
        sim = std::make_unique<Relativistic>(RelState{relativistic_momentum(v[0], rho.values(), c), rho}, c);
    } else if (system == "euler2d") {
        if (g.dim() != 2) throw ConfigError("euler2d runs on a 2D grid");
        Field omega = scalar_field(g, optional_field(init, "omega"), "omega", 0.0, "initial.omega");
        omega -= g.integrate(omega);
        sim = std::make_unique<Euler2D>(Vorticity2D(g, std::move(omega)));
    } else if (system == "schrodinger") {
        const double hbar = top.number("hbar", 2.0);
        const double mass = top.number("mass", 1.0);
        if (hbar <= 0.0) throw ConfigError("hbar must be positive");
        if (mass <= 0.0) throw ConfigError("mass must be positive");
        const Density rho = density_field(g, optional_field(init, "rho"), "rho", "initial.rho");
        const Field theta = scalar_field(g, optional_field(init, "theta"), "theta", 0.0, "initial.theta");
        SchrodingerParams p = top.has("potential")
                                  ? parse_schrodinger_potential(g, top.raw("potential"), hbar, mass)
                                  : SchrodingerParams{std::nullopt, Nonlinearity::none(), hbar, mass};
        sim = std::make_unique<Schrodinger>(g, madelung(rho, theta, hbar).values(), std::move(p));
    } else if (system == "ise") {
        if (g.dim() < 2) throw ConfigError("ise runs on a 2D or 3D grid");
        const double hbar = top.number("hbar", 1.0);
        if (hbar <= 0.0) throw ConfigError("hbar must be positive");
        const Field rho1 = scalar_field(g, optional_field(init, "rho1"), "rho1", 0.5, "initial.rho1");
        if (rho1.minCoeff() <= 0.0 || rho1.maxCoeff() >= 1.0)
            throw ConfigError("initial.rho1 must lie strictly between 0 and 1");
        const Field theta1 = scalar_field(g, optional_field(init, "theta1"), "theta1", 0.0, "initial.theta1");
        const Field theta2 = scalar_field(g, optional_field(init, "theta2"), "theta2", 0.0, "initial.theta2");
        TwoComponentWave w = two_component_madelung(g, rho1, theta1, Field(1.0 - rho1), theta2, hbar);
        sim = std::make_unique<ISE>(ise_project(w, hbar), hbar);
    } else if (system == "heat") {
        const double gamma = top.number("gamma", 1.0);
        const Field eta = scalar_field(g, optional_field(init, "eta"), "eta", 1.0, "initial.eta");
        sim = std::make_unique<Heat>(g, eta, gamma);
    } else if (system == "hj_viscous") {
        const double gamma = top.number("gamma", 1.0);
        if (gamma <= 0.0) throw ConfigError("gamma must be positive");
        const Field theta = scalar_field(g, optional_field(init, "theta"), "theta", 0.0, "initial.theta");
        sim = std::make_unique<HJViscous>(g, theta, gamma);
    } else {
        throw ConfigError("unknown system '" + system + "'");
    }
    init.finish();
    return sim;
}

} // namespace detail

/// Parses and validates a configuration and builds the initial state. Every problem is
/// reported as ConfigError, before any output is written.
inline Scenario load(const json& j) {
    detail::Reader top(j, "config");
    if (!top.has("schema_version")) throw ConfigError("config: missing schema_version");
    if (top.integer("schema_version") != kConfigSchemaVersion)
        throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
    if (top.has("name")) top.string("name");
    if (top.has("description")) top.string("description");

    Scenario sc{top.string("system"), detail::parse_grid(top.raw("grid")), 0, 0, 0, 1, 0, {}, nullptr};
    sc.dt = top.number("dt");
    sc.t_end = top.number("t_end");
    if (sc.dt <= 0.0) throw ConfigError("dt must be positive");
    if (sc.t_end < 0.0) throw ConfigError("t_end must be nonnegative");
    const double ratio = sc.t_end / sc.dt;
    sc.steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(sc.steps)) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("t_end must be a whole number of steps dt");

    if (top.has("output")) {
        detail::Reader out(top.raw("output"), "output");
        sc.diagnostics_every = out.integer("diagnostics_every", 1);
        sc.snapshot_every = out.integer("snapshot_every", 0);
        out.finish();
        if (sc.diagnostics_every < 1) throw ConfigError("output.diagnostics_every must be at least 1");
        if (sc.snapshot_every < 0) throw ConfigError("output.snapshot_every must be nonnegative");
    }

    try {
        sc.sim = detail::build_system(sc.system, sc.grid, top);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("initial state: ") + e.what());
    }

    std::vector<std::string> available;
    for (const auto& d : sc.sim->diagnostics()) available.push_back(d.first);
    if (top.has("diagnostics")) {
        const json& list = top.raw("diagnostics");
        if (!list.is_array()) throw ConfigError("diagnostics: expected an array of names");
        for (const auto& n : list) {
            if (!n.is_string()) throw ConfigError("diagnostics: expected an array of names");
            const auto name = n.get<std::string>();
            if (std::find(available.begin(), available.end(), name) == available.end()) {
                std::string msg = "diagnostics: '" + name + "' is not available for " + sc.system + " (have";
                for (const auto& a : available) msg += " " + a;
                throw ConfigError(msg + ")");
            }
            sc.diagnostics.push_back(name);
        }
    } else {
        sc.diagnostics = available;
    }
    top.finish();
    return sc;
}

inline Scenario load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed config: " + std::string(e.what()));
    }
    return load(j);
}

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string snapshot_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%06d.bin", index);
    return buf;
}

/// Runs a loaded scenario, writing diagnostics.csv and snapshots into `out_dir`.
/// Solver failures propagate as exceptions after the rows written so far are flushed.
inline void run(Scenario& sc, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    std::ofstream csv(out_dir / "diagnostics.csv");
    if (!csv) throw IoError("cannot write " + (out_dir / "diagnostics.csv").string());

    std::vector<const System::Diagnostic*> cols;
    for (const auto& name : sc.diagnostics)
        for (const auto& d : sc.sim->diagnostics())
            if (d.first == name) cols.push_back(&d.second);

    csv << "t";
    for (const auto& name : sc.diagnostics) csv << ',' << name;
    csv << '\n';

    int snap_index = 0;
    auto record = [&](long step) {
        const double t = static_cast<double>(step) * sc.dt;
        const bool last = step == sc.steps;
        if (step % sc.diagnostics_every == 0 || last) {
            csv << format_value(t);
            for (const auto* d : cols) csv << ',' << format_value((*d)());
            csv << '\n';
            csv.flush();
            if (!csv) throw IoError("write to diagnostics.csv failed");
        }
        if (sc.snapshot_every > 0 && (step % sc.snapshot_every == 0 || last)) {
            Snapshot s = sc.sim->snapshot();
            s.time = t;
            try {
                write_snapshot(out_dir / snapshot_name(snap_index++), s);
            } catch (const Error& e) {
                throw IoError(e.what());
            }
        }
    };

    record(0);
    for (long n = 1; n <= sc.steps; ++n) {
        sc.sim->step(sc.dt);
        record(n);
    }
}

} // namespace geohydro::scenario
