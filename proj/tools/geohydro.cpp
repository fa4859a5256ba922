// geohydro: scenario runner and snapshot tooling.
//
//   geohydro run <config> [--out DIR]
//   geohydro transform <in> <out> --to {psi|rho-theta} [--hbar H]
//   geohydro diagnose <snapshot...>
//   geohydro test-invariants <suite> [--out FILE]

#include "geohydro/invariants.hpp"
#include "geohydro/scenario.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace geohydro;
using nlohmann::json;

namespace {

int fail(const std::exception& e) {
    const int code = scenario::exit_code_for(e);
    std::fprintf(stderr, "geohydro: %s: %s\n", scenario::exit_label(code), e.what());
    return code;
}

Snapshot load_snapshot(const std::string& path) {
    if (!fs::exists(path)) throw scenario::IoError("cannot open snapshot " + path);
    return read_snapshot(path);
}

int cmd_run(const std::string& config, std::string out) {
    std::optional<scenario::Scenario> sc;
    try {
        sc.emplace(scenario::load_file(config));
    } catch (const std::exception& e) {
        return fail(e);
    }
    if (out.empty()) out = fs::path(config).stem().string() + "_out";
    try {
        scenario::run(*sc, out);
    } catch (const std::exception& e) {
        return fail(e);
    }
    return scenario::exit_ok;
}

int cmd_transform(const std::string& in, const std::string& out, const std::string& to, double hbar) {
    try {
        const Snapshot s = load_snapshot(in);
        Snapshot r{s.grid, s.time, {}};
        if (to == "psi") {
            const Density rho(s.grid, s.get("rho").real());
            r.add("psi", madelung(rho, s.get("theta").real(), hbar).values());
        } else {
            const FluidPair p = madelung_inverse(s.grid, s.get("psi").complex(), hbar);
            r.add("rho", p.rho.values());
            r.add("theta", p.theta.values());
        }
        try {
            write_snapshot(out, r);
        } catch (const Error& e) {
            throw scenario::IoError(e.what());
        }
    } catch (const DomainError& e) {
        return fail(ConfigError(e.what()));
    } catch (const std::exception& e) {
        return fail(e);
    }
    return scenario::exit_ok;
}

std::vector<std::pair<std::string, double>> casimirs_of(const Snapshot& s) {
    std::vector<std::pair<std::string, double>> out;
    const Grid& g = s.grid;
    auto vec = [&](const std::string& stem) -> std::optional<VectorField> {
        VectorField v;
        for (int a = 0; a < g.dim(); ++a) {
            const std::string name = stem + std::to_string(a);
            if (!s.has(name)) return std::nullopt;
            v.push_back(s.get(name).real());
        }
        return v;
    };
    const std::array<CasimirIntegrand, 4> family{CasimirIntegrand::square, CasimirIntegrand::cube,
                                                 CasimirIntegrand::quartic, CasimirIntegrand::abs};
    auto enstrophies = [&](const Field& omega, const Field& rho) {
        for (auto h : family)
            out.emplace_back(std::string("casimir_") + integrand_name(h), enstrophy_family(g, omega, rho, h));
    };

    if (g.dim() == 2) {
        const Field rho = s.has("rho") ? s.get("rho").real() : g.constant(1.0);
        if (s.has("omega")) {
            enstrophies(s.get("omega").real(), rho);
        } else if (auto v = vec("v")) {
            enstrophies(g.curl2d(*v), rho);
        } else if (s.has("psi1") && s.has("psi2")) {
            const TwoComponentWave w(g, s.get("psi1").complex(), s.get("psi2").complex());
            enstrophies(g.curl2d(velocity_from_psi(w, 1.0)), g.constant(1.0));
        }
    }
    if (g.dim() == 3) {
        if (auto v = vec("v")) out.emplace_back("helicity", helicity(g, *v));
        if (auto B = vec("B")) {
            out.emplace_back("magnetic_helicity", magnetic_helicity(g, *B));
            if (auto alpha = vec("alpha")) {
                out.emplace_back("cross_helicity", cross_helicity(g, *alpha, *B));
                if (s.has("varrho"))
                    out.emplace_back("generalized_cross_helicity",
                                     gen_cross_helicity(g, *alpha, Density(g, s.get("varrho").real()), *B));
            }
        }
    }
    return out;
}

int cmd_diagnose(const std::vector<std::string>& files) {
    std::vector<std::string> rows;
    try {
        for (const auto& f : files) {
            const Snapshot s = load_snapshot(f);
            for (const auto& [name, value] : casimirs_of(s))
                rows.push_back(f + "," + name + "," + scenario::format_value(value));
        }
    } catch (const DomainError& e) {
        return fail(ConfigError(e.what()));
    } catch (const std::exception& e) {
        return fail(e);
    }
    std::cout << "file,casimir,value\n";
    for (const auto& r : rows) std::cout << r << '\n';
    return scenario::exit_ok;
}

int cmd_test_invariants(const std::string& suite, const std::string& out) {
    InvariantReport report;
    try {
        report = invariants::run_suite(suite);
    } catch (const std::exception& e) {
        return fail(e);
    }
    bool pass = !report.empty();
    json checks = json::array();
    for (const auto& c : report) {
        pass = pass && c.pass;
        checks.push_back({{"name", c.name},
                          {"criterion", c.criterion},
                          {"measured", c.measured},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass},
                          {"note", c.note}});
    }
    const json doc{{"suite", suite}, {"pass", pass}, {"checks", checks}};
    if (out.empty()) {
        std::cout << doc.dump(2) << '\n';
    } else {
        std::ofstream f(out);
        if (!f || !(f << doc.dump(2) << '\n')) return fail(scenario::IoError("cannot write " + out));
    }
    return pass ? scenario::exit_ok : scenario::exit_failure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometric hydrodynamics on densities: scenarios, transforms and invariants"};
    app.require_subcommand(1);

    std::string config, run_out;
    auto* run = app.add_subcommand("run", "Run a scenario configuration");
    run->add_option("config", config, "Scenario JSON file")->required();
    run->add_option("--out", run_out, "Output directory (default <config stem>_out)");

    std::string t_in, t_out, t_to;
    double hbar = 2.0;
    auto* transform = app.add_subcommand("transform", "Convert a snapshot between (rho, theta) and psi");
    transform->add_option("in", t_in, "Input snapshot")->required();
    transform->add_option("out", t_out, "Output snapshot")->required();
    transform->add_option("--to", t_to, "Target representation")
        ->required()
        ->check(CLI::IsMember({"psi", "rho-theta"}));
    transform->add_option("--hbar", hbar, "Planck constant")->check(CLI::PositiveNumber);

    std::vector<std::string> d_files;
    auto* diagnose = app.add_subcommand("diagnose", "Print the Casimirs of snapshots as CSV");
    diagnose->add_option("snapshots", d_files, "Snapshot files")->required();

    std::string suite, ti_out;
    auto* tinv = app.add_subcommand("test-invariants", "Run a property suite and print a JSON report");
    tinv->add_option("suite", suite, "madelung | fisher_rao | casimirs | commutation | limits | all")
        ->required()
        ->check(CLI::IsMember(invariants::suite_names()));
    tinv->add_option("--out", ti_out, "Write the report to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : scenario::exit_config;
    }

    if (*run) return cmd_run(config, run_out);
    if (*transform) return cmd_transform(t_in, t_out, t_to, hbar);
    if (*diagnose) return cmd_diagnose(d_files);
    return cmd_test_invariants(suite, ti_out);
}
