#pragma once

// Field snapshots: a JSON header sidecar (<path>.json) plus raw little-endian
// float64 node values (<path>) in row-major order. Complex fields store the
// real plane followed by the imaginary plane. Fields are concatenated in the
// order listed in the header.

#include "geohydro/errors.hpp"
#include "geohydro/grid.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace geohydro {

inline constexpr int kSnapshotSchemaVersion = 1;

struct NamedField {
    std::string name;
    std::variant<Field, CField> values;

    bool is_complex() const { return std::holds_alternative<CField>(values); }
    const Field& real() const { return std::get<Field>(values); }
    const CField& complex() const { return std::get<CField>(values); }
};

struct Snapshot {
    Grid grid;
    double time = 0.0;
    std::vector<NamedField> fields;

    bool has(const std::string& name) const {
        for (const auto& f : fields)
            if (f.name == name) return true;
        return false;
    }
    const NamedField& get(const std::string& name) const {
        for (const auto& f : fields)
            if (f.name == name) return f;
        throw ConfigError("snapshot has no field '" + name + "'");
    }
    void add(std::string name, Field f) {
        grid.check(f, name.c_str());
        fields.push_back({std::move(name), std::move(f)});
    }
    void add(std::string name, CField f) {
        grid.check(f, name.c_str());
        fields.push_back({std::move(name), std::move(f)});
    }
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
    return v;
}

inline void write_doubles(std::ofstream& out, const double* p, Eigen::Index n) {
    std::vector<std::uint64_t> buf(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        buf[static_cast<std::size_t>(i)] = to_little_endian(std::bit_cast<std::uint64_t>(p[i]));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
}

inline void read_doubles(std::ifstream& in, double* p, Eigen::Index n) {
    std::vector<std::uint64_t> buf(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (!in) throw ConfigError("snapshot payload is truncated");
    for (Eigen::Index i = 0; i < n; ++i)
        p[i] = std::bit_cast<double>(to_little_endian(buf[static_cast<std::size_t>(i)]));
}

} // namespace detail

inline std::string sidecar_path(const std::filesystem::path& data_path) {
    return data_path.string() + ".json";
}

inline nlohmann::json snapshot_header(const Snapshot& s) {
    nlohmann::json h;
    h["schema_version"] = kSnapshotSchemaVersion;
    h["dim"] = s.grid.dim();
    h["n"] = nlohmann::json::array();
    h["L"] = nlohmann::json::array();
    for (int a = 0; a < s.grid.dim(); ++a) {
        h["n"].push_back(s.grid.n(a));
        h["L"].push_back(s.grid.length(a));
    }
    h["time"] = s.time;
    h["byte_order"] = "little";
    h["fields"] = nlohmann::json::array();
    for (const auto& f : s.fields)
        h["fields"].push_back({{"name", f.name}, {"kind", f.is_complex() ? "complex" : "scalar"}});
    return h;
}

inline void write_snapshot(const std::filesystem::path& data_path, const Snapshot& s) {
    {
        std::ofstream hdr(sidecar_path(data_path));
        if (!hdr) throw Error("cannot write " + sidecar_path(data_path));
        hdr << snapshot_header(s).dump(2) << '\n';
    }
    std::ofstream out(data_path, std::ios::binary);
    if (!out) throw Error("cannot write " + data_path.string());
    for (const auto& f : s.fields) {
        if (f.is_complex()) {
            const Field re = f.complex().real();
            const Field im = f.complex().imag();
            detail::write_doubles(out, re.data(), re.size());
            detail::write_doubles(out, im.data(), im.size());
        } else {
            detail::write_doubles(out, f.real().data(), f.real().size());
        }
    }
}

inline Snapshot read_snapshot(const std::filesystem::path& data_path) {
    std::ifstream hdr(sidecar_path(data_path));
    if (!hdr) throw ConfigError("missing snapshot header " + sidecar_path(data_path));
    nlohmann::json h;
    try {
        hdr >> h;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed snapshot header: " + std::string(e.what()));
    }
    try {
        if (h.at("schema_version").get<int>() != kSnapshotSchemaVersion)
            throw ConfigError("unsupported snapshot schema version");
        const int dim = h.at("dim").get<int>();
        std::array<int, 3> n{1, 1, 1};
        std::array<double, 3> L{kTwoPi, kTwoPi, kTwoPi};
        if (dim < 1 || dim > 3 || h.at("n").size() != static_cast<std::size_t>(dim) ||
            h.at("L").size() != static_cast<std::size_t>(dim))
            throw ConfigError("snapshot header has inconsistent dim/n/L");
        for (int a = 0; a < dim; ++a) {
            n[a] = h["n"][static_cast<std::size_t>(a)].get<int>();
            L[a] = h["L"][static_cast<std::size_t>(a)].get<double>();
        }
        Snapshot s{Grid(dim, n, L), h.value("time", 0.0), {}};
        std::ifstream in(data_path, std::ios::binary);
        if (!in) throw ConfigError("missing snapshot payload " + data_path.string());
        for (const auto& fh : h.at("fields")) {
            const auto name = fh.at("name").get<std::string>();
            const auto kind = fh.at("kind").get<std::string>();
            if (kind == "scalar") {
                Field f(s.grid.ssize());
                detail::read_doubles(in, f.data(), f.size());
                s.add(name, std::move(f));
            } else if (kind == "complex") {
                Field re(s.grid.ssize()), im(s.grid.ssize());
                detail::read_doubles(in, re.data(), re.size());
                detail::read_doubles(in, im.data(), im.size());
                CField c(s.grid.ssize());
                c.real() = re;
                c.imag() = im;
                s.add(name, std::move(c));
            } else {
                throw ConfigError("unknown field kind '" + kind + "'");
            }
        }
        if (in.peek() != std::char_traits<char>::eof())
            throw ConfigError("snapshot payload is longer than its header declares");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed snapshot header: " + std::string(e.what()));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid snapshot grid: ") + e.what());
    }
}

} // namespace geohydro
