#include "geohydro/snapshot.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace geohydro;
namespace ts = geohydro::test_support;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "geohydro_test_snapshot";
    fs::create_directories(dir);
    return dir / name;
}

bool bit_equal(const Field& a, const Field& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

} // namespace

TEST(Snapshot, RoundTripIsBitExact) {
    ts::Rng rng(2);
    const Grid g(2, {32, 16, 1}, {kTwoPi, 3.5, 1.0});
    Snapshot s{g, 0.125, {}};
    s.add("rho", Field(ts::smooth_field(g, rng) + 2.0));
    CField psi(g.ssize());
    psi.real() = ts::smooth_field(g, rng);
    psi.imag() = ts::smooth_field(g, rng) * 1e-300; // subnormal-adjacent values survive too
    s.add("psi", psi);
    s.add("theta", Field(ts::smooth_field(g, rng) / 3.0));

    const fs::path p = scratch("roundtrip.bin");
    write_snapshot(p, s);
    const Snapshot r = read_snapshot(p);
    EXPECT_EQ(r.grid, g);
    EXPECT_EQ(r.time, 0.125);
    ASSERT_EQ(r.fields.size(), 3u);
    EXPECT_EQ(r.fields[0].name, "rho");
    EXPECT_EQ(r.fields[1].name, "psi");
    EXPECT_TRUE(r.fields[1].is_complex());
    EXPECT_TRUE(bit_equal(r.get("rho").real(), s.get("rho").real()));
    EXPECT_TRUE(bit_equal(r.get("theta").real(), s.get("theta").real()));
    EXPECT_TRUE(bit_equal(Field(r.get("psi").complex().real()), Field(psi.real())));
    EXPECT_TRUE(bit_equal(Field(r.get("psi").complex().imag()), Field(psi.imag())));
}

TEST(Snapshot, PayloadLayoutIsRowMajorLittleEndianRealThenImaginary) {
    const Grid g(2, {16, 32, 1});
    Snapshot s{g, 0.0, {}};
    Field a = Field::LinSpaced(g.ssize(), 0.0, static_cast<double>(g.size() - 1));
    CField c(g.ssize());
    c.real() = -a;
    c.imag() = a + 0.5;
    s.add("a", a);
    s.add("c", c);
    const fs::path p = scratch("layout.bin");
    write_snapshot(p, s);
    EXPECT_EQ(fs::file_size(p), 3 * g.size() * sizeof(double));

    std::ifstream in(p, std::ios::binary);
    std::vector<unsigned char> bytes(fs::file_size(p));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    auto value = [&](std::size_t slot) {
        std::uint64_t u = 0;
        for (int b = 7; b >= 0; --b) u = (u << 8) | bytes[slot * 8 + static_cast<std::size_t>(b)];
        double d;
        std::memcpy(&d, &u, sizeof d);
        return d;
    };
    // node (i, j) sits at i * 32 + j; the last axis varies fastest
    EXPECT_EQ(g.node(33)[0], g.length(0) / 16.0);
    EXPECT_EQ(g.node(33)[1], g.length(1) / 32.0);
    EXPECT_EQ(value(33), 33.0);
    EXPECT_EQ(value(g.size() + 7), -7.0);
    EXPECT_EQ(value(2 * g.size() + 7), 7.5);

    std::ifstream hdr(sidecar_path(p));
    const auto h = nlohmann::json::parse(hdr);
    EXPECT_EQ(h["dim"], 2);
    EXPECT_EQ(h["n"], nlohmann::json::array({16, 32}));
    EXPECT_EQ(h["byte_order"], "little");
    EXPECT_EQ(h["fields"][1]["kind"], "complex");
}

TEST(Snapshot, MalformedInputsAreConfigErrors) {
    const Grid g = Grid::line(16);
    Snapshot s{g, 0.0, {}};
    s.add("f", g.constant(1.0));
    const fs::path p = scratch("bad.bin");
    write_snapshot(p, s);

    EXPECT_THROW(read_snapshot(scratch("missing.bin")), ConfigError);

    { // truncated payload
        fs::resize_file(p, 8 * 10);
        EXPECT_THROW(read_snapshot(p), Error);
    }
    write_snapshot(p, s);
    { // trailing bytes
        std::ofstream out(p, std::ios::binary | std::ios::app);
        out.write("12345678", 8);
    }
    EXPECT_THROW(read_snapshot(p), ConfigError);

    write_snapshot(p, s);
    auto rewrite_header = [&](const std::string& text) {
        std::ofstream out(sidecar_path(p));
        out << text;
    };
    rewrite_header("{not json");
    EXPECT_THROW(read_snapshot(p), ConfigError);
    rewrite_header(R"({"schema_version": 2, "dim": 1, "n": [16], "L": [6.28], "fields": []})");
    EXPECT_THROW(read_snapshot(p), ConfigError);
    rewrite_header(R"({"schema_version": 1, "dim": 1, "n": [12], "L": [6.28], "fields": []})");
    EXPECT_THROW(read_snapshot(p), ConfigError);
    rewrite_header(R"({"schema_version": 1, "dim": 2, "n": [16], "L": [6.28], "fields": []})");
    EXPECT_THROW(read_snapshot(p), ConfigError);
    rewrite_header(R"({"schema_version": 1, "dim": 1, "n": [16], "L": [6.28],
                      "fields": [{"name": "f", "kind": "quaternion"}]})");
    EXPECT_THROW(read_snapshot(p), ConfigError);
}

TEST(Snapshot, FieldLookupAndShapeChecks) {
    const Grid g = Grid::line(16);
    Snapshot s{g, 0.0, {}};
    EXPECT_THROW(s.add("f", Field(Field::Zero(8))), DomainError);
    s.add("f", g.zeros());
    EXPECT_TRUE(s.has("f"));
    EXPECT_FALSE(s.has("g"));
    EXPECT_THROW(s.get("g"), ConfigError);
}
