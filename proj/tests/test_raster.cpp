#include <doctest.h>

#include "habitat/raster.hpp"
#include "habitat/errors.hpp"
#include "habitat/util.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace habitat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("habitat_raster_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

RasterGrid make_grid(int nrows, int ncols, double fill) {
    RasterGrid g;
    g.nrows = nrows;
    g.ncols = ncols;
    g.x_origin = 0.0;
    g.y_origin = static_cast<double>(nrows);  // cell size 1 -> extent [0,ncols]x[0,nrows]
    g.cell_size = 1.0;
    g.nodata = -9999.0;
    g.values.assign(static_cast<std::size_t>(nrows) * ncols, fill);
    return g;
}

}  // namespace

TEST_CASE("ascii grid round trip and constant fixture") {
    const auto path = temp_dir() / "const.asc";
    atomic_write_file(path, "ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 0.5\n"
                            "NODATA_value -9999\n7.5 7.5 7.5\n7.5 7.5 7.5\n7.5 7.5 7.5\n");
    const RasterGrid g = load_raster(path);
    CHECK(g.ncols == 3);
    CHECK(g.nrows == 3);
    CHECK(g.cell_size == 0.5);
    CHECK(g.y_origin == doctest::Approx(1.5));
    for (double v : g.values) CHECK(v == 7.5);

    // interior lookups all hit 7.5
    CHECK(value_at(g, 0.7, 0.7) == 7.5);
    CHECK(value_at(g, 1.49, 1.49) == 7.5);
}

TEST_CASE("ascii grid without the optional nodata line") {
    const auto path = temp_dir() / "no_nodata.asc";
    atomic_write_file(path, "ncols 2\nnrows 2\nxllcorner 1\nyllcorner 2\ncellsize 1\n"
                            "1.5 2.5\n3.5 4.5\n");
    const RasterGrid g = load_raster(path);
    CHECK(g.nodata == -9999.0);  // conventional default
    CHECK(g.values == std::vector<double>{1.5, 2.5, 3.5, 4.5});
    CHECK(g.y_origin == doctest::Approx(4.0));
}

TEST_CASE("ascii grid truncation -> CorruptFile") {
    const auto path = temp_dir() / "trunc.asc";
    atomic_write_file(path, "ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 0.5\n"
                            "NODATA_value -9999\n7.5 7.5\n");
    CHECK_THROWS_AS(load_raster(path), CorruptFile);
}

TEST_CASE("value_at column arithmetic and extent") {
    RasterGrid g = make_grid(4, 4, 0.0);
    g.cell_size = 0.5;
    g.y_origin = 2.0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) g.at(r, c) = 10.0 * r + c;

    // floor((0.74 - 0)/0.5) = col 1; row floor((2.0 - 1.9)/0.5) = 0
    CHECK(value_at(g, 1.9, 0.74) == doctest::Approx(1.0));
    CHECK_THROWS_AS(value_at(g, 5.0, 0.2), OutOfExtent);
    CHECK_THROWS_AS(value_at(g, 1.0, -0.01), OutOfExtent);
    // right/bottom boundary is exclusive under floor semantics
    CHECK_THROWS_AS(value_at(g, 0.0, 2.0), OutOfExtent);
}

TEST_CASE("nodata sentinel surfaces through value_at") {
    RasterGrid g = make_grid(2, 2, 1.0);
    g.at(0, 1) = g.nodata;
    const double v = value_at(g, 1.5, 1.5);
    CHECK(g.is_nodata(v));
    CHECK_FALSE(g.is_nodata(value_at(g, 1.5, 0.5)));
}

TEST_CASE("geotiff writer/reader round trip, all layout combinations") {
    RasterGrid g = make_grid(33, 47, 0.0);
    g.x_origin = -5.25;
    g.y_origin = 12.75;
    g.cell_size = 0.25;
    Rng rng(5);
    for (auto& v : g.values) v = std::floor(rng.uniform(-100, 100));
    g.at(3, 7) = g.nodata;

    for (const bool float32 : {true, false}) {
        for (const bool deflate : {true, false}) {
            for (const int tile : {0, 16}) {
                CAPTURE(float32);
                CAPTURE(deflate);
                CAPTURE(tile);
                GeoTiffWriteOptions opts;
                opts.float32 = float32;
                opts.deflate = deflate;
                opts.tile_size = tile;
                const auto path = temp_dir() / ("rt_" + std::to_string(float32) +
                                                std::to_string(deflate) + std::to_string(tile) + ".tif");
                save_geotiff(g, path, opts);
                const RasterGrid back = load_raster(path);
                REQUIRE(back.ncols == g.ncols);
                REQUIRE(back.nrows == g.nrows);
                CHECK(back.x_origin == g.x_origin);
                CHECK(back.y_origin == g.y_origin);
                CHECK(back.cell_size == g.cell_size);
                CHECK(back.nodata == g.nodata);
                for (std::size_t i = 0; i < g.values.size(); ++i) {
                    REQUIRE(back.values[i] == g.values[i]);  // integers survive bit-exact
                }
            }
        }
    }
}

TEST_CASE("geotiff float32 values survive exactly") {
    RasterGrid g = make_grid(5, 5, 0.0);
    Rng rng(9);
    for (auto& v : g.values) v = static_cast<float>(rng.uniform(-40.0, 40.0));
    const auto path = temp_dir() / "float_exact.tif";
    save_geotiff(g, path, {});
    const RasterGrid back = load_raster(path);
    for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(back.values[i] == g.values[i]);
}

namespace {

// hand-assembled big-endian (MM) TIFF: 3x2 Int16, one uncompressed strip
std::string big_endian_tiff() {
    auto u16 = [](std::string& s, std::uint16_t v) {
        s.push_back(static_cast<char>(v >> 8));
        s.push_back(static_cast<char>(v & 0xFF));
    };
    auto u32 = [](std::string& s, std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xFF));
    };
    auto entry = [&](std::string& s, std::uint16_t tag, std::uint16_t type, std::uint32_t count,
                     std::uint32_t value, bool value_is_short) {
        u16(s, tag);
        u16(s, type);
        u32(s, count);
        if (value_is_short) {
            u16(s, static_cast<std::uint16_t>(value));
            u16(s, 0);
        } else {
            u32(s, value);
        }
    };

    std::string s = "MM";
    u16(s, 42);
    u32(s, 8);  // IFD at byte 8

    const int n_entries = 12;
    const std::uint32_t ifd_size = 2 + n_entries * 12 + 4;
    const std::uint32_t scale_off = 8 + ifd_size;          // 3 doubles
    const std::uint32_t tie_off = scale_off + 24;          // 6 doubles
    const std::uint32_t data_off = tie_off + 48;           // 6 int16 samples

    u16(s, n_entries);
    entry(s, 256, 3, 1, 3, true);         // width
    entry(s, 257, 3, 1, 2, true);         // height
    entry(s, 258, 3, 1, 16, true);        // bits
    entry(s, 259, 3, 1, 1, true);         // no compression
    entry(s, 262, 3, 1, 1, true);         // photometric
    entry(s, 273, 4, 1, data_off, false); // strip offset
    entry(s, 277, 3, 1, 1, true);         // samples/pixel
    entry(s, 278, 3, 1, 2, true);         // rows/strip
    entry(s, 279, 4, 1, 12, false);       // strip byte count
    entry(s, 339, 3, 1, 2, true);         // signed int
    entry(s, 33550, 12, 3, scale_off, false);
    entry(s, 33922, 12, 6, tie_off, false);
    u32(s, 0);  // next IFD

    auto f64 = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int shift = 56; shift >= 0; shift -= 8) s.push_back(static_cast<char>((bits >> shift) & 0xFF));
    };
    f64(0.5);  // sx
    f64(0.5);  // sy
    f64(0.0);
    f64(0.0); f64(0.0); f64(0.0);   // tiepoint pixel
    f64(10.0); f64(55.0); f64(0.0); // tiepoint geo

    for (std::int16_t v : {100, -200, 300, -400, 500, -600}) u16(s, static_cast<std::uint16_t>(v));
    return s;
}

}  // namespace

TEST_CASE("big-endian TIFF reads with swapped values") {
    const auto path = temp_dir() / "bigendian.tif";
    atomic_write_file(path, big_endian_tiff());
    const RasterGrid g = load_raster(path);
    CHECK(g.ncols == 3);
    CHECK(g.nrows == 2);
    CHECK(g.cell_size == 0.5);
    CHECK(g.x_origin == 10.0);
    CHECK(g.y_origin == 55.0);
    const std::vector<double> expected = {100, -200, 300, -400, 500, -600};
    CHECK(g.values == expected);
}

TEST_CASE("truncated and corrupt TIFFs") {
    const auto path = temp_dir() / "short.tif";
    atomic_write_file(path, "II");
    CHECK_THROWS_AS(load_raster(path), CorruptFile);

    const auto bad_magic = temp_dir() / "bad.tif";
    atomic_write_file(bad_magic, std::string("XXXXXXXXXXXXXXXX"));
    CHECK_THROWS_AS(load_raster(bad_magic), CorruptFile);

    // valid header, truncated body
    RasterGrid g = make_grid(20, 20, 1.5);
    const auto full = temp_dir() / "full.tif";
    save_geotiff(g, full, {});
    const std::string bytes = read_file(full);
    const auto cut = temp_dir() / "cut.tif";
    atomic_write_file(cut, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_raster(cut), CorruptFile);
}

TEST_CASE("unsupported raster flavors") {
    CHECK_THROWS_AS(load_raster(temp_dir() / "missing.asc"), IoError);

    const auto odd_ext = temp_dir() / "grid.xyz";
    atomic_write_file(odd_ext, "whatever");
    CHECK_THROWS_AS(load_raster(odd_ext), UnsupportedFormat);

    GeoTiffWriteOptions opts;
    opts.tile_size = 20;  // not a multiple of 16
    CHECK_THROWS_AS(save_geotiff(make_grid(4, 4, 0.0), temp_dir() / "badtile.tif", opts),
                    ConfigError);
}
