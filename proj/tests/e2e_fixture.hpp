#pragma once
// Builds a hermetic pipeline workspace in a scratch directory: 19 synthetic
// bio rasters, the bundled land mask, a pre-seeded GBIF response cache from
// the recorded fixtures, and a pipeline config pointing at all of it.

#include <cmath>
#include <filesystem>
#include <string>

#include "habitat/pipeline.hpp"
#include "habitat/raster.hpp"
#include "habitat/util.hpp"
#include "habitat/json.hpp"

#include "test_support.hpp"

namespace habitat_test {

// Deterministic layer values: smooth trends plus hash-based per-cell
// texture, so layers correlate like real climate surfaces without being
// exact linear combinations of one another.
inline double bio_surface(int var, double lat, double lon) {
    const double a = 0.35 + 0.13 * var;
    const double b = 0.22 + 0.07 * ((var * 5) % 9);
    const double base = 4.0 + 1.2 * var;
    const double smooth = base + 3.0 * std::sin(a * lat + 0.6 * var) +
                          2.0 * std::cos(b * lon - 0.4 * var) +
                          1.0 * std::sin(0.31 * (lat + 0.5 * var) * (lon - 9.0) / 6.0);
    const std::uint64_t mixed = habitat::Rng::derive_seed(
        0x9E0uLL + var, (static_cast<std::uint64_t>(std::llround(lat * 1e4)) << 21) ^
                            static_cast<std::uint64_t>(std::llround((lon + 200.0) * 1e4)));
    const double texture = static_cast<double>(mixed >> 11) * 0x1.0p-53 - 0.5;
    return smooth + 1.5 * texture;
}

inline void write_bio_rasters(const std::filesystem::path& dir) {
    // lon [8, 20], lat [46, 56] at 0.25 degrees: covers the bundled mask
    habitat::RasterGrid g;
    g.ncols = 48;
    g.nrows = 40;
    g.x_origin = 8.0;
    g.y_origin = 56.0;
    g.cell_size = 0.25;
    g.nodata = -9999.0;
    g.values.resize(static_cast<std::size_t>(g.ncols) * g.nrows);
    for (int var = 1; var <= habitat::kNumBioVars; ++var) {
        for (int r = 0; r < g.nrows; ++r) {
            const double lat = g.y_origin - (r + 0.5) * g.cell_size;
            for (int c = 0; c < g.ncols; ++c) {
                const double lon = g.x_origin + (c + 0.5) * g.cell_size;
                g.at(r, c) = bio_surface(var, lat, lon);
            }
        }
        // nodata strictly inside the mask's lake hole (lat 50.5-51.5, lon
        // 12.5-13.5): land points can never fall on these cells
        for (int r = 18; r <= 21; ++r)
            for (int c = 18; c <= 21; ++c) g.at(r, c) = g.nodata;
        habitat::save_ascii_grid(g, dir / ("bio_" + std::to_string(var) + ".asc"));
    }
}

struct E2EWorkspace {
    std::filesystem::path root;
    habitat::PipelineConfig config;
    std::filesystem::path config_path;
};

inline E2EWorkspace make_e2e_workspace(const std::string& tag, std::uint64_t seed = 7) {
    E2EWorkspace ws;
    ws.root = fresh_dir(tag);
    const auto climate = ws.root / "climate";
    const auto cache = ws.root / "cache";
    std::filesystem::create_directories(climate);
    std::filesystem::create_directories(cache);
    write_bio_rasters(climate);

    const auto source = std::filesystem::path(HABITAT_SOURCE_DIR);
    std::filesystem::copy_file(source / "data/test_land_mask.geojson", ws.root / "land_mask.geojson");

    const auto fixture_dir = source / "tests/fixtures/gbif";
    const habitat::json manifest = habitat::json::parse(habitat::read_file(fixture_dir / "manifest.json"));
    for (const auto& [url, file] : manifest.items())
        seed_cache(cache, url, habitat::read_file(fixture_dir / file.get<std::string>()));

    habitat::PipelineConfig& cfg = ws.config;
    cfg.species_name = "Ajuga reptans";
    cfg.cache_dir = cache;
    cfg.climate_dir = climate;
    cfg.climate_pattern = "bio_{i}.asc";
    cfg.land_mask_path = ws.root / "land_mask.geojson";
    cfg.seed = seed;
    cfg.offline = true;
    cfg.gbif_year_end = 2025;  // pin the query year so fixture cache keys stay valid

    ws.config_path = ws.root / "config.json";
    habitat::atomic_write_file(ws.config_path, cfg.to_json().dump(2));
    return ws;
}

}  // namespace habitat_test
