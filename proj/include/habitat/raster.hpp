#pragma once
// Single-band raster grids with two on-disk formats: ESRI ASCII grids and a
// GeoTIFF subset (Float32/Int16, strip or tile layout, uncompressed or
// DEFLATE, ModelPixelScale + ModelTiepoint georeferencing). Covers WorldClim
// v2.1 bio layers; no reprojection or resampling.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace habitat {

struct RasterGrid {
    int ncols = 0;
    int nrows = 0;
    double x_origin = 0.0;   // upper-left corner lon
    double y_origin = 0.0;   // upper-left corner lat
    double cell_size = 0.0;  // degrees, square cells
    double nodata = std::nan("");
    std::vector<double> values;  // row-major, row 0 at the top

    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * ncols + col]; }
    double& at(int row, int col) { return values[static_cast<std::size_t>(row) * ncols + col]; }

    bool is_nodata(double v) const {
        if (std::isnan(v)) return true;
        return !std::isnan(nodata) && v == nodata;
    }

    bool same_grid(const RasterGrid& o) const {
        return ncols == o.ncols && nrows == o.nrows && x_origin == o.x_origin &&
               y_origin == o.y_origin && cell_size == o.cell_size;
    }
};

// Dispatches on extension: .asc/.txt -> ASCII grid, .tif/.tiff -> GeoTIFF.
RasterGrid load_raster(const std::filesystem::path& path);

RasterGrid load_ascii_grid(const std::filesystem::path& path);
void save_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path);

struct GeoTiffWriteOptions {
    bool float32 = true;     // false -> Int16
    bool deflate = false;    // zlib-compressed strips/tiles
    int tile_size = 0;       // 0 -> strip layout; else square tiles (multiple of 16)
    int rows_per_strip = 64;
};

RasterGrid load_geotiff(const std::filesystem::path& path);
void save_geotiff(const RasterGrid& grid, const std::filesystem::path& path,
                  const GeoTiffWriteOptions& opts = {});

// Nearest-cell lookup: col = floor((lon - x_origin)/cell), row = floor((y_origin - lat)/cell).
// Throws OutOfExtent for points outside the grid. The returned value may be
// the grid's nodata sentinel; check with grid.is_nodata().
double value_at(const RasterGrid& grid, double lat, double lon);

}  // namespace habitat
