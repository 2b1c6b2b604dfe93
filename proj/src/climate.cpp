#include "habitat/climate.hpp"

#include "habitat/errors.hpp"

namespace habitat {

namespace {
// Standard WorldClim nomenclature.
const char* kBioLongNames[kNumBioVars] = {
    "Annual Mean Temperature",
    "Mean Diurnal Range",
    "Isothermality",
    "Temperature Seasonality",
    "Max Temperature of Warmest Month",
    "Min Temperature of Coldest Month",
    "Temperature Annual Range",
    "Mean Temperature of Wettest Quarter",
    "Mean Temperature of Driest Quarter",
    "Mean Temperature of Warmest Quarter",
    "Mean Temperature of Coldest Quarter",
    "Annual Precipitation",
    "Precipitation of Wettest Month",
    "Precipitation of Driest Month",
    "Precipitation Seasonality",
    "Precipitation of Wettest Quarter",
    "Precipitation of Driest Quarter",
    "Precipitation of Warmest Quarter",
    "Precipitation of Coldest Quarter"};
}  // namespace

std::string bio_short_name(int i) {
    if (i < 1 || i > kNumBioVars) throw UnknownVariable("BIO index out of range: " + std::to_string(i));
    return "BIO" + std::to_string(i);
}

std::string bio_long_name(int i) {
    if (i < 1 || i > kNumBioVars) throw UnknownVariable("BIO index out of range: " + std::to_string(i));
    return kBioLongNames[i - 1];
}

std::string bio_long_name(const std::string& short_name) {
    if (short_name.size() > 3 && short_name.compare(0, 3, "BIO") == 0) {
        try {
            const int i = std::stoi(short_name.substr(3));
            if (i >= 1 && i <= kNumBioVars) return kBioLongNames[i - 1];
        } catch (...) {
        }
    }
    throw UnknownVariable("not a bioclimatic variable: " + short_name);
}

std::filesystem::path bio_raster_path(const std::filesystem::path& dir,
                                      const std::string& pattern, int i) {
    std::string name = pattern;
    const auto pos = name.find("{i}");
    if (pos == std::string::npos)
        throw ConfigError("raster pattern must contain {i}: " + pattern);
    name.replace(pos, 3, std::to_string(i));
    return dir / name;
}

std::array<RasterGrid, kNumBioVars> load_bio_rasters(const std::filesystem::path& dir,
                                                     const std::string& pattern) {
    std::array<RasterGrid, kNumBioVars> out;
    for (int i = 1; i <= kNumBioVars; ++i) out[i - 1] = load_raster(bio_raster_path(dir, pattern, i));
    return out;
}

ExtractionResult extract_features(const std::vector<SamplePoint>& points,
                                  const std::array<RasterGrid, kNumBioVars>& rasters) {
    for (int i = 1; i < kNumBioVars; ++i) {
        if (!rasters[0].same_grid(rasters[i]))
            throw GridMismatch("raster " + std::to_string(i + 1) +
                               " has a different geotransform than raster 1");
    }

    ExtractionResult res;
    res.rows.reserve(points.size());
    for (const auto& p : points) {
        BioclimVector v;
        bool ok = true;
        for (int i = 0; i < kNumBioVars; ++i) {
            double val;
            try {
                val = value_at(rasters[i], p.latitude, p.longitude);
            } catch (const OutOfExtent&) {
                ok = false;
                break;
            }
            if (rasters[i].is_nodata(val)) {
                ok = false;
                break;
            }
            v.bio[i] = val;
        }
        if (ok) res.rows.emplace_back(p, v);
        else ++res.dropped_count;
    }
    return res;
}

}  // namespace habitat
