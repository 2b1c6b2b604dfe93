#pragma once
// BIO1-BIO19 feature extraction from 19 aligned rasters (WorldClim v2.1
// naming by default). Complete-case: a sample survives only if all 19
// layers have data at its cell.

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "habitat/raster.hpp"
#include "habitat/sampling.hpp"

namespace habitat {

inline constexpr int kNumBioVars = 19;

struct BioclimVector {
    std::array<double, kNumBioVars> bio{};  // BIO1..BIO19
};

// i in 1..19
std::string bio_short_name(int i);         // "BIO11"
std::string bio_long_name(int i);          // "Mean Temperature of Coldest Quarter"
std::string bio_long_name(const std::string& short_name);  // throws UnknownVariable

// Replaces "{i}" in the pattern; default pattern wc2.1_2.5m_bio_{i}.tif.
std::filesystem::path bio_raster_path(const std::filesystem::path& dir,
                                      const std::string& pattern, int i);

std::array<RasterGrid, kNumBioVars> load_bio_rasters(const std::filesystem::path& dir,
                                                     const std::string& pattern);

struct ExtractionResult {
    std::vector<std::pair<SamplePoint, BioclimVector>> rows;  // input order preserved
    int dropped_count = 0;  // points with nodata (or out of extent) in any layer
};

// All 19 rasters must share one geotransform (GridMismatch otherwise).
ExtractionResult extract_features(const std::vector<SamplePoint>& points,
                                  const std::array<RasterGrid, kNumBioVars>& rasters);

}  // namespace habitat
