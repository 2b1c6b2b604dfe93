#pragma once
// Geographic primitives: great-circle distance, bounding boxes, and a
// GeoJSON land mask with bbox-prefiltered ray-casting point-in-polygon.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "habitat/json.hpp"

namespace habitat {

constexpr double kEarthRadiusKm = 6371.0;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

struct BoundingBox {
    double lat_min = 0.0, lat_max = 0.0;
    double lon_min = 0.0, lon_max = 0.0;

    bool contains(double lat, double lon) const {
        return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
    }
};

// Great-circle distance in km, Earth radius 6371.0 km.
double haversine_km(const LatLon& a, const LatLon& b);

// Closed ring of lon/lat vertices (first == last) with its bbox.
struct Ring {
    std::vector<std::array<double, 2>> pts;  // [lon, lat]
    double lon_min = 0, lon_max = 0, lat_min = 0, lat_max = 0;

    void compute_bbox();
    bool bbox_contains(double lat, double lon) const {
        return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
    }
    bool point_on_boundary(double lat, double lon) const;
    bool point_inside(double lat, double lon) const;  // ray casting, boundary not guaranteed
};

struct MaskPolygon {
    Ring outer;
    std::vector<Ring> holes;  // interior rings are water
};

class LandMask {
public:
    LandMask() = default;

    static LandMask from_geojson_file(const std::filesystem::path& path);
    static LandMask from_geojson(const nlohmann::json& doc);

    // Boundary points count as land; points inside a hole do not.
    bool contains(double lat, double lon) const;

    bool empty() const { return polygons_.empty(); }
    std::size_t polygon_count() const { return polygons_.size(); }

private:
    void build_index();

    std::vector<MaskPolygon> polygons_;

    // coarse uniform grid over the mask extent; cells hold candidate polygon ids
    double lon0_ = 0, lat0_ = 0, cell_ = 0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> cells_;
};

bool point_on_land(const LatLon& p, const LandMask& mask);

}  // namespace habitat
