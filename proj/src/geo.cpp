#include "habitat/geo.hpp"

#include "habitat/errors.hpp"
#include "habitat/util.hpp"

#include <algorithm>
#include <cmath>

namespace habitat {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

double haversine_km(const LatLon& a, const LatLon& b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlam = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlam / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

void Ring::compute_bbox() {
    lon_min = lat_min = std::numeric_limits<double>::infinity();
    lon_max = lat_max = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        lon_min = std::min(lon_min, p[0]);
        lon_max = std::max(lon_max, p[0]);
        lat_min = std::min(lat_min, p[1]);
        lat_max = std::max(lat_max, p[1]);
    }
}

bool Ring::point_on_boundary(double lat, double lon) const {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double x1 = pts[i][0], y1 = pts[i][1];
        const double x2 = pts[i + 1][0], y2 = pts[i + 1][1];
        if (lon < std::min(x1, x2) || lon > std::max(x1, x2) ||
            lat < std::min(y1, y2) || lat > std::max(y1, y2))
            continue;
        const double cross = (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1);
        if (cross == 0.0) return true;
    }
    return false;
}

bool Ring::point_inside(double lat, double lon) const {
    // classic even-odd ray cast in lon/lat plane
    bool inside = false;
    const std::size_t n = pts.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double xi = pts[i][0], yi = pts[i][1];
        const double xj = pts[j][0], yj = pts[j][1];
        if ((yi > lat) != (yj > lat) &&
            lon < (xj - xi) * (lat - yi) / (yj - yi) + xi)
            inside = !inside;
    }
    return inside;
}

namespace {

Ring parse_ring(const nlohmann::json& coords) {
    Ring r;
    if (!coords.is_array() || coords.size() < 4)
        throw IoError("GeoJSON ring must be an array of at least 4 positions");
    for (const auto& pos : coords) {
        if (!pos.is_array() || pos.size() < 2)
            throw IoError("GeoJSON position must be [lon, lat]");
        r.pts.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    const auto& first = r.pts.front();
    const auto& last = r.pts.back();
    if (first[0] != last[0] || first[1] != last[1])
        throw IoError("GeoJSON ring is not closed (first vertex != last vertex)");
    r.compute_bbox();
    return r;
}

MaskPolygon parse_polygon(const nlohmann::json& rings) {
    MaskPolygon poly;
    if (!rings.is_array() || rings.empty()) throw IoError("GeoJSON Polygon has no rings");
    poly.outer = parse_ring(rings[0]);
    for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i]));
    return poly;
}

}  // namespace

LandMask LandMask::from_geojson_file(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("invalid GeoJSON in " + path.string() + ": " + e.what());
    }
    return from_geojson(doc);
}

LandMask LandMask::from_geojson(const nlohmann::json& doc) {
    LandMask mask;
    auto add_geometry = [&mask](const nlohmann::json& geom) {
        if (!geom.is_object() || !geom.contains("type")) throw IoError("GeoJSON geometry missing type");
        const std::string type = geom["type"].get<std::string>();
        if (type == "Polygon") {
            mask.polygons_.push_back(parse_polygon(geom.at("coordinates")));
        } else if (type == "MultiPolygon") {
            for (const auto& rings : geom.at("coordinates"))
                mask.polygons_.push_back(parse_polygon(rings));
        } else {
            throw IoError("unsupported GeoJSON geometry type: " + type);
        }
    };

    const std::string type = doc.value("type", "");
    if (type == "FeatureCollection") {
        for (const auto& f : doc.at("features")) {
            if (f.contains("geometry") && !f["geometry"].is_null()) add_geometry(f["geometry"]);
        }
    } else if (type == "Feature") {
        if (doc.contains("geometry") && !doc["geometry"].is_null()) add_geometry(doc["geometry"]);
    } else if (type == "Polygon" || type == "MultiPolygon") {
        add_geometry(doc);
    } else {
        throw IoError("expected GeoJSON FeatureCollection of Polygon/MultiPolygon");
    }

    mask.build_index();
    return mask;
}

void LandMask::build_index() {
    if (polygons_.empty()) return;
    double lon_min = std::numeric_limits<double>::infinity();
    double lon_max = -lon_min, lat_min = lon_min, lat_max = -lon_min;
    for (const auto& p : polygons_) {
        lon_min = std::min(lon_min, p.outer.lon_min);
        lon_max = std::max(lon_max, p.outer.lon_max);
        lat_min = std::min(lat_min, p.outer.lat_min);
        lat_max = std::max(lat_max, p.outer.lat_max);
    }
    lon0_ = lon_min;
    lat0_ = lat_min;
    const double extent = std::max(lon_max - lon_min, lat_max - lat_min);
    cell_ = std::max(extent / 64.0, 1e-9);
    nx_ = static_cast<int>(std::floor((lon_max - lon0_) / cell_)) + 1;
    ny_ = static_cast<int>(std::floor((lat_max - lat0_) / cell_)) + 1;
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (int id = 0; id < static_cast<int>(polygons_.size()); ++id) {
        const Ring& o = polygons_[id].outer;
        const int cx0 = std::clamp(static_cast<int>(std::floor((o.lon_min - lon0_) / cell_)), 0, nx_ - 1);
        const int cx1 = std::clamp(static_cast<int>(std::floor((o.lon_max - lon0_) / cell_)), 0, nx_ - 1);
        const int cy0 = std::clamp(static_cast<int>(std::floor((o.lat_min - lat0_) / cell_)), 0, ny_ - 1);
        const int cy1 = std::clamp(static_cast<int>(std::floor((o.lat_max - lat0_) / cell_)), 0, ny_ - 1);
        for (int cy = cy0; cy <= cy1; ++cy)
            for (int cx = cx0; cx <= cx1; ++cx)
                cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(id);
    }
}

bool LandMask::contains(double lat, double lon) const {
    if (polygons_.empty()) return false;
    const int cx = static_cast<int>(std::floor((lon - lon0_) / cell_));
    const int cy = static_cast<int>(std::floor((lat - lat0_) / cell_));
    if (cx < 0 || cx >= nx_ || cy < 0 || cy >= ny_) return false;
    for (int id : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) {
        const MaskPolygon& poly = polygons_[id];
        if (!poly.outer.bbox_contains(lat, lon)) continue;
        if (poly.outer.point_on_boundary(lat, lon)) return true;
        if (!poly.outer.point_inside(lat, lon)) continue;
        bool in_hole = false;
        for (const Ring& h : poly.holes) {
            if (!h.bbox_contains(lat, lon)) continue;
            if (h.point_on_boundary(lat, lon)) return true;  // hole boundary is still land
            if (h.point_inside(lat, lon)) {
                in_hole = true;
                break;
            }
        }
        if (!in_hole) return true;
    }
    return false;
}

bool point_on_land(const LatLon& p, const LandMask& mask) { return mask.contains(p.lat, p.lon); }

}  // namespace habitat
