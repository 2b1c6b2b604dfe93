#include "habitat/sampling.hpp"

#include "habitat/errors.hpp"
#include "habitat/util.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace habitat {

BoundingBox buffered_bbox(const std::vector<LatLon>& presences, double buffer_deg) {
    if (presences.empty()) throw EmptyPresences("buffered_bbox requires at least one presence");
    BoundingBox b;
    b.lat_min = b.lon_min = std::numeric_limits<double>::infinity();
    b.lat_max = b.lon_max = -std::numeric_limits<double>::infinity();
    for (const auto& p : presences) {
        b.lat_min = std::min(b.lat_min, p.lat);
        b.lat_max = std::max(b.lat_max, p.lat);
        b.lon_min = std::min(b.lon_min, p.lon);
        b.lon_max = std::max(b.lon_max, p.lon);
    }
    b.lat_min = std::max(b.lat_min - buffer_deg, -90.0);
    b.lat_max = std::min(b.lat_max + buffer_deg, 90.0);
    b.lon_min -= buffer_deg;
    b.lon_max += buffer_deg;
    if (b.lon_min < -180.0 || b.lon_max > 180.0)
        throw Error("buffered bbox crosses the antimeridian; not supported");
    return b;
}

namespace {

// 0.1-degree grid over presence points for fast neighbor rejection. A 0.1
// degree latitude step is ~11.1 km, so a 1-cell lat ring always covers 5 km;
// the lon ring width is widened by 1/cos(lat).
class PresenceGrid {
public:
    explicit PresenceGrid(const std::vector<LatLon>& pts) : pts_(pts) {
        for (int i = 0; i < static_cast<int>(pts.size()); ++i)
            cells_[key(pts[i].lat, pts[i].lon)].push_back(i);
    }

    // true iff no presence lies within `radius_km` (strict: distance must exceed it)
    bool clear_of(const LatLon& q, double radius_km) const {
        const double abs_lat = std::min(std::abs(q.lat) + 0.2, 89.9);
        const double km_per_lon_cell = 11.1195 * std::cos(abs_lat * 0.017453292519943295);
        const int dlat = static_cast<int>(std::ceil(radius_km / 11.1195));
        const int dlon = (km_per_lon_cell < 0.05)
                             ? 1800  // near-polar: scan everything in that band
                             : static_cast<int>(std::ceil(radius_km / km_per_lon_cell));
        const long qr = cell_coord(q.lat);
        const long qc = cell_coord(q.lon);
        for (long r = qr - dlat; r <= qr + dlat; ++r) {
            for (long c = qc - dlon; c <= qc + dlon; ++c) {
                auto it = cells_.find((r << 20) ^ (c & 0xFFFFF));
                if (it == cells_.end()) continue;
                for (int i : it->second) {
                    if (haversine_km(q, pts_[i]) <= radius_km) return false;
                }
            }
        }
        return true;
    }

private:
    static long cell_coord(double deg) { return static_cast<long>(std::floor(deg / 0.1)); }
    static long key(double lat, double lon) { return (cell_coord(lat) << 20) ^ (cell_coord(lon) & 0xFFFFF); }

    const std::vector<LatLon>& pts_;
    std::unordered_map<long, std::vector<int>> cells_;
};

}  // namespace

std::vector<SamplePoint> sample_pseudo_absences(const std::vector<LatLon>& presences,
                                                const LandMask& mask,
                                                const SamplingOptions& opts) {
    if (presences.empty()) throw EmptyPresences("sampling requires at least one presence");
    const BoundingBox bbox = buffered_bbox(presences, opts.buffer_deg);
    const auto target =
        static_cast<std::size_t>(std::ceil(opts.ratio * static_cast<double>(presences.size())));
    const std::size_t budget = 100 * target;

    PresenceGrid grid(presences);
    Rng rng(opts.rng_seed);

    std::vector<SamplePoint> out;
    out.reserve(target);
    for (std::size_t attempt = 0; attempt < budget && out.size() < target; ++attempt) {
        LatLon q{rng.uniform(bbox.lat_min, bbox.lat_max), rng.uniform(bbox.lon_min, bbox.lon_max)};
        if (!mask.contains(q.lat, q.lon)) continue;
        if (!grid.clear_of(q, opts.exclusion_km)) continue;
        out.push_back({q.lat, q.lon, 0});
    }
    if (out.size() < target)
        throw InsufficientLand("pseudo-absence budget exhausted: placed " + std::to_string(out.size()) +
                               " of " + std::to_string(target) +
                               " points; region is mostly water or within the exclusion radius");
    return out;
}

}  // namespace habitat
