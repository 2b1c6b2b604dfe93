#pragma once
// Pseudo-absence background sampling: buffered bbox, 2x count, 5 km
// exclusion around presences, land mask.

#include <cstdint>
#include <vector>

#include "habitat/geo.hpp"

namespace habitat {

struct SamplePoint {
    double latitude = 0.0;
    double longitude = 0.0;
    int presence = 0;  // 0 or 1
};

// Min/max of the presences expanded by buffer_deg per axis, latitude clamped
// to [-90, 90]. Errors out if the buffered box would cross the antimeridian.
BoundingBox buffered_bbox(const std::vector<LatLon>& presences, double buffer_deg = 1.0);

struct SamplingOptions {
    double ratio = 2.0;          // absences per presence
    double exclusion_km = 5.0;   // strict: candidates at exactly this distance are rejected
    double buffer_deg = 1.0;
    std::uint64_t rng_seed = 0;
};

// Rejection-samples ceil(ratio * |presences|) points uniform in degrees over
// the buffered bbox, each on land and > exclusion_km from every presence.
// Deterministic for a fixed seed. Throws InsufficientLand once the attempt
// budget (100x target) is exhausted.
std::vector<SamplePoint> sample_pseudo_absences(const std::vector<LatLon>& presences,
                                                const LandMask& mask,
                                                const SamplingOptions& opts);

}  // namespace habitat
