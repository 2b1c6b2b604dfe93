#include "habitat/gbif.hpp"

#include "habitat/errors.hpp"
#include "habitat/util.hpp"
#include "habitat/json.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <set>
#include <thread>

namespace habitat {

namespace {

// GBIF issue flags that invalidate the coordinates even when hasCoordinate
// was requested
const std::set<std::string> kGeospatialIssues = {
    "ZERO_COORDINATE",          "COORDINATE_INVALID",
    "COORDINATE_OUT_OF_RANGE",  "COUNTRY_COORDINATE_MISMATCH",
    "PRESUMED_SWAPPED_COORDINATE", "PRESUMED_NEGATED_LATITUDE",
    "PRESUMED_NEGATED_LONGITUDE"};

std::pair<std::string, std::string> split_url(const std::string& url) {
    // scheme://host[:port] | path?query
    const auto scheme_end = url.find("://");
    const auto path_start = (scheme_end == std::string::npos)
                                ? url.find('/')
                                : url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

GbifClient::GbifClient(GbifConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.cache_dir.empty()) throw ConfigError("GBIF client requires a cache directory");
}

std::string GbifClient::match_url(const std::string& name) const {
    return cfg_.base_url + "/v1/species/match?name=" + url_encode(name);
}

std::string GbifClient::search_url(long long taxon_key, int offset) const {
    const int year_end = (cfg_.year_end > 0) ? cfg_.year_end : current_utc_year();
    return cfg_.base_url + "/v1/occurrence/search?taxonKey=" + std::to_string(taxon_key) +
           "&basisOfRecord=HUMAN_OBSERVATION&hasCoordinate=true&year=" +
           std::to_string(cfg_.year_start) + "," + std::to_string(year_end) +
           "&limit=" + std::to_string(cfg_.page_limit) + "&offset=" + std::to_string(offset);
}

std::filesystem::path GbifClient::cache_path(const std::string& url) const {
    return cfg_.cache_dir / "gbif" / (sha256_hex(url) + ".json");
}

std::string GbifClient::get_json(const std::string& url) {
    requested_urls_.push_back(url);
    const auto cached = cache_path(url);
    if (std::filesystem::exists(cached)) return read_file(cached);
    if (cfg_.offline) throw CacheMiss(url);

    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    client.set_connection_timeout(cfg_.timeout_s, 0);
    client.set_read_timeout(cfg_.timeout_s, 0);
    client.set_follow_location(true);

    std::string last_error = "no response";
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long>(cfg_.retry_base_delay_ms) * (1L << (attempt - 1)));
            std::this_thread::sleep_for(delay);
        }
        auto res = client.Get(path);
        if (!res) {
            last_error = "transport error (" + httplib::to_string(res.error()) + ")";
            continue;  // treat like a timeout: retry
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw NetworkError("GBIF returned HTTP " + std::to_string(res->status) + " for " + url);
        ++network_calls_;
        if (!json::accept(res->body))  // never cache an unparseable payload
            throw MalformedResponse("GBIF returned a non-JSON body for " + url);
        atomic_write_file(cached, res->body);
        return res->body;
    }
    throw NetworkError("GBIF request failed after " + std::to_string(cfg_.retries + 1) +
                       " attempts (" + last_error + "): " + url);
}

TaxonMatch GbifClient::match_taxon(const std::string& name) {
    if (name.empty()) throw ConfigError("match_taxon: empty name");
    json doc;
    try {
        doc = json::parse(get_json(match_url(name)));
    } catch (const json::parse_error& e) {
        throw MalformedResponse(std::string("GBIF match response is not JSON: ") + e.what());
    }
    TaxonMatch match;
    match.match_type = doc.value("matchType", "NONE");
    if (match.match_type == "NONE" || !doc.contains("usageKey"))
        throw NoTaxonMatch("GBIF Backbone has no match for \"" + name + "\"");
    match.usage_key = doc["usageKey"].get<long long>();
    match.matched_name = doc.value("scientificName", name);
    if (match.usage_key <= 0) throw MalformedResponse("GBIF match with non-positive usageKey");
    return match;
}

std::vector<OccurrenceRecord> GbifClient::fetch_occurrences(const TaxonMatch& taxon,
                                                            int max_records) {
    if (taxon.usage_key <= 0) throw ConfigError("fetch_occurrences: unmatched taxon");
    if (max_records < 1) throw ConfigError("fetch_occurrences: max_records must be >= 1");

    std::vector<OccurrenceRecord> records;
    int offset = 0;
    bool end_of_records = false;
    while (static_cast<int>(records.size()) < max_records && !end_of_records) {
        json page;
        try {
            page = json::parse(get_json(search_url(taxon.usage_key, offset)));
        } catch (const json::parse_error& e) {
            throw MalformedResponse(std::string("GBIF search response is not JSON: ") + e.what());
        }
        const auto& results = page.contains("results") ? page["results"] : json::array();
        if (!results.is_array())
            throw MalformedResponse("GBIF search response has a non-array results field");

        for (const auto& rec : results) {
            if (static_cast<int>(records.size()) >= max_records) break;
            if (!rec.contains("decimalLatitude") || !rec.contains("decimalLongitude")) continue;
            OccurrenceRecord r;
            r.latitude = rec["decimalLatitude"].get<double>();
            r.longitude = rec["decimalLongitude"].get<double>();
            r.year = rec.value("year", 0);
            r.event_date = rec.value("eventDate", "");
            r.dataset_source = rec.value("datasetName", rec.value("datasetKey", std::string{}));

            // re-validate the query filters locally
            if (!std::isfinite(r.latitude) || !std::isfinite(r.longitude)) continue;
            if (r.latitude < -90.0 || r.latitude > 90.0) continue;
            if (r.longitude < -180.0 || r.longitude > 180.0) continue;
            if (r.year < cfg_.year_start) continue;
            if (rec.value("basisOfRecord", "HUMAN_OBSERVATION") != "HUMAN_OBSERVATION") continue;
            bool flagged = false;
            if (rec.contains("issues"))
                for (const auto& issue : rec["issues"])
                    if (kGeospatialIssues.count(issue.get<std::string>())) {
                        flagged = true;
                        break;
                    }
            if (flagged) continue;
            records.push_back(std::move(r));
        }

        end_of_records = page.value("endOfRecords", results.empty());
        offset += cfg_.page_limit;
    }

    records = dedup_rounded(records);
    if (records.empty())
        throw EmptyResult("zero occurrence records for taxon key " + std::to_string(taxon.usage_key));
    return records;
}

std::vector<OccurrenceRecord> dedup_rounded(const std::vector<OccurrenceRecord>& records) {
    std::set<std::pair<long, long>> seen;
    std::vector<OccurrenceRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto key = std::make_pair(std::lround(r.latitude * 1e4), std::lround(r.longitude * 1e4));
        if (seen.insert(key).second) out.push_back(r);
    }
    return out;
}

}  // namespace habitat
