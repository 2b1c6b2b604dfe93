#pragma once
// GBIF Backbone matching and filtered occurrence retrieval with an on-disk
// response cache (keyed by sha256 of the full query URL) and retrying HTTP.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace habitat {

struct TaxonMatch {
    long long usage_key = 0;
    std::string matched_name;
    std::string match_type;  // EXACT, FUZZY, HIGHERRANK, NONE
};

struct OccurrenceRecord {
    double latitude = 0.0;
    double longitude = 0.0;
    std::string event_date;  // ISO-8601 or empty
    std::string dataset_source;
    int year = 0;
};

struct GbifConfig {
    std::string base_url = "https://api.gbif.org";
    std::filesystem::path cache_dir;
    bool offline = false;
    int retries = 3;                 // retry attempts after the initial try
    int retry_base_delay_ms = 1000;  // 1 s, then 2 s, then 4 s
    int timeout_s = 30;
    int page_limit = 300;            // GBIF caps page size at 300
    int year_start = 2000;
    int year_end = 0;                // 0 -> current UTC year at run time
};

class GbifClient {
public:
    explicit GbifClient(GbifConfig cfg);

    TaxonMatch match_taxon(const std::string& name);
    std::vector<OccurrenceRecord> fetch_occurrences(const TaxonMatch& taxon, int max_records = 1000);

    // query construction, exposed so tests can pin the filter set
    std::string match_url(const std::string& name) const;
    std::string search_url(long long taxon_key, int offset) const;

    int network_calls() const { return network_calls_; }
    const std::vector<std::string>& requested_urls() const { return requested_urls_; }

private:
    std::string get_json(const std::string& url);  // cache -> network -> cache
    std::filesystem::path cache_path(const std::string& url) const;

    GbifConfig cfg_;
    int network_calls_ = 0;
    std::vector<std::string> requested_urls_;
};

// ~11 m dedup grid: coordinates rounded to 4 decimal places.
std::vector<OccurrenceRecord> dedup_rounded(const std::vector<OccurrenceRecord>& records);

}  // namespace habitat
