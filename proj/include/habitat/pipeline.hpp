#pragma once
// End-to-end orchestration: identify -> fetch -> sample -> extract ->
// discover -> infer -> explain, with per-run artifact directories and a
// JSON/Markdown habitat report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "habitat/causal.hpp"
#include "habitat/climate.hpp"
#include "habitat/explain.hpp"
#include "habitat/gbif.hpp"
#include "habitat/notears.hpp"
#include "habitat/recognition.hpp"
#include "habitat/sampling.hpp"
#include "habitat/json.hpp"

namespace habitat {

struct PipelineConfig {
    // exactly one of species_name / image_path
    std::string species_name;
    std::string image_path;
    std::string identifier_url;  // required in image mode
    double confidence_threshold = 0.80;

    std::filesystem::path cache_dir = "cache";
    std::filesystem::path climate_dir;
    std::string climate_pattern = "wc2.1_2.5m_bio_{i}.tif";
    std::filesystem::path land_mask_path;

    std::uint64_t seed = 0;
    int max_records = 1000;
    double ratio = 2.0;
    double exclusion_km = 5.0;
    double buffer_deg = 1.0;
    int k_treatments = 5;
    int n_strata = 5;
    int bootstrap = 200;
    NotearsConfig notears;
    bool offline = false;

    std::string gbif_base_url = "https://api.gbif.org";
    int gbif_year_end = 0;  // 0 -> current year

    static PipelineConfig from_json(const json& j);
    static PipelineConfig from_file(const std::filesystem::path& path);
    json to_json() const;
    void validate() const;  // throws ConfigError

    // first 12 hex chars of the config-plus-seed hash
    std::string run_id() const;
    std::string config_hash() const;
};

struct SpeciesBlock {
    std::string input_name;
    std::string matched_name;
    long long taxon_key = 0;
    std::optional<double> confidence;  // only in image mode
    std::string backend_id;
};

struct DataBlock {
    int n_presence = 0;
    int n_absence = 0;
    int n_dropped_nodata = 0;
    BoundingBox bbox;
};

struct HabitatReport {
    SpeciesBlock species;
    DataBlock data;
    WeightedDag dag;
    std::vector<CausalEstimate> effects;        // ordered by |ate| descending
    std::vector<Explanation> explanations;      // aligned with effects
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<std::string> api_queries;
    std::string started_at;
    std::string finished_at;
};

json report_to_json(const HabitatReport& report);
std::string report_to_markdown(const HabitatReport& report);
json report_schema();  // loaded from schemas/report.schema.json next to the binary or CWD

// Labeled rows with coordinates, as exported to dataset.csv.
struct Dataset {
    std::vector<SamplePoint> points;       // latitude/longitude/presence
    Eigen::MatrixXd features;              // n x 19, BIO order
    std::vector<std::string> feature_names;

    LabeledData to_labeled() const;
    DataMatrix to_matrix() const;  // features only
};

// header exactly: latitude,longitude,bio1,...,bio19,presence
std::string dataset_to_csv(const Dataset& ds);
Dataset dataset_from_csv(const std::string& csv);
void export_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset import_dataset(const std::filesystem::path& path);

// JSON serialization of intermediates (stage outputs are re-loadable)
json occurrences_to_json(const TaxonMatch& taxon, const std::vector<OccurrenceRecord>& records);
std::pair<TaxonMatch, std::vector<OccurrenceRecord>> occurrences_from_json(const json& j);
json samples_to_json(const std::vector<SamplePoint>& points, const BoundingBox& bbox);
std::pair<std::vector<SamplePoint>, BoundingBox> samples_from_json(const json& j);
json effects_to_json(const std::vector<CausalEstimate>& effects);
std::vector<CausalEstimate> effects_from_json(const json& j);
json explanations_to_json(const std::vector<Explanation>& explanations);

// Individual stages (usable standalone from the CLI).
SpeciesBlock stage_identify(const PipelineConfig& cfg);
std::pair<TaxonMatch, std::vector<OccurrenceRecord>> stage_fetch(const PipelineConfig& cfg,
                                                                 const std::string& species,
                                                                 std::vector<std::string>* urls = nullptr);
std::pair<std::vector<SamplePoint>, BoundingBox> stage_sample(
    const PipelineConfig& cfg, const std::vector<OccurrenceRecord>& occurrences);
std::pair<Dataset, int> stage_extract(const PipelineConfig& cfg,
                                      const std::vector<SamplePoint>& points);
WeightedDag stage_discover(const PipelineConfig& cfg, const Dataset& ds);
std::vector<CausalEstimate> stage_infer(const PipelineConfig& cfg, const Dataset& ds,
                                        const WeightedDag& dag);
std::vector<Explanation> stage_explain(const PipelineConfig& cfg,
                                       const std::vector<CausalEstimate>& effects,
                                       const std::string& species);

// Full run; writes report.json / report.md / dag.json / dag.dot /
// dataset.csv and stage intermediates under {cache_dir}/runs/{run_id}/.
HabitatReport run_pipeline(const PipelineConfig& cfg);

}  // namespace habitat
