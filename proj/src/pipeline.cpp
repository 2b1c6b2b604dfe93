#include "habitat/pipeline.hpp"

#include "habitat/jsonschema.hpp"
#include "habitat/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

namespace habitat {

// ------------------------------------------------------------------- config

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    c.species_name = j.value("species_name", "");
    c.image_path = j.value("image_path", "");
    c.identifier_url = j.value("identifier_url", "");
    c.confidence_threshold = j.value("confidence_threshold", c.confidence_threshold);
    if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
    if (j.contains("climate_dir")) c.climate_dir = j["climate_dir"].get<std::string>();
    c.climate_pattern = j.value("climate_pattern", c.climate_pattern);
    if (j.contains("land_mask_path")) c.land_mask_path = j["land_mask_path"].get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.max_records = j.value("max_records", c.max_records);
    c.ratio = j.value("ratio", c.ratio);
    c.exclusion_km = j.value("exclusion_km", c.exclusion_km);
    c.buffer_deg = j.value("buffer_deg", c.buffer_deg);
    c.k_treatments = j.value("k_treatments", c.k_treatments);
    c.n_strata = j.value("n_strata", c.n_strata);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.offline = j.value("offline", c.offline);
    c.gbif_base_url = j.value("gbif_base_url", c.gbif_base_url);
    c.gbif_year_end = j.value("gbif_year_end", c.gbif_year_end);
    if (j.contains("notears")) {
        const json& nt = j["notears"];
        c.notears.lambda1 = nt.value("lambda1", c.notears.lambda1);
        c.notears.w_threshold = nt.value("w_threshold", c.notears.w_threshold);
        c.notears.h_tol = nt.value("h_tol", c.notears.h_tol);
        c.notears.rho_max = nt.value("rho_max", c.notears.rho_max);
        c.notears.center_only = !nt.value("standardize", false);
    }
    return c;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    return from_json(doc);
}

json PipelineConfig::to_json() const {
    return json{{"species_name", species_name},
                {"image_path", image_path},
                {"identifier_url", identifier_url},
                {"confidence_threshold", confidence_threshold},
                {"cache_dir", cache_dir.string()},
                {"climate_dir", climate_dir.string()},
                {"climate_pattern", climate_pattern},
                {"land_mask_path", land_mask_path.string()},
                {"seed", seed},
                {"max_records", max_records},
                {"ratio", ratio},
                {"exclusion_km", exclusion_km},
                {"buffer_deg", buffer_deg},
                {"k_treatments", k_treatments},
                {"n_strata", n_strata},
                {"bootstrap", bootstrap},
                {"offline", offline},
                {"gbif_base_url", gbif_base_url},
                {"gbif_year_end", gbif_year_end},
                {"notears",
                 {{"lambda1", notears.lambda1},
                  {"w_threshold", notears.w_threshold},
                  {"h_tol", notears.h_tol},
                  {"rho_max", notears.rho_max},
                  {"standardize", !notears.center_only}}}};
}

void PipelineConfig::validate() const {
    if (species_name.empty() == image_path.empty())
        throw ConfigError("exactly one of species_name / image_path must be set");
    if (!image_path.empty() && identifier_url.empty())
        throw ConfigError("image mode requires identifier_url");
    if (climate_dir.empty()) throw ConfigError("climate_dir is required");
    if (land_mask_path.empty()) throw ConfigError("land_mask_path is required");
    if (max_records < 1) throw ConfigError("max_records must be positive");
    if (ratio <= 0 || exclusion_km <= 0 || buffer_deg <= 0)
        throw ConfigError("ratio, exclusion_km and buffer_deg must be positive");
    if (k_treatments < 1 || n_strata < 1 || bootstrap < 0)
        throw ConfigError("k_treatments and n_strata must be positive");
}

std::string PipelineConfig::config_hash() const {
    return sha256_hex(to_json().dump());
}

std::string PipelineConfig::run_id() const {
    return sha256_hex(to_json().dump() + "#" + std::to_string(seed)).substr(0, 12);
}

// ------------------------------------------------------------------ dataset

LabeledData Dataset::to_labeled() const {
    LabeledData out;
    out.X = features;
    out.names = feature_names;
    out.y.resize(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i)
        out.y(static_cast<Eigen::Index>(i)) = points[i].presence;
    return out;
}

DataMatrix Dataset::to_matrix() const { return DataMatrix{features, feature_names}; }

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string dataset_to_csv(const Dataset& ds) {
    std::ostringstream out;
    out << "latitude,longitude";
    for (int i = 1; i <= kNumBioVars; ++i) out << ",bio" << i;
    out << ",presence\n";
    for (std::size_t r = 0; r < ds.points.size(); ++r) {
        out << format_double(ds.points[r].latitude) << "," << format_double(ds.points[r].longitude);
        for (int c = 0; c < kNumBioVars; ++c)
            out << "," << format_double(ds.features(static_cast<Eigen::Index>(r), c));
        out << "," << ds.points[r].presence << "\n";
    }
    return out.str();
}

Dataset dataset_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset CSV");

    std::string expected = "latitude,longitude";
    for (int i = 1; i <= kNumBioVars; ++i) expected += ",bio" + std::to_string(i);
    expected += ",presence";
    if (line != expected) throw IoError("dataset CSV header mismatch");

    Dataset ds;
    for (int i = 1; i <= kNumBioVars; ++i) ds.feature_names.push_back(bio_short_name(i));
    std::vector<std::array<double, kNumBioVars>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(cells, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 2 + kNumBioVars + 1) throw IoError("dataset CSV row has wrong arity");
        SamplePoint p{vals[0], vals[1], static_cast<int>(vals.back())};
        ds.points.push_back(p);
        std::array<double, kNumBioVars> feat{};
        for (int c = 0; c < kNumBioVars; ++c) feat[c] = vals[2 + c];
        rows.push_back(feat);
    }
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), kNumBioVars);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < kNumBioVars; ++c) ds.features(static_cast<Eigen::Index>(r), c) = rows[r][c];
    return ds;
}

void export_dataset(const Dataset& ds, const std::filesystem::path& path) {
    atomic_write_file(path, dataset_to_csv(ds));
}

Dataset import_dataset(const std::filesystem::path& path) {
    return dataset_from_csv(read_file(path));
}

// ------------------------------------------------- intermediate serializers

json occurrences_to_json(const TaxonMatch& taxon, const std::vector<OccurrenceRecord>& records) {
    json recs = json::array();
    for (const auto& r : records)
        recs.push_back({{"latitude", r.latitude},
                        {"longitude", r.longitude},
                        {"event_date", r.event_date},
                        {"dataset_source", r.dataset_source},
                        {"year", r.year}});
    return json{{"taxon",
                 {{"usage_key", taxon.usage_key},
                  {"matched_name", taxon.matched_name},
                  {"match_type", taxon.match_type}}},
                {"records", recs}};
}

std::pair<TaxonMatch, std::vector<OccurrenceRecord>> occurrences_from_json(const json& j) {
    TaxonMatch taxon;
    taxon.usage_key = j.at("taxon").at("usage_key").get<long long>();
    taxon.matched_name = j.at("taxon").value("matched_name", "");
    taxon.match_type = j.at("taxon").value("match_type", "EXACT");
    std::vector<OccurrenceRecord> records;
    for (const auto& r : j.at("records")) {
        records.push_back({r.at("latitude").get<double>(), r.at("longitude").get<double>(),
                           r.value("event_date", ""), r.value("dataset_source", ""),
                           r.value("year", 0)});
    }
    return {taxon, records};
}

json samples_to_json(const std::vector<SamplePoint>& points, const BoundingBox& bbox) {
    json pts = json::array();
    for (const auto& p : points)
        pts.push_back({{"latitude", p.latitude}, {"longitude", p.longitude}, {"presence", p.presence}});
    return json{{"bbox",
                 {{"lat_min", bbox.lat_min},
                  {"lat_max", bbox.lat_max},
                  {"lon_min", bbox.lon_min},
                  {"lon_max", bbox.lon_max}}},
                {"points", pts}};
}

std::pair<std::vector<SamplePoint>, BoundingBox> samples_from_json(const json& j) {
    BoundingBox bbox{j.at("bbox").at("lat_min").get<double>(), j.at("bbox").at("lat_max").get<double>(),
                     j.at("bbox").at("lon_min").get<double>(), j.at("bbox").at("lon_max").get<double>()};
    std::vector<SamplePoint> points;
    for (const auto& p : j.at("points"))
        points.push_back({p.at("latitude").get<double>(), p.at("longitude").get<double>(),
                          p.at("presence").get<int>()});
    return {points, bbox};
}

json effects_to_json(const std::vector<CausalEstimate>& effects) {
    json out = json::array();
    for (const auto& e : effects)
        out.push_back({{"treatment", e.treatment},
                       {"ate", e.ate},
                       {"se", e.se},
                       {"ci95", {e.ci95.first, e.ci95.second}},
                       {"n_strata_used", e.n_strata_used},
                       {"n_dropped", e.n_dropped},
                       {"naive_diff", e.naive_diff},
                       {"propensity_fallback", e.propensity_fallback}});
    return out;
}

std::vector<CausalEstimate> effects_from_json(const json& j) {
    std::vector<CausalEstimate> out;
    for (const auto& e : j) {
        CausalEstimate est;
        est.treatment = e.at("treatment").get<std::string>();
        est.ate = e.at("ate").get<double>();
        est.se = e.value("se", 0.0);
        if (e.contains("ci95")) est.ci95 = {e["ci95"][0].get<double>(), e["ci95"][1].get<double>()};
        est.n_strata_used = e.value("n_strata_used", 0);
        est.n_dropped = e.value("n_dropped", 0);
        est.naive_diff = e.value("naive_diff", 0.0);
        est.propensity_fallback = e.value("propensity_fallback", false);
        out.push_back(std::move(est));
    }
    return out;
}

json explanations_to_json(const std::vector<Explanation>& explanations) {
    json out = json::array();
    for (const auto& ex : explanations) {
        json item{{"variable", ex.variable},
                  {"long_name", ex.long_name},
                  {"rule_text", ex.rule_text},
                  {"source", ex.source},
                  {"ate", ex.ate}};
        item["llm_text"] = ex.llm_text ? json(*ex.llm_text) : json(nullptr);
        out.push_back(std::move(item));
    }
    return out;
}

// ------------------------------------------------------------------- stages

SpeciesBlock stage_identify(const PipelineConfig& cfg) {
    SpeciesBlock species;
    if (!cfg.species_name.empty()) {
        species.input_name = cfg.species_name;
        species.backend_id = "name";
        return species;
    }
    HttpIdentifier backend(cfg.identifier_url);
    const Identification id = identify(read_file(cfg.image_path), backend);
    const GateResult g = gate(id, cfg.confidence_threshold);
    if (!g.accepted)
        throw IdentificationRejected(
            "identification confidence " + std::to_string(g.confidence) + " not above threshold " +
            std::to_string(cfg.confidence_threshold) + " for \"" + g.scientific_name + "\"");
    species.input_name = g.scientific_name;
    species.confidence = g.confidence;
    species.backend_id = id.backend_id;
    return species;
}

std::pair<TaxonMatch, std::vector<OccurrenceRecord>> stage_fetch(const PipelineConfig& cfg,
                                                                 const std::string& species,
                                                                 std::vector<std::string>* urls) {
    GbifConfig gc;
    gc.base_url = cfg.gbif_base_url;
    gc.cache_dir = cfg.cache_dir;
    gc.offline = cfg.offline;
    gc.year_end = cfg.gbif_year_end;
    GbifClient client(gc);
    const TaxonMatch taxon = client.match_taxon(species);
    auto records = client.fetch_occurrences(taxon, cfg.max_records);
    if (urls) *urls = client.requested_urls();
    return {taxon, std::move(records)};
}

std::pair<std::vector<SamplePoint>, BoundingBox> stage_sample(
    const PipelineConfig& cfg, const std::vector<OccurrenceRecord>& occurrences) {
    std::vector<LatLon> presences;
    presences.reserve(occurrences.size());
    for (const auto& o : occurrences) presences.push_back({o.latitude, o.longitude});

    const LandMask mask = LandMask::from_geojson_file(cfg.land_mask_path);
    SamplingOptions opts;
    opts.ratio = cfg.ratio;
    opts.exclusion_km = cfg.exclusion_km;
    opts.buffer_deg = cfg.buffer_deg;
    opts.rng_seed = Rng::derive_seed(cfg.seed, 0x5A3B1E);
    const auto absences = sample_pseudo_absences(presences, mask, opts);

    std::vector<SamplePoint> points;
    points.reserve(presences.size() + absences.size());
    for (const auto& p : presences) points.push_back({p.lat, p.lon, 1});
    points.insert(points.end(), absences.begin(), absences.end());
    return {points, buffered_bbox(presences, cfg.buffer_deg)};
}

std::pair<Dataset, int> stage_extract(const PipelineConfig& cfg,
                                      const std::vector<SamplePoint>& points) {
    const auto rasters = load_bio_rasters(cfg.climate_dir, cfg.climate_pattern);
    const ExtractionResult res = extract_features(points, rasters);
    Dataset ds;
    for (int i = 1; i <= kNumBioVars; ++i) ds.feature_names.push_back(bio_short_name(i));
    ds.points.reserve(res.rows.size());
    ds.features.resize(static_cast<Eigen::Index>(res.rows.size()), kNumBioVars);
    for (std::size_t r = 0; r < res.rows.size(); ++r) {
        ds.points.push_back(res.rows[r].first);
        for (int c = 0; c < kNumBioVars; ++c)
            ds.features(static_cast<Eigen::Index>(r), c) = res.rows[r].second.bio[c];
    }
    return {std::move(ds), res.dropped_count};
}

WeightedDag stage_discover(const PipelineConfig& cfg, const Dataset& ds) {
    return notears_fit(ds.to_matrix(), cfg.notears);
}

std::vector<CausalEstimate> stage_infer(const PipelineConfig& cfg, const Dataset& ds,
                                        const WeightedDag& dag) {
    const LabeledData labeled = ds.to_labeled();
    const Digraph graph = augment_with_outcome(dag);
    const auto treatments = select_treatments(labeled, cfg.k_treatments);

    std::vector<CausalEstimate> effects;
    effects.reserve(treatments.size());
    for (std::size_t i = 0; i < treatments.size(); ++i) {
        CausalQuery query;
        query.treatment = treatments[i];
        query.adjustment_set = backdoor_adjustment_set(graph, treatments[i]);
        StratifiedAteOptions opts;
        opts.n_strata = cfg.n_strata;
        opts.bootstrap = cfg.bootstrap;
        opts.rng_seed = Rng::derive_seed(cfg.seed, 0xA7E000 + i);
        effects.push_back(stratified_ate(labeled, query, opts));
    }
    std::sort(effects.begin(), effects.end(), [](const CausalEstimate& a, const CausalEstimate& b) {
        if (std::abs(a.ate) != std::abs(b.ate)) return std::abs(a.ate) > std::abs(b.ate);
        return a.treatment < b.treatment;
    });
    return effects;
}

std::vector<Explanation> stage_explain(const PipelineConfig& cfg,
                                       const std::vector<CausalEstimate>& effects,
                                       const std::string& species) {
    (void)cfg;
    return make_explanations(effects, species, LlmConfig::from_env());
}

// ------------------------------------------------------------------- report

json report_to_json(const HabitatReport& report) {
    json species{{"input_name", report.species.input_name},
                 {"matched_name", report.species.matched_name},
                 {"taxon_key", report.species.taxon_key},
                 {"backend_id", report.species.backend_id}};
    species["confidence"] = report.species.confidence ? json(*report.species.confidence) : json(nullptr);

    return json{{"species", species},
                {"data",
                 {{"n_presence", report.data.n_presence},
                  {"n_absence", report.data.n_absence},
                  {"n_dropped_nodata", report.data.n_dropped_nodata},
                  {"bbox",
                   {{"lat_min", report.data.bbox.lat_min},
                    {"lat_max", report.data.bbox.lat_max},
                    {"lon_min", report.data.bbox.lon_min},
                    {"lon_max", report.data.bbox.lon_max}}}}},
                {"dag", dag_to_json(report.dag)},
                {"effects", effects_to_json(report.effects)},
                {"explanations", explanations_to_json(report.explanations)},
                {"provenance",
                 {{"seed", report.seed},
                  {"config_hash", report.config_hash},
                  {"api_queries", report.api_queries},
                  {"started_at", report.started_at},
                  {"finished_at", report.finished_at}}}};
}

std::string report_to_markdown(const HabitatReport& report) {
    std::ostringstream md;
    md << "# Habitat report: " << report.species.matched_name << "\n\n";
    md << "Generated at " << report.finished_at << " (seed " << report.seed << ", config "
       << report.config_hash.substr(0, 12) << ")\n\n";
    md << "## Species\n\n"
       << "- Input: " << report.species.input_name << "\n"
       << "- GBIF Backbone match: " << report.species.matched_name << " (taxon key "
       << report.species.taxon_key << ")\n";
    if (report.species.confidence)
        md << "- Identifier confidence: " << *report.species.confidence << "\n";
    md << "\n## Data\n\n"
       << "- Presences: " << report.data.n_presence << "\n"
       << "- Pseudo-absences: " << report.data.n_absence << "\n"
       << "- Dropped (nodata): " << report.data.n_dropped_nodata << "\n"
       << "- Region: lat [" << report.data.bbox.lat_min << ", " << report.data.bbox.lat_max
       << "], lon [" << report.data.bbox.lon_min << ", " << report.data.bbox.lon_max << "]\n";
    md << "\n## Environmental DAG\n\n"
       << "Threshold " << report.dag.threshold_used << "; " << report.dag.edges().size()
       << " edges.\n\n";
    for (const auto& [i, j] : report.dag.edges())
        md << "- " << report.dag.column_names[i] << " -> " << report.dag.column_names[j] << " ("
           << report.dag.W(i, j) << ")\n";
    md << "\n## Causal effects on presence\n\n"
       << "| Variable | ATE | 95% CI | SE | Strata | Naive diff |\n"
       << "|---|---|---|---|---|---|\n";
    for (const auto& e : report.effects) {
        char row[256];
        std::snprintf(row, sizeof(row), "| %s | %.4f | [%.4f, %.4f] | %.4f | %d | %.4f |\n",
                      e.treatment.c_str(), e.ate, e.ci95.first, e.ci95.second, e.se,
                      e.n_strata_used, e.naive_diff);
        md << row;
    }
    md << "\n## Explanations\n\n";
    for (const auto& ex : report.explanations) {
        md << "### " << ex.variable << " — " << ex.long_name << "\n\n"
           << "- Rule: " << ex.rule_text << "\n";
        if (ex.llm_text) md << "- LLM: " << *ex.llm_text << "\n";
        md << "\n";
    }
    return md.str();
}

json report_schema() {
    namespace fs = std::filesystem;
    const std::vector<fs::path> candidates = {
        "schemas/report.schema.json",
        fs::path(__FILE__).parent_path().parent_path() / "schemas/report.schema.json"};
    for (const auto& p : candidates)
        if (fs::exists(p)) return json::parse(read_file(p));
    throw IoError("report.schema.json not found (looked in ./schemas and the source tree)");
}

// ---------------------------------------------------------------------- run

HabitatReport run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    HabitatReport report;
    report.started_at = iso8601_now();
    report.seed = cfg.seed;
    report.config_hash = cfg.config_hash();

    const std::filesystem::path run_dir = cfg.cache_dir / "runs" / cfg.run_id();
    std::filesystem::create_directories(run_dir);
    auto persist = [&run_dir](const std::string& name, const std::string& content) {
        atomic_write_file(run_dir / name, content);
    };

    std::string stage = "identify";
    try {
        report.species = stage_identify(cfg);
        persist("identification.json", json{{"input_name", report.species.input_name},
                                            {"backend_id", report.species.backend_id},
                                            {"confidence", report.species.confidence
                                                               ? json(*report.species.confidence)
                                                               : json(nullptr)}}
                                           .dump(2));

        stage = "fetch";
        auto [taxon, occurrences] = stage_fetch(cfg, report.species.input_name, &report.api_queries);
        report.species.matched_name = taxon.matched_name;
        report.species.taxon_key = taxon.usage_key;
        persist("occurrences.json", occurrences_to_json(taxon, occurrences).dump(2));

        stage = "sample";
        auto [points, bbox] = stage_sample(cfg, occurrences);
        report.data.bbox = bbox;
        persist("samples.json", samples_to_json(points, bbox).dump(2));

        stage = "extract";
        auto [dataset, dropped] = stage_extract(cfg, points);
        report.data.n_dropped_nodata = dropped;
        for (const auto& p : dataset.points) (p.presence ? report.data.n_presence
                                                         : report.data.n_absence)++;
        persist("dataset.csv", dataset_to_csv(dataset));

        stage = "discover";
        report.dag = stage_discover(cfg, dataset);
        persist("dag.json", dag_to_json(report.dag).dump(2));
        persist("dag.dot", dag_to_dot(report.dag));

        stage = "infer";
        report.effects = stage_infer(cfg, dataset, report.dag);
        persist("effects.json", effects_to_json(report.effects).dump(2));

        stage = "explain";
        report.explanations = stage_explain(cfg, report.effects, report.species.matched_name);
        persist("explanations.json", explanations_to_json(report.explanations).dump(2));
    } catch (const Error& e) {
        // typed errors keep their category for exit codes; partial artifacts
        // under the run directory are left in place for debugging
        std::cerr << "[pipeline] stage " << stage << " failed: " << e.what() << "\n";
        throw;
    } catch (const std::exception& e) {
        throw Error("stage " + stage + " failed: " + e.what());
    }

    report.finished_at = iso8601_now();
    persist("report.json", report_to_json(report).dump(2));
    persist("report.md", report_to_markdown(report));
    return report;
}

}  // namespace habitat
