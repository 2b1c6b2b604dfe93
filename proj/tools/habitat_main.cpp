// habitat: species image/name -> occurrences -> pseudo-absences -> bioclim
// features -> environmental DAG -> backdoor-adjusted ATEs -> explanations.
// Each stage is runnable standalone on persisted intermediates.

#include <CLI11.hpp>

#include "habitat/jsonschema.hpp"
#include "habitat/pipeline.hpp"
#include "habitat/synth.hpp"
#include "habitat/util.hpp"

#include <cstdio>
#include <iostream>

namespace {

using habitat::json;

habitat::PipelineConfig load_config(const std::string& config_path) {
    if (config_path.empty()) return {};
    return habitat::PipelineConfig::from_file(config_path);
}

void write_json(const std::string& path, const json& doc) {
    habitat::atomic_write_file(path, doc.dump(2) + "\n");
    std::cout << "wrote " << path << "\n";
}

int run_synth_bench(const std::string& spec_path, int trials, const std::string& out_path) {
    habitat::SyntheticSpec base = spec_path.empty()
                                      ? habitat::SyntheticSpec{}
                                      : habitat::SyntheticSpec::from_json(
                                            json::parse(habitat::read_file(spec_path)));
    json results = json::array();
    int shd_sum = 0, covered = 0, with_truth = 0;
    double abs_err_sum = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        habitat::SyntheticSpec spec = base;
        spec.seed = habitat::Rng::derive_seed(base.seed, static_cast<std::uint64_t>(trial));
        if (spec.presence_coeffs.empty()) spec.presence_coeffs = {{0, 0.5}};

        const habitat::SemSample sem = habitat::generate_sem(spec);
        const Eigen::VectorXd y = habitat::generate_presence(sem.data, spec);

        habitat::WeightedDag learned = habitat::notears_fit(sem.data);
        const int dist = habitat::shd(learned, sem.dag);
        shd_sum += dist;

        const int treatment = spec.presence_coeffs.begin()->first;
        const double truth = habitat::oracle_ate(spec, treatment, 100000);
        habitat::LabeledData data{sem.data.X, sem.data.column_names, y};
        habitat::CausalQuery query;
        query.treatment = sem.data.column_names[treatment];
        // adjust for the ground-truth backdoor set, as the pipeline would
        // with a perfectly recovered graph
        query.adjustment_set = habitat::backdoor_adjustment_set(
            habitat::augment_with_outcome(sem.dag), query.treatment);
        habitat::StratifiedAteOptions opts;
        opts.rng_seed = spec.seed;
        const habitat::CausalEstimate est = habitat::stratified_ate(data, query, opts);
        const double err = std::abs(est.ate - truth);
        abs_err_sum += err;
        const bool cover = est.ci95.first <= truth && truth <= est.ci95.second;
        covered += cover ? 1 : 0;
        ++with_truth;

        std::printf("trial %2d  seed %llu  shd %d  ate %+.4f  oracle %+.4f  |err| %.4f  ci %s\n",
                    trial, static_cast<unsigned long long>(spec.seed), dist, est.ate, truth, err,
                    cover ? "covers" : "misses");
        results.push_back({{"trial", trial},
                           {"seed", spec.seed},
                           {"shd", dist},
                           {"ate", est.ate},
                           {"oracle_ate", truth},
                           {"abs_error", err},
                           {"ci_covers_oracle", cover}});
    }
    std::printf("summary: mean shd %.2f  mean |ate err| %.4f  oracle coverage %d/%d\n",
                static_cast<double>(shd_sum) / trials, abs_err_sum / with_truth, covered, with_truth);
    if (!out_path.empty())
        write_json(out_path, json{{"spec", base.to_json()},
                                  {"trials", results},
                                  {"mean_shd", static_cast<double>(shd_sum) / trials},
                                  {"mean_abs_ate_error", abs_err_sum / with_truth},
                                  {"oracle_coverage", static_cast<double>(covered) / with_truth}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"habitat: visual-to-causal species habitat analysis"};
    app.require_subcommand(1);

    std::string config_path, species, image_path, backend_url, out_path;
    std::string occurrences_path, samples_path, dataset_path, dag_path, effects_path;
    std::string spec_path;
    std::uint64_t seed = 0;
    bool seed_set = false, offline = false;
    int trials = 20;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "pipeline config JSON");
        cmd->add_option_function<std::uint64_t>(
               "--seed", [&](std::uint64_t s) { seed = s; seed_set = true; }, "RNG seed override");
        cmd->add_flag("--offline", offline, "never touch the network; fail on cache misses");
    };

    CLI::App* cmd_run = app.add_subcommand("run", "full pipeline from a config file");
    add_common(cmd_run);
    cmd_run->add_option("--species", species, "species name override (bypasses recognition)");

    CLI::App* cmd_identify = app.add_subcommand("identify", "identify a species image");
    cmd_identify->add_option("--image", image_path, "image file")->required();
    cmd_identify->add_option("--backend-url", backend_url, "identifier service base URL")->required();
    double threshold = 0.80;
    cmd_identify->add_option("--threshold", threshold, "confidence gate (strictly above)");
    cmd_identify->add_option("--out", out_path, "write identification JSON here");

    CLI::App* cmd_fetch = app.add_subcommand("fetch", "resolve taxon and fetch occurrences");
    add_common(cmd_fetch);
    cmd_fetch->add_option("--species", species, "scientific name")->required();
    cmd_fetch->add_option("--out", out_path, "occurrences JSON output path");

    CLI::App* cmd_sample = app.add_subcommand("sample", "generate pseudo-absences");
    add_common(cmd_sample);
    cmd_sample->add_option("--occurrences", occurrences_path, "occurrences JSON")->required();
    std::string land_mask;
    cmd_sample->add_option("--land-mask", land_mask, "GeoJSON land polygons");
    cmd_sample->add_option("--out", out_path, "samples JSON output path");

    CLI::App* cmd_extract = app.add_subcommand("extract", "extract BIO1-BIO19 features");
    add_common(cmd_extract);
    cmd_extract->add_option("--samples", samples_path, "samples JSON")->required();
    std::string climate_dir;
    cmd_extract->add_option("--climate-dir", climate_dir, "directory with 19 bio rasters");
    cmd_extract->add_option("--out", out_path, "dataset CSV output path");

    CLI::App* cmd_discover = app.add_subcommand("discover", "learn the environmental DAG");
    add_common(cmd_discover);
    cmd_discover->add_option("--dataset", dataset_path, "dataset CSV")->required();
    double lambda1 = -1, w_threshold = -1;
    bool standardize = false;
    cmd_discover->add_option("--lambda1", lambda1, "L1 strength");
    cmd_discover->add_option("--w-threshold", w_threshold, "edge weight threshold");
    cmd_discover->add_flag("--standardize", standardize, "rescale columns to unit variance");
    cmd_discover->add_option("--out", out_path, "DAG JSON output path");

    CLI::App* cmd_infer = app.add_subcommand("infer", "estimate treatment effects");
    add_common(cmd_infer);
    cmd_infer->add_option("--dataset", dataset_path, "dataset CSV")->required();
    cmd_infer->add_option("--dag", dag_path, "DAG JSON")->required();
    int k_treatments = -1;
    cmd_infer->add_option("--k", k_treatments, "number of treatments");
    cmd_infer->add_option("--out", out_path, "effects JSON output path");

    CLI::App* cmd_explain = app.add_subcommand("explain", "render explanations");
    add_common(cmd_explain);
    cmd_explain->add_option("--effects", effects_path, "effects JSON")->required();
    cmd_explain->add_option("--species", species, "species display name")->required();
    cmd_explain->add_option("--out", out_path, "explanations JSON output path");

    CLI::App* cmd_synth = app.add_subcommand("synth", "ground-truth benchmark trials");
    cmd_synth->add_option("--spec", spec_path, "synthetic spec JSON");
    cmd_synth->add_option("--trials", trials, "number of seeded trials");
    cmd_synth->add_option("--out", out_path, "machine-readable results JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        habitat::PipelineConfig cfg = load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (offline) cfg.offline = true;
        if (!land_mask.empty()) cfg.land_mask_path = land_mask;
        if (!climate_dir.empty()) cfg.climate_dir = climate_dir;
        if (lambda1 >= 0) cfg.notears.lambda1 = lambda1;
        if (w_threshold >= 0) cfg.notears.w_threshold = w_threshold;
        if (standardize) cfg.notears.center_only = false;
        if (k_treatments > 0) cfg.k_treatments = k_treatments;

        if (cmd_run->parsed()) {
            if (!species.empty()) {
                cfg.species_name = species;
                cfg.image_path.clear();
            }
            const habitat::HabitatReport report = habitat::run_pipeline(cfg);
            const auto run_dir = cfg.cache_dir / "runs" / cfg.run_id();
            std::cout << "run " << cfg.run_id() << " complete: " << report.data.n_presence
                      << " presences, " << report.data.n_absence << " absences, "
                      << report.dag.edges().size() << " DAG edges, " << report.effects.size()
                      << " effects\nartifacts: " << run_dir.string() << "\n";
            return 0;
        }
        if (cmd_identify->parsed()) {
            habitat::HttpIdentifier backend(backend_url);
            const auto id = habitat::identify(habitat::read_file(image_path), backend);
            const auto g = habitat::gate(id, threshold);
            json doc{{"scientific_name", id.scientific_name},
                     {"confidence", id.confidence},
                     {"backend_id", id.backend_id},
                     {"accepted", g.accepted}};
            std::cout << doc.dump(2) << "\n";
            if (!out_path.empty()) write_json(out_path, doc);
            return g.accepted ? 0 : 3;
        }
        if (cmd_fetch->parsed()) {
            auto [taxon, records] = habitat::stage_fetch(cfg, species);
            std::cout << "matched \"" << taxon.matched_name << "\" (key " << taxon.usage_key
                      << "), " << records.size() << " records\n";
            if (!out_path.empty()) write_json(out_path, habitat::occurrences_to_json(taxon, records));
            return 0;
        }
        if (cmd_sample->parsed()) {
            const auto [taxon, records] =
                habitat::occurrences_from_json(json::parse(habitat::read_file(occurrences_path)));
            auto [points, bbox] = habitat::stage_sample(cfg, records);
            std::cout << points.size() << " sample points\n";
            if (!out_path.empty()) write_json(out_path, habitat::samples_to_json(points, bbox));
            return 0;
        }
        if (cmd_extract->parsed()) {
            const auto [points, bbox] =
                habitat::samples_from_json(json::parse(habitat::read_file(samples_path)));
            auto [dataset, dropped] = habitat::stage_extract(cfg, points);
            std::cout << dataset.points.size() << " rows kept, " << dropped << " dropped\n";
            if (!out_path.empty()) {
                habitat::export_dataset(dataset, out_path);
                std::cout << "wrote " << out_path << "\n";
            }
            return 0;
        }
        if (cmd_discover->parsed()) {
            const auto dataset = habitat::import_dataset(dataset_path);
            const auto dag = habitat::stage_discover(cfg, dataset);
            std::cout << dag.edges().size() << " edges at threshold " << dag.threshold_used << "\n";
            if (!out_path.empty()) {
                write_json(out_path, habitat::dag_to_json(dag));
                habitat::atomic_write_file(out_path + ".dot", habitat::dag_to_dot(dag));
            }
            return 0;
        }
        if (cmd_infer->parsed()) {
            const auto dataset = habitat::import_dataset(dataset_path);
            const auto dag = habitat::dag_from_json(json::parse(habitat::read_file(dag_path)));
            const auto effects = habitat::stage_infer(cfg, dataset, dag);
            for (const auto& e : effects)
                std::printf("%s: ate %+.4f  ci [%+.4f, %+.4f]  naive %+.4f\n", e.treatment.c_str(),
                            e.ate, e.ci95.first, e.ci95.second, e.naive_diff);
            if (!out_path.empty()) write_json(out_path, habitat::effects_to_json(effects));
            return 0;
        }
        if (cmd_explain->parsed()) {
            const auto effects =
                habitat::effects_from_json(json::parse(habitat::read_file(effects_path)));
            const auto explanations = habitat::stage_explain(cfg, effects, species);
            for (const auto& ex : explanations)
                std::cout << ex.variable << ": " << ex.rule_text
                          << (ex.llm_text ? ("\n  LLM: " + *ex.llm_text) : "") << "\n";
            if (!out_path.empty()) write_json(out_path, habitat::explanations_to_json(explanations));
            return 0;
        }
        if (cmd_synth->parsed()) return run_synth_bench(spec_path, trials, out_path);
    } catch (const habitat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return habitat::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
