// Command line front end: simulate, fit, summarize, study, ingest.
//
// Config files are flat `key = value` text (see KeyValueConfig); every
// subcommand that produces artifacts also writes a JSON manifest recording
// the resolved configuration, the seed and the library version.

#include "epicausal/config.hpp"
#include "epicausal/dataio.hpp"
#include "epicausal/effects.hpp"
#include "epicausal/inference.hpp"
#include "epicausal/propensity.hpp"
#include "epicausal/sir.hpp"
#include "epicausal/study.hpp"
#include "epicausal/version.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << j.dump(1) << '\n';
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

void write_text_file(const std::string& text, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

json manifest_base(const char* command) {
    return json{{"version", epicausal::version()}, {"command", command}};
}

int run_simulate(const fs::path& config_path, const fs::path& out_dir) {
    const auto cfg = epicausal::KeyValueConfig::load(config_path);
    const epicausal::ScenarioConfig scenario = epicausal::scenario_config_from(cfg);
    const epicausal::PanelDataset data = epicausal::simulate_scenario(scenario);
    epicausal::write_panel(data, out_dir);

    json manifest = manifest_base("simulate");
    manifest["seed"] = scenario.seed;
    manifest["config"] = json::parse(epicausal::scenario_config_json(scenario));
    write_json_file(manifest, out_dir / "manifest.json");

    std::cout << "simulated " << data.n_nodes() << " nodes x " << data.n_weeks()
              << " weeks, total cases " << data.Y.sum() << ", seed " << scenario.seed << '\n'
              << "panel written to " << out_dir.string() << '\n';
    return 0;
}

int run_fit(const fs::path& dataset_dir, const std::string& variant_name,
            const std::string& design_name, const fs::path& config_path, bool seed_given,
            std::uint64_t seed, const fs::path& out_path, fs::path manifest_path) {
    const epicausal::PanelDataset data = epicausal::read_panel(dataset_dir);
    const epicausal::ModelVariant variant = epicausal::variant_from_string(variant_name);

    epicausal::FitConfig fit_cfg;
    if (!config_path.empty()) {
        const auto cfg = epicausal::KeyValueConfig::load(config_path);
        fit_cfg = epicausal::fit_config_from(cfg);
        const auto unused = cfg.unused_keys();
        if (!unused.empty()) {
            throw std::runtime_error("fit config: unknown key '" + unused.front() + "'");
        }
    }
    if (seed_given) fit_cfg.seed = seed;

    epicausal::PosteriorSamples samples;
    if (variant == epicausal::ModelVariant::NoPS) {
        samples = epicausal::fit(data, variant, fit_cfg);
    } else {
        const epicausal::PropensityDesign design =
            design_name == "application" ? epicausal::PropensityDesign::application()
                                         : epicausal::PropensityDesign::simulation();
        const epicausal::PropensityScores scores = epicausal::estimate_scores(data, design);
        samples = epicausal::fit(data, scores, variant, fit_cfg);
    }

    epicausal::write_samples_csv(samples, out_path);
    if (manifest_path.empty()) {
        manifest_path = out_path;
        manifest_path.replace_extension(".manifest.json");
    }
    epicausal::write_run_manifest(samples, fit_cfg, manifest_path);

    std::cout << "fit " << epicausal::to_string(samples.variant) << ": " << samples.n_draws()
              << " draws, regression acceptance "
              << samples.acceptance_rates.at("regression") << ", exp clamps "
              << samples.exp_clamp_count << '\n'
              << "samples written to " << out_path.string() << '\n';
    return 0;
}

int run_summarize(const fs::path& samples_path, const fs::path& out_path,
                  const std::string& format, double scale) {
    const epicausal::PosteriorSamples samples = epicausal::read_samples_csv(samples_path);
    const epicausal::EffectSummary summary = epicausal::summarize(samples, scale);
    const std::string text = format == "csv" ? epicausal::format_effects_delimited(summary)
                                             : epicausal::format_effects_markdown(summary);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text_file(text, out_path);
        std::cout << "summary written to " << out_path.string() << '\n';
    }
    return 0;
}

int run_study(const fs::path& plan_path, int threads_override) {
    const auto cfg = epicausal::KeyValueConfig::load(plan_path);
    epicausal::StudyPlan plan = epicausal::study_plan_from_config(cfg);
    if (threads_override >= 0) {
        plan.threads = threads_override;
        plan.validate();
    }

    const epicausal::StudyResult result = epicausal::run_study(plan);
    epicausal::emit_report(result.metrics, plan.output_dir);

    json manifest = manifest_base("study");
    manifest["base_seed"] = plan.base_seed;
    manifest["plan"] = cfg.entries();
    manifest["fit"] = json::parse(epicausal::fit_config_json(plan.fit));
    manifest["runs_total"] = result.runs_total;
    manifest["runs_executed"] = result.runs_executed;
    manifest["runs_reused"] = result.runs_reused;
    manifest["runs_failed"] = result.runs_failed;
    write_json_file(manifest, plan.output_dir / "manifest.json");

    std::cout << "study: " << result.runs_total << " runs (" << result.runs_executed
              << " executed, " << result.runs_reused << " reused, " << result.runs_failed
              << " failed)\n"
              << "report written to " << plan.output_dir.string() << '\n';
    for (const std::string& failure : result.failures) {
        std::cerr << "failed: " << failure << '\n';
    }
    if (result.failure_rate_exceeded()) {
        std::cerr << "error: more than 5% of runs failed\n";
        return 1;
    }
    return 0;
}

int run_ingest(const epicausal::IngestPaths& paths, const epicausal::IngestOptions& options,
               const fs::path& out_dir) {
    epicausal::IngestReport report;
    const epicausal::PanelDataset data = epicausal::ingest_panel(paths, options, &report);
    epicausal::write_panel(data, out_dir);

    json manifest = manifest_base("ingest");
    manifest["inputs"] = {{"cases", paths.cases.string()},
                          {"mobility", paths.mobility.string()},
                          {"covariates", paths.covariates.string()},
                          {"centroids", paths.centroids.string()},
                          {"adjacency", paths.adjacency.string()}};
    manifest["options"] = {{"start_date", options.start_date},
                           {"end_date", options.end_date},
                           {"week_anchor", options.week_anchor}};
    manifest["report"] = {{"n_weeks", report.n_weeks},
                          {"week1_start", report.week1_start},
                          {"imputed_cells", report.imputation.filled},
                          {"zero_distance_donors", report.imputation.zero_distance_donors},
                          {"unfilled_cells", report.imputation.unfilled.size()},
                          {"clamped_case_dips", report.clamped}};
    write_json_file(manifest, out_dir / "manifest.json");

    std::cout << "ingested " << data.n_nodes() << " counties x " << report.n_weeks
              << " weeks starting " << report.week1_start << '\n'
              << "imputed " << report.imputation.filled << " mobility cells ("
              << report.imputation.unfilled.size() << " unfilled), clamped " << report.clamped
              << " case dips\n"
              << "panel written to " << out_dir.string() << '\n';
    if (!report.imputation.unfilled.empty()) {
        std::cerr << "warning: " << report.imputation.unfilled.size()
                  << " mobility cells had no donor and remain missing\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal direct and spillover effects of epidemic interventions"};
    app.set_version_flag("--version", epicausal::version());
    app.require_subcommand(1);
    int status = 0;

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel from a scenario config");
    fs::path sim_config;
    fs::path sim_out;
    simulate->add_option("config", sim_config, "scenario config file (key = value)")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("-o,--output", sim_out, "output panel directory")->required();
    simulate->callback([&] { status = run_simulate(sim_config, sim_out); });

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a model variant to a panel directory");
    fs::path fit_dataset;
    std::string fit_variant = "full";
    std::string fit_design = "simulation";
    fs::path fit_config_path;
    fs::path fit_out;
    fs::path fit_manifest;
    std::uint64_t fit_seed = 0;
    fit->add_option("dataset", fit_dataset, "panel directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    fit->add_option("--variant", fit_variant, "full | no_nugget | no_ps | non_spatial")
        ->capture_default_str();
    fit->add_option("--design", fit_design, "propensity design: simulation | application")
        ->check(CLI::IsMember({"simulation", "application"}))
        ->capture_default_str();
    fit->add_option("--config", fit_config_path, "sampler config file (key = value)")
        ->check(CLI::ExistingFile);
    auto* fit_seed_opt = fit->add_option("--seed", fit_seed, "RNG seed (overrides config)");
    fit->add_option("-o,--output", fit_out, "samples CSV path")->required();
    fit->add_option("--manifest", fit_manifest,
                    "manifest path (default: alongside the samples)");
    fit->callback([&] {
        status = run_fit(fit_dataset, fit_variant, fit_design, fit_config_path,
                         fit_seed_opt->count() > 0, fit_seed, fit_out, fit_manifest);
    });

    // summarize
    auto* summarize = app.add_subcommand("summarize", "Effect summary table from a samples CSV");
    fs::path sum_samples;
    fs::path sum_out;
    std::string sum_format = "md";
    double sum_scale = 50.0;
    summarize->add_option("samples", sum_samples, "samples CSV from fit")
        ->required()
        ->check(CLI::ExistingFile);
    summarize->add_option("-o,--output", sum_out, "output file (default: stdout)");
    summarize->add_option("--format", sum_format, "md | csv")
        ->check(CLI::IsMember({"md", "csv"}))
        ->capture_default_str();
    summarize->add_option("--scale", sum_scale, "intervention rescaling for percent effects")
        ->capture_default_str();
    summarize->callback(
        [&] { status = run_summarize(sum_samples, sum_out, sum_format, sum_scale); });

    // study
    auto* study = app.add_subcommand("study", "Run a replication study from a plan file");
    fs::path study_plan;
    int study_threads = -1;
    study->add_option("plan", study_plan, "study plan file (key = value)")
        ->required()
        ->check(CLI::ExistingFile);
    study->add_option("--threads", study_threads, "worker threads (overrides the plan)");
    study->callback([&] { status = run_study(study_plan, study_threads); });

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Build a panel from raw surveillance files");
    epicausal::IngestPaths paths;
    epicausal::IngestOptions options;
    fs::path ingest_out;
    ingest->add_option("--cases", paths.cases, "county,date,cumulative_cases CSV")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--mobility", paths.mobility, "county,date,five-category CSV")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--covariates", paths.covariates,
                       "county,population,<covariates> CSV (fixes county order)")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--centroids", paths.centroids, "county,lat,lon CSV")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--adjacency", paths.adjacency, "adjacency list text file")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--start-date", options.start_date, "clip window start (YYYY-MM-DD)");
    ingest->add_option("--end-date", options.end_date, "clip window end (YYYY-MM-DD)");
    ingest->add_option("--week-anchor", options.week_anchor, "first day of week 1")
        ->capture_default_str();
    ingest->add_option("-o,--output", ingest_out, "output panel directory")->required();
    ingest->callback([&] { status = run_ingest(paths, options, ingest_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return status;
}
