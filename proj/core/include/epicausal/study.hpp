#pragma once

#include "epicausal/config.hpp"
#include "epicausal/effects.hpp"
#include "epicausal/inference.hpp"
#include "epicausal/sir.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace epicausal {

inline constexpr int kScenarioCount = 6;

/// Simulation-study catalog. Every scenario shares the base generator
/// settings (15x15 grid, T = 30, N = 100,000, gamma = 0.1, p = 0.5, l = 2,
/// alpha0 = -3, alpha = (0.5, 0.3), delta = (0.5, 0.2)) and overrides
/// (rho_s, rho_t, rho_x, phi):
///   1 base                   (0.90, 0.5, 0.5, 0.4)
///   2 strong spatial A       (0.99, 0.5, 0.5, 0.4)
///   3 strong temporal A      (0.30, 0.9, 0.5, 0.4)
///   4 strong spatiotemporal A(0.90, 0.9, 0.5, 0.4)
///   5 strong confounding     (0.90, 0.5, 0.9, 0.4)
///   6 weak SIR spatial       (0.90, 0.5, 0.5, 0.2)
ScenarioConfig scenario_config(int id);
std::string scenario_name(int id);

/// ScenarioConfig from a key-value file. An optional `scenario` key selects
/// a catalog entry as the starting point; any other recognized key then
/// overrides that field. Unknown keys are an error.
ScenarioConfig scenario_config_from(const KeyValueConfig& cfg);

/// Sampler settings from `key = value` text. Recognized keys: iterations,
/// burn_in, thin, latent_thin, lag, window_start, ps_terms, adapt_initial,
/// seed. Unknown keys and T-dependent validation are the caller's concern.
FitConfig fit_config_from(const KeyValueConfig& cfg);

/// Canonical JSON echoes (sorted keys, shortest-round-trip doubles); the
/// same serializations feed the per-run content keys.
std::string scenario_config_json(const ScenarioConfig& config);
std::string fit_config_json(const FitConfig& fit);

/// Replication harness settings. `rows`, `cols` and `T` override the
/// catalog's grid so desk-scale runs stay cheap; `fit.lag` is also applied
/// to the generator so the fitted lag matches the simulated one.
struct StudyPlan {
    std::vector<int> scenarios = {1, 2, 3, 4, 5, 6};
    int replicates = 100;
    std::vector<ModelVariant> variants = {ModelVariant::Full, ModelVariant::NoNugget,
                                          ModelVariant::NoPS, ModelVariant::NonSpatial};
    FitConfig fit;
    int rows = 15;
    int cols = 15;
    int T = 30;
    std::uint64_t base_seed = 0;
    int threads = 0;  // 0 = hardware concurrency
    std::filesystem::path output_dir;

    void validate() const;
};

StudyPlan study_plan_from_config(const KeyValueConfig& cfg);

/// Simulation seed for one replicate. Depends only on the arguments and is
/// pairwise distinct across the catalog for replicate counts < 1,000,003.
std::uint64_t replicate_seed(std::uint64_t base, int scenario, int replicate);

/// One fit of the study: fully resolved generator and sampler settings plus
/// a content key that identifies the run for resumption. The key hashes
/// everything that determines the result, so editing the plan invalidates
/// stale manifests automatically.
struct StudyRun {
    int scenario = 1;
    int replicate = 0;
    ModelVariant variant = ModelVariant::Full;
    ScenarioConfig config;
    FitConfig fit;
    std::string key;
};

/// Expands a plan into its run list: scenarios in plan order, replicates
/// within scenario, variants within replicate.
std::vector<StudyRun> build_runs(const StudyPlan& plan);

/// Result of one run: the summarized coefficient rows on success, or the
/// error text on failure. Serialized verbatim into the run's manifest.
struct RunRecord {
    int scenario = 1;
    int replicate = 0;
    ModelVariant variant = ModelVariant::Full;
    std::string key;
    bool ok = false;
    std::string error;
    std::vector<EffectRow> rows;
};

/// simulate -> propensity scores (simulation design) -> fit -> summarize.
/// Deterministic given the run's seeds; exceptions are captured into the
/// record rather than thrown.
RunRecord execute_run(const StudyRun& run);

void write_run_record(const RunRecord& record, const std::filesystem::path& path);
RunRecord read_run_record(const std::filesystem::path& path);

/// Manifest location for a run inside the plan's output directory.
std::filesystem::path run_manifest_path(const std::filesystem::path& output_dir,
                                        const StudyRun& run);

struct StudyResult {
    StudyMetrics metrics;
    int runs_total = 0;
    int runs_executed = 0;
    int runs_reused = 0;
    int runs_failed = 0;
    std::vector<std::string> failures;  // "scenario 1 replicate 3 full: <error>"

    /// Error policy: individual failures do not stop the study, but more
    /// than 5% of runs failing makes the study itself count as failed.
    bool failure_rate_exceeded() const { return 20 * runs_failed > runs_total; }
};

/// Runs every plan entry whose manifest is missing or stale (key mismatch or
/// recorded failure), then aggregates direct (delta1) and indirect (delta2)
/// bias/coverage per (scenario, variant) from the manifests. Runs execute in
/// a shared-queue thread pool; results do not depend on the thread count.
StudyResult run_study(const StudyPlan& plan);

/// Writes metrics.csv and metrics.md under `dir` with deterministic row
/// order: scenario, then variant (Full, NoNugget, NoPS, NonSpatial), then
/// effect (direct before indirect).
void emit_report(const StudyMetrics& metrics, const std::filesystem::path& dir);

}  // namespace epicausal
