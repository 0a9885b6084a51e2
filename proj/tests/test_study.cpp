#include "epicausal/study.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace epicausal;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "epicausal_study_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

StudyPlan tiny_plan(const fs::path& dir) {
    StudyPlan plan;
    plan.scenarios = {1};
    plan.replicates = 1;
    plan.variants = {ModelVariant::NoPS};
    plan.rows = 3;
    plan.cols = 3;
    plan.T = 10;
    plan.fit.iterations = 300;
    plan.fit.burn_in = 100;
    plan.fit.latent_thin = 0;
    plan.base_seed = 42;
    plan.threads = 1;
    plan.output_dir = dir;
    return plan;
}

bool metrics_equal(const EffectMetrics& a, const EffectMetrics& b) {
    const bool se_equal = (std::isnan(a.bias_se) && std::isnan(b.bias_se)) ||
                          a.bias_se == b.bias_se;
    return a.n_replicates == b.n_replicates && a.level == b.level && a.bias == b.bias &&
           se_equal && a.coverage == b.coverage && a.coverage_se == b.coverage_se;
}

bool rows_equal(const StudyMetricsRow& a, const StudyMetricsRow& b) {
    return a.scenario == b.scenario && a.variant == b.variant && a.effect == b.effect &&
           metrics_equal(a.metrics90, b.metrics90) && metrics_equal(a.metrics95, b.metrics95);
}

bool effect_rows_equal(const EffectRow& a, const EffectRow& b) {
    return a.name == b.name && a.median == b.median && a.mean == b.mean &&
           a.lower90 == b.lower90 && a.upper90 == b.upper90 && a.lower95 == b.lower95 &&
           a.upper95 == b.upper95 && a.pct_median == b.pct_median && a.pct_mean == b.pct_mean &&
           a.pct_lower90 == b.pct_lower90 && a.pct_upper90 == b.pct_upper90 &&
           a.pct_lower95 == b.pct_lower95 && a.pct_upper95 == b.pct_upper95 &&
           a.significant90 == b.significant90 && a.significant95 == b.significant95;
}

}  // namespace

TEST_SUITE("study") {

TEST_CASE("scenario catalog matches the simulation settings") {
    const double expected[6][4] = {
        {0.9, 0.5, 0.5, 0.4},  {0.99, 0.5, 0.5, 0.4}, {0.3, 0.9, 0.5, 0.4},
        {0.9, 0.9, 0.5, 0.4},  {0.9, 0.5, 0.9, 0.4},  {0.9, 0.5, 0.5, 0.2},
    };
    std::set<std::string> names;
    for (int id = 1; id <= kScenarioCount; ++id) {
        const ScenarioConfig c = scenario_config(id);
        CHECK(c.rho_s == expected[id - 1][0]);
        CHECK(c.rho_t == expected[id - 1][1]);
        CHECK(c.rho_x == expected[id - 1][2]);
        CHECK(c.phi == expected[id - 1][3]);
        CHECK(c.rows == 15);
        CHECK(c.cols == 15);
        CHECK(c.T == 30);
        CHECK(c.population == 100000.0);
        CHECK(c.gamma == 0.1);
        CHECK(c.p == 0.5);
        CHECK(c.lag == 2);
        CHECK(c.beta.alpha0 == -3.0);
        REQUIRE(c.beta.alpha1.size() == 1);
        CHECK(c.beta.alpha1(0) == 0.5);
        CHECK(c.beta.alpha2(0) == 0.3);
        CHECK(c.beta.delta1 == 0.5);
        CHECK(c.beta.delta2 == 0.2);
        names.insert(scenario_name(id));
    }
    CHECK(names.size() == 6);
    CHECK(scenario_name(1) == "base");
    CHECK_THROWS_AS(scenario_config(0), std::invalid_argument);
    CHECK_THROWS_AS(scenario_config(7), std::invalid_argument);
}

TEST_CASE("scenario config file overrides catalog fields") {
    const auto base = scenario_config_from(KeyValueConfig::parse(""));
    CHECK(base.rho_s == 0.9);
    CHECK(base.beta.alpha1.size() == 1);

    const auto c = scenario_config_from(KeyValueConfig::parse(
        "scenario = 3\nrho_t = 0.85\nrows = 4\ncols = 5\nT = 12\nseed = 99\n"
        "alpha1 = 0.5, -0.2\nalpha2 = 0.3, 0.1\ndelta1 = 0.7\n"));
    CHECK(c.rho_s == 0.3);   // from scenario 3
    CHECK(c.rho_t == 0.85);  // overridden
    CHECK(c.rows == 4);
    CHECK(c.cols == 5);
    CHECK(c.T == 12);
    CHECK(c.seed == 99);
    REQUIRE(c.beta.alpha1.size() == 2);
    CHECK(c.beta.alpha1(1) == -0.2);
    CHECK(c.beta.delta1 == 0.7);

    CHECK_THROWS_AS(scenario_config_from(KeyValueConfig::parse("rho_q = 0.5\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(scenario_config_from(KeyValueConfig::parse("gamma = 2.0\n")),
                    std::invalid_argument);
}

TEST_CASE("replicate seeds are pairwise distinct") {
    for (const std::uint64_t base : {0ULL, 1234567ULL}) {
        std::set<std::uint64_t> seen;
        for (int scenario = 1; scenario <= 6; ++scenario) {
            for (int rep = 0; rep < 200; ++rep) {
                CHECK(seen.insert(replicate_seed(base, scenario, rep)).second);
            }
        }
    }
    CHECK(replicate_seed(7, 2, 3) == replicate_seed(7, 2, 3));
}

TEST_CASE("plan expansion resolves every run") {
    StudyPlan plan;
    plan.scenarios = {1, 3};
    plan.replicates = 2;
    plan.variants = {ModelVariant::Full, ModelVariant::NoPS};
    plan.rows = 4;
    plan.cols = 4;
    plan.T = 12;
    plan.base_seed = 11;
    plan.output_dir = "unused";
    const auto runs = build_runs(plan);
    REQUIRE(runs.size() == 8);

    // Scenario-major, then replicate, then variant in plan order.
    CHECK(runs[0].scenario == 1);
    CHECK(runs[0].replicate == 0);
    CHECK(runs[0].variant == ModelVariant::Full);
    CHECK(runs[1].variant == ModelVariant::NoPS);
    CHECK(runs[2].replicate == 1);
    CHECK(runs[4].scenario == 3);

    std::set<std::string> keys;
    for (const auto& run : runs) {
        CHECK(run.config.rows == 4);
        CHECK(run.config.cols == 4);
        CHECK(run.config.T == 12);
        CHECK(run.config.lag == plan.fit.lag);
        CHECK(run.config.seed == replicate_seed(11, run.scenario, run.replicate));
        CHECK(run.fit.seed != run.config.seed);
        CHECK(keys.insert(run.key).second);  // pairwise distinct
    }
    // Same dataset, different chain seeds across variants.
    CHECK(runs[0].config.seed == runs[1].config.seed);
    CHECK(runs[0].fit.seed != runs[1].fit.seed);

    // The key hashes the fit settings, so editing the plan invalidates it.
    StudyPlan edited = plan;
    edited.fit.iterations += 100;
    const auto edited_runs = build_runs(edited);
    CHECK(edited_runs[0].key != runs[0].key);
}

TEST_CASE("plan validation rejects malformed plans") {
    const auto valid = [] {
        StudyPlan p;
        p.output_dir = "out";
        return p;
    };
    CHECK_NOTHROW(valid().validate());

    auto p = valid();
    p.replicates = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = valid();
    p.scenarios = {1, 1};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = valid();
    p.scenarios = {7};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = valid();
    p.scenarios.clear();
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = valid();
    p.variants.clear();
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = valid();
    p.variants = {ModelVariant::Full, ModelVariant::Full};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = valid();
    p.threads = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = valid();
    p.output_dir.clear();
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    // window_start must clear the observation and propensity lags.
    p = valid();
    p.fit.window_start = 4;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    // ... unless no variant uses propensity scores.
    p.variants = {ModelVariant::NoPS};
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("study plan file round trip") {
    const auto plan = study_plan_from_config(KeyValueConfig::parse(
        "scenarios = 1, 5\nreplicates = 7\nvariants = full, no_ps\n"
        "iterations = 500\nburn_in = 200\nrows = 6\ncols = 6\nT = 18\n"
        "base_seed = 77\nthreads = 2\noutput_dir = /tmp/study_out\n"));
    CHECK(plan.scenarios == std::vector<int>{1, 5});
    CHECK(plan.replicates == 7);
    REQUIRE(plan.variants.size() == 2);
    CHECK(plan.variants[0] == ModelVariant::Full);
    CHECK(plan.variants[1] == ModelVariant::NoPS);
    CHECK(plan.fit.iterations == 500);
    CHECK(plan.fit.burn_in == 200);
    CHECK(plan.rows == 6);
    CHECK(plan.T == 18);
    CHECK(plan.base_seed == 77);
    CHECK(plan.threads == 2);
    CHECK(plan.output_dir == fs::path("/tmp/study_out"));

    CHECK_THROWS_AS(
        study_plan_from_config(KeyValueConfig::parse("output_dir = x\nscenraios = 1\n")),
        std::runtime_error);
    CHECK_THROWS_AS(
        study_plan_from_config(KeyValueConfig::parse("output_dir = x\nvariants = fulll\n")),
        std::invalid_argument);
}

TEST_CASE("single-run study emits degenerate metrics") {
    const fs::path dir = fresh_dir("single_run");
    const StudyPlan plan = tiny_plan(dir);
    const StudyResult result = run_study(plan);

    CHECK(result.runs_total == 1);
    CHECK(result.runs_executed == 1);
    CHECK(result.runs_reused == 0);
    CHECK(result.runs_failed == 0);
    CHECK_FALSE(result.failure_rate_exceeded());
    CHECK(fs::exists(run_manifest_path(dir, build_runs(plan)[0])));

    REQUIRE(result.metrics.size() == 2);
    CHECK(result.metrics[0].effect == "direct");
    CHECK(result.metrics[1].effect == "indirect");
    for (const auto& row : result.metrics) {
        CHECK(row.scenario == "1");
        CHECK(row.variant == "no_ps");
        CHECK(row.metrics90.n_replicates == 1);
        CHECK(std::isnan(row.metrics90.bias_se));
        CHECK((row.metrics90.coverage == 0.0 || row.metrics90.coverage == 100.0));
        CHECK(row.metrics90.coverage_se == 0.0);
        CHECK(std::isfinite(row.metrics90.bias));
        CHECK(row.metrics95.level == 95);
    }
}

TEST_CASE("resumption reuses manifests and reproduces metrics") {
    const fs::path dir = fresh_dir("resume");
    StudyPlan plan = tiny_plan(dir);
    plan.replicates = 3;

    const StudyResult first = run_study(plan);
    CHECK(first.runs_executed == 3);
    CHECK(first.runs_failed == 0);
    REQUIRE(first.metrics.size() == 2);
    CHECK(first.metrics[0].metrics90.n_replicates == 3);
    CHECK(std::isfinite(first.metrics[0].metrics90.bias_se));

    const StudyResult resumed = run_study(plan);
    CHECK(resumed.runs_executed == 0);
    CHECK(resumed.runs_reused == 3);
    REQUIRE(resumed.metrics.size() == first.metrics.size());
    for (std::size_t i = 0; i < first.metrics.size(); ++i) {
        CHECK(rows_equal(first.metrics[i], resumed.metrics[i]));
    }

    // A fresh directory and a different thread count reproduce the table.
    StudyPlan parallel = plan;
    parallel.output_dir = fresh_dir("resume_parallel");
    parallel.threads = 2;
    const StudyResult again = run_study(parallel);
    CHECK(again.runs_executed == 3);
    REQUIRE(again.metrics.size() == first.metrics.size());
    for (std::size_t i = 0; i < first.metrics.size(); ++i) {
        CHECK(rows_equal(first.metrics[i], again.metrics[i]));
    }

    // Editing the sampler settings invalidates the stored runs.
    StudyPlan edited = plan;
    edited.fit.iterations += 50;
    const StudyResult redo = run_study(edited);
    CHECK(redo.runs_executed == 3);
    CHECK(redo.runs_reused == 0);
}

TEST_CASE("isolated rerun reproduces the in-study record") {
    const fs::path dir = fresh_dir("isolation");
    StudyPlan plan = tiny_plan(dir);
    plan.replicates = 2;
    run_study(plan);

    const auto runs = build_runs(plan);
    const StudyRun& run = runs[1];
    const RunRecord isolated = execute_run(run);
    REQUIRE(isolated.ok);

    const RunRecord stored = read_run_record(run_manifest_path(dir, run));
    CHECK(stored.ok);
    CHECK(stored.key == run.key);
    REQUIRE(stored.rows.size() == isolated.rows.size());
    for (std::size_t i = 0; i < stored.rows.size(); ++i) {
        CHECK(effect_rows_equal(stored.rows[i], isolated.rows[i]));
    }

    // Aggregation equals a direct reduction over the stored records.
    std::vector<EffectRow> direct;
    for (const auto& r : runs) {
        const RunRecord rec = read_run_record(run_manifest_path(dir, r));
        for (const EffectRow& row : rec.rows) {
            if (row.name == "A") direct.push_back(row);
        }
    }
    const EffectMetrics manual = coverage_and_bias(direct, 0.5, 90);
    const StudyResult result = run_study(plan);  // all reused
    CHECK(result.runs_reused == 2);
    CHECK(metrics_equal(result.metrics[0].metrics90, manual));
}

TEST_CASE("propensity columns are the only design difference across variants") {
    StudyPlan plan;
    plan.scenarios = {1};
    plan.replicates = 1;
    plan.variants = {ModelVariant::Full, ModelVariant::NoPS};
    plan.rows = 3;
    plan.cols = 3;
    plan.T = 12;
    plan.fit.iterations = 120;
    plan.fit.burn_in = 40;
    plan.fit.latent_thin = 0;
    plan.base_seed = 5;
    plan.output_dir = "unused";
    const auto runs = build_runs(plan);

    const RunRecord full = execute_run(runs[0]);
    const RunRecord no_ps = execute_run(runs[1]);
    REQUIRE(full.ok);
    REQUIRE(no_ps.ok);

    std::vector<std::string> full_names;
    for (const auto& r : full.rows) full_names.push_back(r.name);
    std::vector<std::string> no_ps_names;
    for (const auto& r : no_ps.rows) no_ps_names.push_back(r.name);

    const std::vector<std::string> ps_block = {"ps_e", "ps_etilde", "ps_e2", "ps_etilde2",
                                               "ps_e_etilde"};
    std::vector<std::string> expected = no_ps_names;
    expected.insert(expected.end(), ps_block.begin(), ps_block.end());
    CHECK(full_names == expected);
}

TEST_CASE("failed runs are recorded and the study continues") {
    const fs::path dir = fresh_dir("failures");
    StudyPlan plan = tiny_plan(dir);
    plan.replicates = 2;
    // One retained draw per chain; summarizing needs two, so every run fails.
    plan.fit.iterations = 101;
    plan.fit.burn_in = 100;

    const StudyResult result = run_study(plan);
    CHECK(result.runs_total == 2);
    CHECK(result.runs_failed == 2);
    CHECK(result.failure_rate_exceeded());
    REQUIRE(result.failures.size() == 2);
    CHECK(result.failures[0].find("scenario 1 replicate 0") != std::string::npos);
    CHECK(result.metrics.empty());

    // Failed manifests are not reused.
    const StudyResult retry = run_study(plan);
    CHECK(retry.runs_reused == 0);
    CHECK(retry.runs_executed == 2);

    // 1 failure in 21+ runs stays under the 5% threshold.
    StudyResult mixed;
    mixed.runs_total = 40;
    mixed.runs_failed = 2;
    CHECK_FALSE(mixed.failure_rate_exceeded());
    mixed.runs_failed = 3;
    CHECK(mixed.failure_rate_exceeded());
}

TEST_CASE("report rows are ordered and permutation stable") {
    const auto row = [](const char* s, const char* v, const char* e) {
        StudyMetricsRow r;
        r.scenario = s;
        r.variant = v;
        r.effect = e;
        r.metrics90 = {4, 90, 0.1, 0.05, 75.0, 21.7};
        r.metrics95 = {4, 95, 0.1, 0.05, 100.0, 0.0};
        return r;
    };
    const StudyMetrics rows = {
        row("2", "full", "direct"),   row("1", "no_ps", "indirect"), row("1", "no_ps", "direct"),
        row("1", "full", "indirect"), row("1", "non_spatial", "direct"),
        row("1", "no_nugget", "direct"),
    };
    StudyMetrics shuffled = rows;
    std::rotate(shuffled.begin(), shuffled.begin() + 3, shuffled.end());

    const fs::path a = fresh_dir("report_a");
    const fs::path b = fresh_dir("report_b");
    emit_report(rows, a);
    emit_report(shuffled, b);
    const std::string csv = read_file(a / "metrics.csv");
    CHECK(csv == read_file(b / "metrics.csv"));
    CHECK(read_file(a / "metrics.md") == read_file(b / "metrics.md"));

    // Scenario, then variant (full, no_nugget, no_ps, non_spatial), then effect.
    const std::vector<std::string> expected_prefix = {
        "1,full,indirect", "1,no_nugget,direct", "1,no_ps,direct",
        "1,no_ps,indirect", "1,non_spatial,direct", "2,full,direct",
    };
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    for (const auto& prefix : expected_prefix) {
        REQUIRE(std::getline(lines, line));
        CHECK(line.rfind(prefix, 0) == 0);
    }

    CHECK_THROWS_AS(emit_report({}, a), std::invalid_argument);
}

}  // TEST_SUITE
