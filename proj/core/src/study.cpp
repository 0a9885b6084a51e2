#include "epicausal/study.hpp"

#include "epicausal/propensity.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

namespace epicausal {
namespace {

using nlohmann::json;

const char* kScenarioNames[kScenarioCount] = {
    "base",
    "strong spatial A",
    "strong temporal A",
    "strong spatiotemporal A",
    "strong confounding",
    "weak SIR spatial",
};

void check_scenario_id(int id) {
    if (id < 1 || id > kScenarioCount) {
        throw std::invalid_argument("scenario id must lie in 1.." +
                                    std::to_string(kScenarioCount) + ", got " +
                                    std::to_string(id));
    }
}

std::vector<double> parse_doubles(const KeyValueConfig& cfg, const std::string& key) {
    std::vector<double> out;
    for (const std::string& item : cfg.get_list(key)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' has a non-numeric entry '" +
                                     item + "'");
        }
    }
    return out;
}

std::uint64_t parse_u64(const KeyValueConfig& cfg, const std::string& key,
                        std::uint64_t fallback) {
    if (!cfg.has(key)) return fallback;
    const std::string v = cfg.get_string(key);
    try {
        std::size_t pos = 0;
        const std::uint64_t out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' is not an unsigned integer: '" + v +
                                 "'");
    }
}

json config_to_json(const ScenarioConfig& c) {
    return json{{"rows", c.rows},
                {"cols", c.cols},
                {"T", c.T},
                {"population", c.population},
                {"gamma", c.gamma},
                {"phi", c.phi},
                {"rho_s", c.rho_s},
                {"rho_t", c.rho_t},
                {"rho_x", c.rho_x},
                {"alpha0", c.beta.alpha0},
                {"alpha1", std::vector<double>(c.beta.alpha1.begin(), c.beta.alpha1.end())},
                {"alpha2", std::vector<double>(c.beta.alpha2.begin(), c.beta.alpha2.end())},
                {"delta1", c.beta.delta1},
                {"delta2", c.beta.delta2},
                {"p", c.p},
                {"lag", c.lag},
                {"tau", c.tau},
                {"initial_scale", c.initial_scale},
                {"seed", c.seed}};
}

json fit_to_json(const FitConfig& f) {
    return json{{"iterations", f.iterations},
                {"burn_in", f.burn_in},
                {"thin", f.thin},
                {"latent_thin", f.latent_thin},
                {"lag", f.lag},
                {"window_start", f.window_start},
                {"ps_terms", to_string(f.ps_terms)},
                {"regression_target_rate", f.regression_target_rate},
                {"single_site_target_rate", f.single_site_target_rate},
                {"adapt_initial", f.adapt_initial},
                {"seed", f.seed}};
}

/// FNV-1a over the canonical JSON dump; json objects keep sorted keys so the
/// dump is order-independent.
std::string run_key(int scenario, int replicate, ModelVariant variant,
                    const ScenarioConfig& config, const FitConfig& fit) {
    const json j{{"scenario", scenario},
                 {"replicate", replicate},
                 {"variant", to_string(variant)},
                 {"config", config_to_json(config)},
                 {"fit", fit_to_json(fit)}};
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json effect_row_to_json(const EffectRow& r) {
    return json{{"name", r.name},
                {"median", r.median},
                {"mean", r.mean},
                {"lower90", r.lower90},
                {"upper90", r.upper90},
                {"lower95", r.lower95},
                {"upper95", r.upper95},
                {"pct_median", r.pct_median},
                {"pct_mean", r.pct_mean},
                {"pct_lower90", r.pct_lower90},
                {"pct_upper90", r.pct_upper90},
                {"pct_lower95", r.pct_lower95},
                {"pct_upper95", r.pct_upper95},
                {"significant90", r.significant90},
                {"significant95", r.significant95}};
}

EffectRow effect_row_from_json(const json& j) {
    EffectRow r;
    r.name = j.at("name").get<std::string>();
    r.median = j.at("median").get<double>();
    r.mean = j.at("mean").get<double>();
    r.lower90 = j.at("lower90").get<double>();
    r.upper90 = j.at("upper90").get<double>();
    r.lower95 = j.at("lower95").get<double>();
    r.upper95 = j.at("upper95").get<double>();
    r.pct_median = j.at("pct_median").get<double>();
    r.pct_mean = j.at("pct_mean").get<double>();
    r.pct_lower90 = j.at("pct_lower90").get<double>();
    r.pct_upper90 = j.at("pct_upper90").get<double>();
    r.pct_lower95 = j.at("pct_lower95").get<double>();
    r.pct_upper95 = j.at("pct_upper95").get<double>();
    r.significant90 = j.at("significant90").get<bool>();
    r.significant95 = j.at("significant95").get<bool>();
    return r;
}

/// One-replicate fallback: the point bias is defined, the spread is not.
EffectMetrics degenerate_metrics(const EffectRow& row, double truth, int level) {
    EffectMetrics m;
    m.n_replicates = 1;
    m.level = level;
    m.bias = (row.median - truth) * 100.0;
    m.bias_se = std::numeric_limits<double>::quiet_NaN();
    const double lo = level == 90 ? row.lower90 : row.lower95;
    const double hi = level == 90 ? row.upper90 : row.upper95;
    m.coverage = (lo <= truth && truth <= hi) ? 100.0 : 0.0;
    m.coverage_se = 0.0;
    return m;
}

int variant_rank(const std::string& name) {
    if (name == "full") return 0;
    if (name == "no_nugget") return 1;
    if (name == "no_ps") return 2;
    if (name == "non_spatial") return 3;
    return 4;
}

int effect_rank(const std::string& name) {
    if (name == "direct") return 0;
    if (name == "indirect") return 1;
    return 2;
}

bool metrics_row_before(const StudyMetricsRow& a, const StudyMetricsRow& b) {
    if (a.scenario != b.scenario) {
        char* enda = nullptr;
        char* endb = nullptr;
        const long na = std::strtol(a.scenario.c_str(), &enda, 10);
        const long nb = std::strtol(b.scenario.c_str(), &endb, 10);
        const bool numeric = enda && *enda == '\0' && endb && *endb == '\0' &&
                             !a.scenario.empty() && !b.scenario.empty();
        return numeric ? na < nb : a.scenario < b.scenario;
    }
    if (variant_rank(a.variant) != variant_rank(b.variant)) {
        return variant_rank(a.variant) < variant_rank(b.variant);
    }
    if (a.variant != b.variant) return a.variant < b.variant;
    if (effect_rank(a.effect) != effect_rank(b.effect)) {
        return effect_rank(a.effect) < effect_rank(b.effect);
    }
    return a.effect < b.effect;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

ScenarioConfig scenario_config(int id) {
    check_scenario_id(id);
    ScenarioConfig c;
    c.beta.alpha1 = Eigen::VectorXd::Constant(1, 0.5);
    c.beta.alpha2 = Eigen::VectorXd::Constant(1, 0.3);
    switch (id) {
        case 1: break;
        case 2: c.rho_s = 0.99; break;
        case 3: c.rho_s = 0.3; c.rho_t = 0.9; break;
        case 4: c.rho_t = 0.9; break;
        case 5: c.rho_x = 0.9; break;
        case 6: c.phi = 0.2; break;
    }
    return c;
}

std::string scenario_name(int id) {
    check_scenario_id(id);
    return kScenarioNames[id - 1];
}

ScenarioConfig scenario_config_from(const KeyValueConfig& cfg) {
    ScenarioConfig c = scenario_config(cfg.get_int("scenario", 1));
    c.rows = cfg.get_int("rows", c.rows);
    c.cols = cfg.get_int("cols", c.cols);
    c.T = cfg.get_int("T", c.T);
    c.population = cfg.get_double("population", c.population);
    c.gamma = cfg.get_double("gamma", c.gamma);
    c.phi = cfg.get_double("phi", c.phi);
    c.rho_s = cfg.get_double("rho_s", c.rho_s);
    c.rho_t = cfg.get_double("rho_t", c.rho_t);
    c.rho_x = cfg.get_double("rho_x", c.rho_x);
    c.beta.alpha0 = cfg.get_double("alpha0", c.beta.alpha0);
    if (cfg.has("alpha1")) {
        const auto v = parse_doubles(cfg, "alpha1");
        c.beta.alpha1 = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    }
    if (cfg.has("alpha2")) {
        const auto v = parse_doubles(cfg, "alpha2");
        c.beta.alpha2 = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    }
    c.beta.delta1 = cfg.get_double("delta1", c.beta.delta1);
    c.beta.delta2 = cfg.get_double("delta2", c.beta.delta2);
    c.p = cfg.get_double("p", c.p);
    c.lag = cfg.get_int("lag", c.lag);
    c.tau = cfg.get_double("tau", c.tau);
    c.initial_scale = cfg.get_double("initial_scale", c.initial_scale);
    c.seed = parse_u64(cfg, "seed", c.seed);
    const auto unused = cfg.unused_keys();
    if (!unused.empty()) {
        throw std::runtime_error("scenario config: unknown key '" + unused.front() + "'");
    }
    c.validate();
    return c;
}

void StudyPlan::validate() const {
    if (scenarios.empty()) throw std::invalid_argument("StudyPlan: no scenarios selected");
    std::set<int> seen_s;
    for (const int id : scenarios) {
        check_scenario_id(id);
        if (!seen_s.insert(id).second) {
            throw std::invalid_argument("StudyPlan: duplicate scenario " + std::to_string(id));
        }
    }
    if (replicates < 1) throw std::invalid_argument("StudyPlan: replicates must be >= 1");
    if (variants.empty()) throw std::invalid_argument("StudyPlan: no variants selected");
    std::set<ModelVariant> seen_v;
    for (const ModelVariant v : variants) {
        if (!seen_v.insert(v).second) {
            throw std::invalid_argument("StudyPlan: duplicate variant " + to_string(v));
        }
    }
    if (rows <= 0 || cols <= 0 || rows * cols < 2) {
        throw std::invalid_argument("StudyPlan: grid must have at least 2 nodes");
    }
    if (threads < 0) throw std::invalid_argument("StudyPlan: threads must be >= 0");
    if (output_dir.empty()) throw std::invalid_argument("StudyPlan: output_dir is required");
    // Strictest propensity lag among the selected variants; NoPS alone fits
    // without scores.
    const bool needs_scores = std::any_of(variants.begin(), variants.end(), [](ModelVariant v) {
        return v != ModelVariant::NoPS;
    });
    const int ps_valid_from = needs_scores ? PropensityDesign::simulation().max_lag() : 0;
    fit.validate(T, ps_valid_from);
}

std::string scenario_config_json(const ScenarioConfig& config) {
    return config_to_json(config).dump();
}

std::string fit_config_json(const FitConfig& fit) { return fit_to_json(fit).dump(); }

FitConfig fit_config_from(const KeyValueConfig& cfg) {
    FitConfig fit;
    fit.iterations = cfg.get_int("iterations", fit.iterations);
    fit.burn_in = cfg.get_int("burn_in", fit.burn_in);
    fit.thin = cfg.get_int("thin", fit.thin);
    fit.latent_thin = cfg.get_int("latent_thin", fit.latent_thin);
    fit.lag = cfg.get_int("lag", fit.lag);
    fit.window_start = cfg.get_int("window_start", fit.window_start);
    fit.ps_terms = ps_terms_from_string(cfg.get_string("ps_terms", to_string(fit.ps_terms)));
    fit.adapt_initial = cfg.get_int("adapt_initial", fit.adapt_initial);
    fit.seed = parse_u64(cfg, "seed", fit.seed);
    return fit;
}

StudyPlan study_plan_from_config(const KeyValueConfig& cfg) {
    StudyPlan plan;
    if (cfg.has("seed")) {
        throw std::runtime_error(
            "study plan: use 'base_seed'; per-replicate seeds are derived from it");
    }
    if (cfg.has("scenarios")) {
        plan.scenarios.clear();
        for (const std::string& item : cfg.get_list("scenarios")) {
            try {
                std::size_t pos = 0;
                plan.scenarios.push_back(std::stoi(item, &pos));
                if (pos != item.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw std::runtime_error("config: key 'scenarios' has a non-integer entry '" +
                                         item + "'");
            }
        }
    }
    plan.replicates = cfg.get_int("replicates", plan.replicates);
    if (cfg.has("variants")) {
        plan.variants.clear();
        for (const std::string& item : cfg.get_list("variants")) {
            plan.variants.push_back(variant_from_string(item));
        }
    }
    plan.fit = fit_config_from(cfg);
    plan.rows = cfg.get_int("rows", plan.rows);
    plan.cols = cfg.get_int("cols", plan.cols);
    plan.T = cfg.get_int("T", plan.T);
    plan.base_seed = parse_u64(cfg, "base_seed", plan.base_seed);
    plan.threads = cfg.get_int("threads", plan.threads);
    if (cfg.has("output_dir")) plan.output_dir = cfg.get_string("output_dir");
    const auto unused = cfg.unused_keys();
    if (!unused.empty()) {
        throw std::runtime_error("study plan: unknown key '" + unused.front() + "'");
    }
    plan.validate();
    return plan;
}

std::uint64_t replicate_seed(std::uint64_t base, int scenario, int replicate) {
    return base + 1000003ULL * static_cast<std::uint64_t>(scenario) +
           static_cast<std::uint64_t>(replicate);
}

std::vector<StudyRun> build_runs(const StudyPlan& plan) {
    plan.validate();
    std::vector<StudyRun> runs;
    runs.reserve(plan.scenarios.size() * static_cast<std::size_t>(plan.replicates) *
                 plan.variants.size());
    for (const int scenario : plan.scenarios) {
        ScenarioConfig config = scenario_config(scenario);
        config.rows = plan.rows;
        config.cols = plan.cols;
        config.T = plan.T;
        config.lag = plan.fit.lag;
        for (int rep = 0; rep < plan.replicates; ++rep) {
            config.seed = replicate_seed(plan.base_seed, scenario, rep);
            for (const ModelVariant variant : plan.variants) {
                StudyRun run;
                run.scenario = scenario;
                run.replicate = rep;
                run.variant = variant;
                run.config = config;
                run.fit = plan.fit;
                // Decorrelates the four chains fitted to one dataset.
                run.fit.seed = config.seed ^
                               (0x9e3779b97f4a7c15ULL *
                                (static_cast<std::uint64_t>(variant) + 1));
                run.key = run_key(scenario, rep, variant, run.config, run.fit);
                runs.push_back(std::move(run));
            }
        }
    }
    return runs;
}

RunRecord execute_run(const StudyRun& run) {
    RunRecord record;
    record.scenario = run.scenario;
    record.replicate = run.replicate;
    record.variant = run.variant;
    record.key = run.key;
    try {
        const PanelDataset data = simulate_scenario(run.config);
        PosteriorSamples samples;
        if (run.variant == ModelVariant::NoPS) {
            samples = fit(data, run.variant, run.fit);
        } else {
            const PropensityScores scores =
                estimate_scores(data, PropensityDesign::simulation());
            samples = fit(data, scores, run.variant, run.fit);
        }
        record.rows = summarize(samples).rows;
        record.ok = true;
    } catch (const std::exception& e) {
        record.ok = false;
        record.error = e.what();
    }
    return record;
}

void write_run_record(const RunRecord& record, const std::filesystem::path& path) {
    json j{{"scenario", record.scenario},
           {"replicate", record.replicate},
           {"variant", to_string(record.variant)},
           {"key", record.key},
           {"ok", record.ok},
           {"error", record.error}};
    j["rows"] = json::array();
    for (const EffectRow& r : record.rows) j["rows"].push_back(effect_row_to_json(r));
    const std::filesystem::path tmp = path.string() + ".tmp";
    write_text_file(tmp, j.dump(2) + "\n");
    std::filesystem::rename(tmp, path);
}

RunRecord read_run_record(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    json j;
    is >> j;
    RunRecord record;
    record.scenario = j.at("scenario").get<int>();
    record.replicate = j.at("replicate").get<int>();
    record.variant = variant_from_string(j.at("variant").get<std::string>());
    record.key = j.at("key").get<std::string>();
    record.ok = j.at("ok").get<bool>();
    record.error = j.at("error").get<std::string>();
    for (const json& row : j.at("rows")) record.rows.push_back(effect_row_from_json(row));
    return record;
}

std::filesystem::path run_manifest_path(const std::filesystem::path& output_dir,
                                        const StudyRun& run) {
    return output_dir / "runs" /
           ("s" + std::to_string(run.scenario) + "_r" + std::to_string(run.replicate) + "_" +
            to_string(run.variant) + ".json");
}

StudyResult run_study(const StudyPlan& plan) {
    plan.validate();
    const std::vector<StudyRun> runs = build_runs(plan);
    std::filesystem::create_directories(plan.output_dir / "runs");

    std::vector<RunRecord> records(runs.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::filesystem::path path = run_manifest_path(plan.output_dir, runs[i]);
        bool reusable = false;
        if (std::filesystem::exists(path)) {
            try {
                RunRecord old = read_run_record(path);
                reusable = old.ok && old.key == runs[i].key;
                if (reusable) records[i] = std::move(old);
            } catch (const std::exception&) {
                reusable = false;  // malformed manifest: re-run
            }
        }
        if (!reusable) pending.push_back(i);
    }

    const auto work = [&](std::size_t i) {
        RunRecord record = execute_run(runs[i]);
        write_run_record(record, run_manifest_path(plan.output_dir, runs[i]));
        records[i] = std::move(record);
    };
    if (!pending.empty()) {
        unsigned n_threads =
            plan.threads > 0 ? static_cast<unsigned>(plan.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
        n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(pending.size()));
        if (n_threads <= 1) {
            for (const std::size_t i : pending) work(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            pool.reserve(n_threads);
            for (unsigned w = 0; w < n_threads; ++w) {
                pool.emplace_back([&] {
                    for (;;) {
                        const std::size_t k = next.fetch_add(1);
                        if (k >= pending.size()) break;
                        work(pending[k]);
                    }
                });
            }
            for (std::thread& t : pool) t.join();
        }
    }

    StudyResult result;
    result.runs_total = static_cast<int>(runs.size());
    result.runs_executed = static_cast<int>(pending.size());
    result.runs_reused = result.runs_total - result.runs_executed;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (records[i].ok) continue;
        ++result.runs_failed;
        result.failures.push_back("scenario " + std::to_string(runs[i].scenario) +
                                  " replicate " + std::to_string(runs[i].replicate) + " " +
                                  to_string(runs[i].variant) + ": " + records[i].error);
    }

    // Aggregation: single-threaded reduction in report order.
    std::vector<int> scenarios = plan.scenarios;
    std::sort(scenarios.begin(), scenarios.end());
    std::vector<ModelVariant> variants = plan.variants;
    std::sort(variants.begin(), variants.end(),
              [](ModelVariant a, ModelVariant b) { return static_cast<int>(a) < static_cast<int>(b); });
    for (const int scenario : scenarios) {
        const double truth_direct = scenario_config(scenario).beta.delta1;
        const double truth_indirect = scenario_config(scenario).beta.delta2;
        for (const ModelVariant variant : variants) {
            std::vector<EffectRow> direct;
            std::vector<EffectRow> indirect;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                if (runs[i].scenario != scenario || runs[i].variant != variant) continue;
                if (!records[i].ok) continue;
                for (const EffectRow& r : records[i].rows) {
                    if (r.name == "A") direct.push_back(r);
                    if (r.name == "Atilde") indirect.push_back(r);
                }
            }
            const auto emit = [&](const char* effect, const std::vector<EffectRow>& rows,
                                  double truth) {
                if (rows.empty()) return;
                StudyMetricsRow row;
                row.scenario = std::to_string(scenario);
                row.variant = to_string(variant);
                row.effect = effect;
                if (rows.size() == 1) {
                    row.metrics90 = degenerate_metrics(rows.front(), truth, 90);
                    row.metrics95 = degenerate_metrics(rows.front(), truth, 95);
                } else {
                    row.metrics90 = coverage_and_bias(rows, truth, 90);
                    row.metrics95 = coverage_and_bias(rows, truth, 95);
                }
                result.metrics.push_back(std::move(row));
            };
            emit("direct", direct, truth_direct);
            emit("indirect", indirect, truth_indirect);
        }
    }
    return result;
}

void emit_report(const StudyMetrics& metrics, const std::filesystem::path& dir) {
    if (metrics.empty()) throw std::invalid_argument("emit_report: no metrics rows");
    StudyMetrics sorted = metrics;
    std::stable_sort(sorted.begin(), sorted.end(), metrics_row_before);
    std::filesystem::create_directories(dir);
    write_text_file(dir / "metrics.csv", format_metrics_delimited(sorted));
    write_text_file(dir / "metrics.md", format_metrics_markdown(sorted));
}

}  // namespace epicausal
