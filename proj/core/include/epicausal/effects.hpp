#pragma once

#include "epicausal/inference.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace epicausal {

/// Percent increase in expected cases for an `a`-unit change of the
/// regressor: 100 * (exp(a * delta) - 1). With a = 1 this is 100 * (risk
/// ratio - 1); the reported scale uses a = 50.
double effect_transform(double delta, double a = 50.0);

/// Empirical quantile with linear interpolation between order statistics
/// (the common "type 7" rule): h = p*(n-1), interpolate v[floor(h)],
/// v[ceil(h)]. p must lie in [0, 1]; draws must be nonempty.
double empirical_quantile(const Eigen::VectorXd& draws, double p);

/// Posterior summary of one scalar column, on the coefficient scale and on
/// the percent scale. Percent quantities are summaries of the transformed
/// draws, not transforms of the summaries. Significance flags record whether
/// the percent-scale interval excludes 0.
struct EffectRow {
    std::string name;
    double median = 0.0;
    double mean = 0.0;
    double lower90 = 0.0, upper90 = 0.0;
    double lower95 = 0.0, upper95 = 0.0;
    double pct_median = 0.0;
    double pct_mean = 0.0;
    double pct_lower90 = 0.0, pct_upper90 = 0.0;
    double pct_lower95 = 0.0, pct_upper95 = 0.0;
    bool significant90 = false;
    bool significant95 = false;
};

/// One row per regression coefficient column (delta1 = "A", delta2 =
/// "Atilde", then covariate and propensity columns). Hyperparameter columns
/// (sigma2 onward) are not summarized here.
struct EffectSummary {
    std::vector<EffectRow> rows;
    double transform_scale = 50.0;
    int n_draws = 0;

    bool has_row(const std::string& name) const;
    const EffectRow& row(const std::string& name) const;
};

/// Requires at least 2 retained draws; throws invalid_argument otherwise.
EffectSummary summarize(const PosteriorSamples& samples, double transform_scale = 50.0);

/// Replication metrics for one (scenario, variant, effect) cell at one
/// interval level. Bias uses the posterior median as the point estimate.
struct EffectMetrics {
    int n_replicates = 0;
    int level = 90;  // 90 or 95
    double bias = 0.0;         // mean(median - truth) * 100
    double bias_se = 0.0;      // sd(median - truth) / sqrt(n) * 100
    double coverage = 0.0;     // percent of intervals containing truth
    double coverage_se = 0.0;  // binomial se, percent
};

/// Requires >= 2 replicate rows and level in {90, 95}.
EffectMetrics coverage_and_bias(const std::vector<EffectRow>& replicates, double truth,
                                int level);

/// Labeled metrics table; both levels are always carried because the
/// manuscript text and its table disagree about which one is scored.
struct StudyMetricsRow {
    std::string scenario;
    std::string variant;
    std::string effect;  // "direct" or "indirect"
    EffectMetrics metrics90;
    EffectMetrics metrics95;
};
using StudyMetrics = std::vector<StudyMetricsRow>;

/// Bias/coverage table, one line per (scenario, variant, effect).
std::string format_metrics_delimited(const StudyMetrics& rows);
std::string format_metrics_markdown(const StudyMetrics& rows);

/// Coefficient table: per-coefficient medians and intervals on both scales,
/// 95%-significant rows starred in the markdown form.
std::string format_effects_delimited(const EffectSummary& summary);
std::string format_effects_markdown(const EffectSummary& summary);

}  // namespace epicausal
