#include "epicausal/effects.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace epicausal {

double effect_transform(double delta, double a) { return 100.0 * std::expm1(a * delta); }

namespace {

double quantile_of_sorted(const std::vector<double>& v, double p) {
    const double h = p * (static_cast<double>(v.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string general(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& body) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : body) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    const auto emit = [&](const std::vector<std::string>& row) {
        os << '|';
        for (std::size_t c = 0; c < row.size(); ++c) {
            os << ' ' << row[c] << std::string(width[c] - row[c].size(), ' ') << " |";
        }
        os << '\n';
    };
    emit(header);
    os << '|';
    for (std::size_t c = 0; c < header.size(); ++c) os << std::string(width[c] + 2, '-') << '|';
    os << '\n';
    for (const auto& row : body) emit(row);
    return os.str();
}

}  // namespace

double empirical_quantile(const Eigen::VectorXd& draws, double p) {
    if (draws.size() == 0) throw std::invalid_argument("empirical_quantile: empty draw vector");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("empirical_quantile: p outside [0,1]");
    std::vector<double> v(draws.data(), draws.data() + draws.size());
    std::sort(v.begin(), v.end());
    return quantile_of_sorted(v, p);
}

bool EffectSummary::has_row(const std::string& name) const {
    for (const auto& r : rows) {
        if (r.name == name) return true;
    }
    return false;
}

const EffectRow& EffectSummary::row(const std::string& name) const {
    for (const auto& r : rows) {
        if (r.name == name) return r;
    }
    throw std::invalid_argument("EffectSummary: no row named '" + name + "'");
}

EffectSummary summarize(const PosteriorSamples& samples, double transform_scale) {
    if (samples.n_draws() < 2) {
        throw std::invalid_argument("summarize: need at least 2 retained draws");
    }
    // Coefficient columns run up to the first hyperparameter column.
    std::size_t n_coef = samples.scalar_names.size();
    for (std::size_t c = 0; c < samples.scalar_names.size(); ++c) {
        if (samples.scalar_names[c] == "sigma2") {
            n_coef = c;
            break;
        }
    }

    EffectSummary out;
    out.transform_scale = transform_scale;
    out.n_draws = samples.n_draws();
    out.rows.reserve(n_coef);
    const auto n = static_cast<std::size_t>(samples.n_draws());
    for (std::size_t c = 0; c < n_coef; ++c) {
        EffectRow row;
        row.name = samples.scalar_names[c];
        std::vector<double> d(n);
        std::vector<double> pct(n);
        double sum = 0.0;
        double pct_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = samples.scalars(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
            pct[i] = effect_transform(d[i], transform_scale);
            sum += d[i];
            pct_sum += pct[i];
        }
        std::sort(d.begin(), d.end());
        std::sort(pct.begin(), pct.end());
        row.mean = sum / static_cast<double>(n);
        row.pct_mean = pct_sum / static_cast<double>(n);
        row.median = quantile_of_sorted(d, 0.5);
        row.lower90 = quantile_of_sorted(d, 0.05);
        row.upper90 = quantile_of_sorted(d, 0.95);
        row.lower95 = quantile_of_sorted(d, 0.025);
        row.upper95 = quantile_of_sorted(d, 0.975);
        row.pct_median = quantile_of_sorted(pct, 0.5);
        row.pct_lower90 = quantile_of_sorted(pct, 0.05);
        row.pct_upper90 = quantile_of_sorted(pct, 0.95);
        row.pct_lower95 = quantile_of_sorted(pct, 0.025);
        row.pct_upper95 = quantile_of_sorted(pct, 0.975);
        row.significant90 = row.pct_lower90 > 0.0 || row.pct_upper90 < 0.0;
        row.significant95 = row.pct_lower95 > 0.0 || row.pct_upper95 < 0.0;
        out.rows.push_back(std::move(row));
    }
    return out;
}

EffectMetrics coverage_and_bias(const std::vector<EffectRow>& replicates, double truth,
                                int level) {
    if (replicates.size() < 2) {
        throw std::invalid_argument("coverage_and_bias: need at least 2 replicates");
    }
    if (level != 90 && level != 95) {
        throw std::invalid_argument("coverage_and_bias: level must be 90 or 95");
    }
    const auto n = static_cast<double>(replicates.size());
    double err_sum = 0.0;
    double err_sq = 0.0;
    double hits = 0.0;
    for (const auto& r : replicates) {
        const double err = r.median - truth;
        err_sum += err;
        err_sq += err * err;
        const double lo = level == 90 ? r.lower90 : r.lower95;
        const double hi = level == 90 ? r.upper90 : r.upper95;
        if (lo <= truth && truth <= hi) hits += 1.0;
    }
    EffectMetrics m;
    m.n_replicates = static_cast<int>(replicates.size());
    m.level = level;
    const double mean_err = err_sum / n;
    m.bias = mean_err * 100.0;
    m.bias_se = std::sqrt((err_sq - n * mean_err * mean_err) / (n - 1.0) / n) * 100.0;
    const double p = hits / n;
    m.coverage = p * 100.0;
    m.coverage_se = std::sqrt(p * (1.0 - p) / n) * 100.0;
    return m;
}

std::string format_metrics_delimited(const StudyMetrics& rows) {
    std::ostringstream os;
    os << "scenario,variant,effect,n,bias90,bias90_se,coverage90,coverage90_se,"
          "bias95,bias95_se,coverage95,coverage95_se\n";
    for (const auto& r : rows) {
        os << r.scenario << ',' << r.variant << ',' << r.effect << ',' << r.metrics90.n_replicates
           << ',' << general(r.metrics90.bias) << ',' << general(r.metrics90.bias_se) << ','
           << general(r.metrics90.coverage) << ',' << general(r.metrics90.coverage_se) << ','
           << general(r.metrics95.bias) << ',' << general(r.metrics95.bias_se) << ','
           << general(r.metrics95.coverage) << ',' << general(r.metrics95.coverage_se) << '\n';
    }
    return os.str();
}

std::string format_metrics_markdown(const StudyMetrics& rows) {
    std::vector<std::vector<std::string>> body;
    body.reserve(rows.size());
    for (const auto& r : rows) {
        body.push_back({r.scenario, r.variant, r.effect,
                        fixed(r.metrics90.bias, 2) + " (" + fixed(r.metrics90.bias_se, 2) + ")",
                        fixed(r.metrics90.coverage, 0) + " (" + fixed(r.metrics90.coverage_se, 0) +
                            ")",
                        fixed(r.metrics95.coverage, 0) + " (" + fixed(r.metrics95.coverage_se, 0) +
                            ")"});
    }
    return markdown_table(
        {"Scenario", "Model", "Effect", "Bias x100 (SE)", "90% coverage (SE)", "95% coverage (SE)"},
        body);
}

std::string format_effects_delimited(const EffectSummary& summary) {
    std::ostringstream os;
    os << "coefficient,median,mean,lower90,upper90,lower95,upper95,"
          "pct_median,pct_lower95,pct_upper95,significant95\n";
    for (const auto& r : summary.rows) {
        os << r.name << ',' << general(r.median) << ',' << general(r.mean) << ','
           << general(r.lower90) << ',' << general(r.upper90) << ',' << general(r.lower95) << ','
           << general(r.upper95) << ',' << general(r.pct_median) << ',' << general(r.pct_lower95)
           << ',' << general(r.pct_upper95) << ',' << (r.significant95 ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string format_effects_markdown(const EffectSummary& summary) {
    std::vector<std::vector<std::string>> body;
    body.reserve(summary.rows.size());
    for (const auto& r : summary.rows) {
        body.push_back({r.name + (r.significant95 ? "*" : ""), fixed(r.median, 3),
                        "(" + fixed(r.lower95, 3) + ", " + fixed(r.upper95, 3) + ")",
                        fixed(r.pct_median, 1),
                        "(" + fixed(r.pct_lower95, 1) + ", " + fixed(r.pct_upper95, 1) + ")"});
    }
    return markdown_table(
        {"Coefficient", "Median", "95% interval", "% change", "95% interval (%)"}, body);
}

}  // namespace epicausal
