#include "epicausal/inference.hpp"

#include "epicausal/csv.hpp"
#include "epicausal/random_fields.hpp"
#include "epicausal/version.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace epicausal {

namespace {
constexpr double kExpClamp = 700.0;
}  // namespace

double clamped_exp(double x, std::int64_t* clamp_count) {
    if (x > kExpClamp) {
        if (clamp_count) ++*clamp_count;
        x = kExpClamp;
    } else if (x < -kExpClamp) {
        if (clamp_count) ++*clamp_count;
        x = -kExpClamp;
    }
    return std::exp(x);
}

std::string to_string(ModelVariant variant) {
    switch (variant) {
        case ModelVariant::Full: return "full";
        case ModelVariant::NoNugget: return "no_nugget";
        case ModelVariant::NoPS: return "no_ps";
        case ModelVariant::NonSpatial: return "non_spatial";
    }
    throw std::logic_error("to_string: unhandled variant");
}

ModelVariant variant_from_string(const std::string& name) {
    if (name == "full") return ModelVariant::Full;
    if (name == "no_nugget") return ModelVariant::NoNugget;
    if (name == "no_ps") return ModelVariant::NoPS;
    if (name == "non_spatial") return ModelVariant::NonSpatial;
    throw std::invalid_argument("unknown model variant '" + name + "'");
}

std::string to_string(PsTerms terms) {
    switch (terms) {
        case PsTerms::None: return "none";
        case PsTerms::Linear: return "linear";
        case PsTerms::Quadratic: return "quadratic";
    }
    throw std::logic_error("to_string: unhandled ps terms");
}

PsTerms ps_terms_from_string(const std::string& name) {
    if (name == "none") return PsTerms::None;
    if (name == "linear") return PsTerms::Linear;
    if (name == "quadratic") return PsTerms::Quadratic;
    throw std::invalid_argument("unknown ps term set '" + name + "'");
}

std::vector<int> RateDesign::covariate_indices() const {
    std::vector<int> out;
    for (int c = 0; c < n_columns(); ++c) {
        if (names[static_cast<std::size_t>(c)].rfind("X_", 0) == 0) out.push_back(c);
    }
    return out;
}

std::vector<int> RateDesign::covariate_tilde_indices() const {
    std::vector<int> out;
    for (int c = 0; c < n_columns(); ++c) {
        if (names[static_cast<std::size_t>(c)].rfind("Xtilde_", 0) == 0) out.push_back(c);
    }
    return out;
}

Eigen::MatrixXd RateDesign::eta(const Eigen::VectorXd& beta) const {
    if (beta.size() != n_columns()) {
        throw std::invalid_argument("RateDesign::eta: coefficient length mismatch");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(columns.front().rows(), columns.front().cols());
    for (int c = 0; c < n_columns(); ++c) out += beta(c) * columns[static_cast<std::size_t>(c)];
    return out;
}

namespace {

void standardize_valid(Eigen::MatrixXd& m, int valid_from) {
    const Eigen::Index J = m.rows();
    const Eigen::Index T = m.cols();
    const Eigen::Index n = J * (T - valid_from);
    double mean = 0.0;
    for (Eigen::Index t = valid_from; t < T; ++t) mean += m.col(t).sum();
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index t = valid_from; t < T; ++t) {
        ss += (m.col(t).array() - mean).square().sum();
    }
    const double sd = std::sqrt(ss / std::max<double>(1.0, static_cast<double>(n - 1)));
    m.array() -= mean;
    if (sd > 0.0) m.array() /= sd;
}

}  // namespace

RateDesign build_rate_design(const PanelDataset& dataset, const PropensityScores& scores,
                             PsTerms ps_terms) {
    const int J = dataset.n_nodes();
    const int T = dataset.n_weeks();
    RateDesign design;
    design.names.push_back("intercept");
    design.columns.push_back(Eigen::MatrixXd::Ones(J, T));
    design.names.push_back("A");
    design.columns.push_back(dataset.A);
    design.names.push_back("Atilde");
    design.columns.push_back(neighbor_average(dataset.graph, dataset.A));
    for (const auto& [name, field] : dataset.X) {
        design.names.push_back("X_" + name);
        design.columns.push_back(field);
    }
    for (const auto& [name, field] : dataset.X) {
        design.names.push_back("Xtilde_" + name);
        design.columns.push_back(neighbor_average(dataset.graph, field));
    }
    if (ps_terms != PsTerms::None) {
        if (scores.e.rows() != J || scores.e.cols() != T) {
            throw std::invalid_argument("build_rate_design: scores do not match the panel");
        }
        design.valid_from = scores.valid_from;
        design.names.push_back("ps_e");
        design.columns.push_back(scores.e);
        design.names.push_back("ps_etilde");
        design.columns.push_back(scores.e_tilde);
        if (ps_terms == PsTerms::Quadratic) {
            // Quadratic and interaction terms use standardized scores so the
            // regression block stays well conditioned.
            Eigen::MatrixXd ze = scores.e;
            Eigen::MatrixXd zet = scores.e_tilde;
            standardize_valid(ze, scores.valid_from);
            standardize_valid(zet, scores.valid_from);
            design.names.push_back("ps_e2");
            design.columns.push_back(ze.cwiseProduct(ze));
            design.names.push_back("ps_etilde2");
            design.columns.push_back(zet.cwiseProduct(zet));
            design.names.push_back("ps_e_etilde");
            design.columns.push_back(ze.cwiseProduct(zet));
        }
    }
    return design;
}

RateDesign build_rate_design(const PanelDataset& dataset) {
    return build_rate_design(dataset, PropensityScores{}, PsTerms::None);
}

void FitConfig::validate(int T, int ps_valid_from) const {
    if (iterations < 1) throw std::invalid_argument("FitConfig: iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations) {
        throw std::invalid_argument("FitConfig: require 0 <= burn_in < iterations");
    }
    if (thin < 1) throw std::invalid_argument("FitConfig: thin must be >= 1");
    if (latent_thin < 0) throw std::invalid_argument("FitConfig: latent_thin must be >= 0");
    if (lag < 0) throw std::invalid_argument("FitConfig: lag must be >= 0");
    if (window_start < 1 || window_start > T) {
        throw std::invalid_argument("FitConfig: window_start outside 1..T");
    }
    if (window_start <= lag + ps_valid_from) {
        throw std::invalid_argument(
            "FitConfig: window_start must exceed lag + propensity max lag (" +
            std::to_string(lag + ps_valid_from) + ")");
    }
    if (adapt_initial < 1) throw std::invalid_argument("FitConfig: adapt_initial must be >= 1");
    if (!(regression_target_rate > 0.0 && regression_target_rate < 1.0) ||
        !(single_site_target_rate > 0.0 && single_site_target_rate < 1.0)) {
        throw std::invalid_argument("FitConfig: target rates must lie in (0, 1)");
    }
}

Eigen::VectorXd ModelParams::alpha1(const RateDesign& d) const {
    const auto idx = d.covariate_indices();
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = coefficients(idx[k]);
    return out;
}

Eigen::VectorXd ModelParams::alpha2(const RateDesign& d) const {
    const auto idx = d.covariate_tilde_indices();
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = coefficients(idx[k]);
    return out;
}

bool PosteriorSamples::has_column(const std::string& name) const {
    for (const auto& n : scalar_names) {
        if (n == name) return true;
    }
    return false;
}

Eigen::VectorXd PosteriorSamples::column(const std::string& name) const {
    for (std::size_t c = 0; c < scalar_names.size(); ++c) {
        if (scalar_names[c] == name) return scalars.col(static_cast<Eigen::Index>(c));
    }
    throw std::invalid_argument("PosteriorSamples: no column named '" + name + "'");
}

double log_likelihood(const ModelParams& params, const PanelDataset& dataset,
                      const RateDesign& design, ModelVariant variant, const FitConfig& config,
                      std::int64_t* clamp_count) {
    const int J = dataset.n_nodes();
    const int T = dataset.n_weeks();
    if (params.theta.rows() != J || params.theta.cols() != T || params.g.rows() != J ||
        params.g.cols() != T) {
        throw std::invalid_argument("log_likelihood: latent panel shape mismatch");
    }
    const bool nugget = variant_has_nugget(variant);
    if (nugget && (params.v_tilde.rows() != J || params.v_tilde.cols() != T)) {
        throw std::invalid_argument("log_likelihood: v_tilde shape mismatch");
    }
    const Eigen::MatrixXd eta = design.eta(params.coefficients);
    const int t0 = config.window_start_index();
    const int l = config.lag;

    double out = 0.0;
    for (int t = t0; t < T; ++t) {
        for (int j = 0; j < J; ++j) {
            const double u =
                clamped_exp(params.g(j, t) + eta(j, t - l) + params.theta(j, t - l), clamp_count);
            const double mu = u + (nugget ? clamped_exp(params.v_tilde(j, t), clamp_count) : 0.0);
            const double y = static_cast<double>(dataset.Y(j, t));
            out += y * std::log(mu) - mu - std::lgamma(y + 1.0);
        }
    }
    return out;
}

double log_likelihood(const ModelParams& params, const PanelDataset& dataset,
                      const PropensityScores& scores, ModelVariant variant,
                      const FitConfig& config, std::int64_t* clamp_count) {
    const PsTerms terms = variant == ModelVariant::NoPS ? PsTerms::None : config.ps_terms;
    const RateDesign design = terms == PsTerms::None ? build_rate_design(dataset)
                                                     : build_rate_design(dataset, scores, terms);
    return log_likelihood(params, dataset, design, variant, config, clamp_count);
}

namespace {

double log_normal_pdf(double x, double mean, double var) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

double log_inv_gamma_pdf(double x, double shape, double rate) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

}  // namespace

double log_prior(const ModelParams& params, const RateDesign& design, ModelVariant variant,
                 const AdjacencyGraph& graph, int T) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    const bool nugget = variant_has_nugget(variant);

    if (!(params.sigma2 > 0.0) || !(params.tau2 > 0.0)) return neg_inf;
    if (nugget && !(params.sigma_v2 > 0.0)) return neg_inf;
    if (variant == ModelVariant::NonSpatial) {
        if (params.rho_s != 0.0) return neg_inf;
    } else if (!(params.rho_s > 0.0 && params.rho_s < 1.0)) {
        return neg_inf;
    }
    if (!(params.rho_t > 0.0 && params.rho_t < 1.0)) return neg_inf;

    double out = 0.0;
    for (Eigen::Index c = 0; c < params.coefficients.size(); ++c) {
        out += log_normal_pdf(params.coefficients(c), 0.0, kCoefficientPriorVariance);
    }
    out += log_inv_gamma_pdf(params.sigma2, kVariancePriorShape, kVariancePriorRate);
    out += log_inv_gamma_pdf(params.tau2, kVariancePriorShape, kVariancePriorRate);
    if (nugget) {
        out += log_inv_gamma_pdf(params.sigma_v2, kVariancePriorShape, kVariancePriorRate);
        out += log_normal_pdf(params.mu_v, 0.0, kCoefficientPriorVariance);
    }
    // rho_s, rho_t ~ Uniform(0,1): zero log density inside the support.

    out += stcar_log_density(params.theta, graph, T,
                             {std::sqrt(params.sigma2), params.rho_s, params.rho_t});
    for (Eigen::Index t = 0; t < params.g.cols(); ++t) {
        for (Eigen::Index j = 0; j < params.g.rows(); ++j) {
            out += log_normal_pdf(params.g(j, t), 0.0, params.tau2);
        }
    }
    if (nugget) {
        for (Eigen::Index t = 0; t < params.v_tilde.cols(); ++t) {
            for (Eigen::Index j = 0; j < params.v_tilde.rows(); ++j) {
                out += log_normal_pdf(params.v_tilde(j, t), params.mu_v, params.sigma_v2);
            }
        }
    }
    (void)design;
    return out;
}

void write_samples_csv(const PosteriorSamples& samples, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_samples_csv: cannot open " + path.string());
    for (std::size_t c = 0; c < samples.scalar_names.size(); ++c) {
        if (c) os << ',';
        os << samples.scalar_names[c];
    }
    os << '\n';
    for (Eigen::Index r = 0; r < samples.scalars.rows(); ++r) {
        for (Eigen::Index c = 0; c < samples.scalars.cols(); ++c) {
            if (c) os << ',';
            os << format_double(samples.scalars(r, c));
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("write_samples_csv: write failed for " + path.string());
}

PosteriorSamples read_samples_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_samples_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("read_samples_csv: " + path.string() + " is empty");
    }
    PosteriorSamples out;
    out.scalar_names = split_csv_line(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto toks = split_csv_line(line);
        if (toks.size() != out.scalar_names.size()) {
            throw std::runtime_error("read_samples_csv: ragged row in " + path.string());
        }
        std::vector<double> row(toks.size());
        for (std::size_t c = 0; c < toks.size(); ++c) row[c] = std::stod(toks[c]);
        rows.push_back(std::move(row));
    }
    out.scalars.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(out.scalar_names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out.scalars(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return out;
}

void write_run_manifest(const PosteriorSamples& samples, const FitConfig& config,
                        const std::filesystem::path& path) {
    nlohmann::json j;
    j["version"] = version();
    j["variant"] = to_string(samples.variant);
    j["seed"] = samples.seed;
    j["n_draws"] = samples.n_draws();
    j["exp_clamp_count"] = samples.exp_clamp_count;
    j["acceptance_rates"] = samples.acceptance_rates;
    j["config"] = {
        {"iterations", config.iterations},
        {"burn_in", config.burn_in},
        {"thin", config.thin},
        {"latent_thin", config.latent_thin},
        {"lag", config.lag},
        {"window_start", config.window_start},
        {"ps_terms", to_string(config.ps_terms)},
    };
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_run_manifest: cannot open " + path.string());
    os << j.dump(1) << '\n';
    if (!os) throw std::runtime_error("write_run_manifest: write failed for " + path.string());
}

}  // namespace epicausal
