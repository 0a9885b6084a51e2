#pragma once

#include "epicausal/propensity.hpp"
#include "epicausal/sir.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace epicausal {

/// Model variants compared in the simulation study.
///   Full       - nugget + spatial field + propensity adjustments
///   NoNugget   - drops the v_tilde nugget term (and mu_v, sigma_v2)
///   NoPS       - drops every propensity-score regressor
///   NonSpatial - fixes rho_s = 0 and drops the nugget
enum class ModelVariant { Full, NoNugget, NoPS, NonSpatial };

std::string to_string(ModelVariant variant);
ModelVariant variant_from_string(const std::string& name);

inline bool variant_has_nugget(ModelVariant v) {
    return v == ModelVariant::Full || v == ModelVariant::NoPS;
}

/// Propensity-score block of the rate regression: none, linear (e, e_tilde),
/// or quadratic (adds e^2, e_tilde^2, e*e_tilde built from standardized
/// scores). NoPS forces None.
enum class PsTerms { None, Linear, Quadratic };

std::string to_string(PsTerms terms);
PsTerms ps_terms_from_string(const std::string& name);

/// exp(x) with the exponent clamped to +-700; increments *clamp_count when
/// the clamp engages. Keeps Poisson rates finite on wild proposals.
double clamped_exp(double x, std::int64_t* clamp_count = nullptr);

/// Prior hyperparameters: N(0, 10^2) on regression coefficients and mu_v,
/// InvGamma(0.1, 0.1) on every variance, Uniform(0,1) on the rhos.
inline constexpr double kCoefficientPriorVariance = 100.0;
inline constexpr double kVariancePriorShape = 0.1;
inline constexpr double kVariancePriorRate = 0.1;

/// Regression design for the log rate
///   eta_j(t) = alpha0 + X_j(t)^T alpha1 + Xt_j(t)^T alpha2
///            + delta1 A_j(t) + delta2 At_j(t) [+ PS terms].
/// Columns are J x T panels in a fixed, documented order: intercept, A,
/// A_tilde, X_<k>..., Xtilde_<k>..., then PS columns. `valid_from` marks the
/// first panel column where every regressor is defined.
struct RateDesign {
    std::vector<std::string> names;
    std::vector<Eigen::MatrixXd> columns;
    int valid_from = 0;

    int n_columns() const { return static_cast<int>(columns.size()); }
    int intercept_index() const { return 0; }
    int direct_index() const { return 1; }    // coefficient delta1
    int indirect_index() const { return 2; }  // coefficient delta2
    std::vector<int> covariate_indices() const;        // alpha1 block
    std::vector<int> covariate_tilde_indices() const;  // alpha2 block

    /// eta panel column t for coefficient vector beta; NaN where regressors
    /// are undefined (t < valid_from).
    Eigen::MatrixXd eta(const Eigen::VectorXd& beta) const;
};

RateDesign build_rate_design(const PanelDataset& dataset, const PropensityScores& scores,
                             PsTerms ps_terms);
/// Design without propensity columns (scores not needed).
RateDesign build_rate_design(const PanelDataset& dataset);

/// Sampler settings. Week indices are 1-based to match the data layout
/// (window_start = 5 fits weeks 5..T). Requirements checked by validate:
/// burn_in < iterations and window_start > lag + propensity max lag.
struct FitConfig {
    int iterations = 10000;
    int burn_in = 2000;
    int thin = 1;         // scalar draws
    int latent_thin = 50; // latent-field draws; 0 disables storage
    int lag = 2;          // observation lag l in Y_j(t) ~ Poisson around week t-l
    int window_start = 5; // 1-based first fitted week
    PsTerms ps_terms = PsTerms::Quadratic;
    double regression_target_rate = 0.234;  // joint block
    double single_site_target_rate = 0.44;
    int adapt_initial = 200;  // iterations of plain diagonal proposals
    std::uint64_t seed = 0;

    void validate(int T, int ps_valid_from) const;
    int window_start_index() const { return window_start - 1; }
};

/// Current state of every model unknown. The regression block lives in
/// `coefficients`, ordered as the RateDesign columns; the named accessors
/// map back to the manuscript symbols. Latent panels are J x T; entries
/// whose week never enters the likelihood are still sampled (from the
/// prior's full conditional) so the field stays a proper STCAR draw.
struct ModelParams {
    Eigen::VectorXd coefficients;
    double sigma2 = 0.1;    // STCAR field variance (theta)
    double tau2 = 0.1;      // observation nugget variance on g
    double sigma_v2 = 0.1;  // nugget variance of v_tilde
    double mu_v = 0.0;      // nugget mean of v_tilde
    double rho_s = 0.5;
    double rho_t = 0.5;
    Eigen::MatrixXd theta;
    Eigen::MatrixXd g;
    Eigen::MatrixXd v_tilde;

    double alpha0(const RateDesign& d) const { return coefficients(d.intercept_index()); }
    double delta1(const RateDesign& d) const { return coefficients(d.direct_index()); }
    double delta2(const RateDesign& d) const { return coefficients(d.indirect_index()); }
    Eigen::VectorXd alpha1(const RateDesign& d) const;
    Eigen::VectorXd alpha2(const RateDesign& d) const;
};

/// Retained draws. `scalars` has one row per draw; columns are the design
/// coefficient names followed by sigma2, tau2, [sigma_v2, mu_v,] rho_s,
/// rho_t (nugget columns only for variants that keep the nugget).
struct PosteriorSamples {
    std::vector<std::string> scalar_names;
    Eigen::MatrixXd scalars;
    std::vector<Eigen::MatrixXd> theta_draws;  // thinned, optional
    std::vector<Eigen::MatrixXd> g_draws;
    std::vector<Eigen::MatrixXd> v_draws;
    std::vector<int> latent_draw_iterations;
    std::map<std::string, double> acceptance_rates;
    std::int64_t exp_clamp_count = 0;
    ModelVariant variant = ModelVariant::Full;
    std::uint64_t seed = 0;
    /// Complete parameter state after the final iteration; lets a chain be
    /// continued (pass as `initial` to fit) for invariance checks.
    ModelParams final_state;

    int n_draws() const { return static_cast<int>(scalars.rows()); }
    bool has_column(const std::string& name) const;
    Eigen::VectorXd column(const std::string& name) const;
};

/// Poisson log likelihood of Eq-style rate
///   mu_j(t) = exp{g_j(t) + eta_j(t-l) + theta_j(t-l)} [+ exp{v_tilde_j(t)}]
/// summed over the fit window (weeks window_start..T). Exponents are
/// clamped at +-700; pass a counter to observe clamping.
double log_likelihood(const ModelParams& params, const PanelDataset& dataset,
                      const RateDesign& design, ModelVariant variant, const FitConfig& config,
                      std::int64_t* clamp_count = nullptr);
/// Same, building the design from scores (NoPS and None ignore them).
double log_likelihood(const ModelParams& params, const PanelDataset& dataset,
                      const PropensityScores& scores, ModelVariant variant,
                      const FitConfig& config, std::int64_t* clamp_count = nullptr);

/// Independent N(0,10^2) on every regression coefficient and mu_v,
/// InvGamma(0.1, 0.1) on the variances, Uniform(0,1) on the rhos, STCAR on
/// theta, N(0, tau2) on g, N(mu_v, sigma_v2) on v_tilde. Returns -inf
/// outside the support.
double log_prior(const ModelParams& params, const RateDesign& design, ModelVariant variant,
                 const AdjacencyGraph& graph, int T);

/// Metropolis-within-Gibbs sampler; deterministic given config.seed. Pass
/// `initial` to continue from a known state (e.g. a previous final_state)
/// instead of the default initialization.
PosteriorSamples fit(const PanelDataset& dataset, const PropensityScores& scores,
                     ModelVariant variant, const FitConfig& config,
                     const ModelParams* initial = nullptr);
/// NoPS convenience entry point (no scores required).
PosteriorSamples fit(const PanelDataset& dataset, ModelVariant variant, const FitConfig& config,
                     const ModelParams* initial = nullptr);

/// One row per retained draw under a header of scalar column names; %.17g.
void write_samples_csv(const PosteriorSamples& samples, const std::filesystem::path& path);
/// Names + draws only; latents and diagnostics are not persisted in the CSV.
PosteriorSamples read_samples_csv(const std::filesystem::path& path);
/// JSON run manifest: variant, seed, config echo, acceptance rates, clamps.
void write_run_manifest(const PosteriorSamples& samples, const FitConfig& config,
                        const std::filesystem::path& path);

}  // namespace epicausal
