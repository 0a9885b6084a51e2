#pragma once

#include "epicausal/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>

namespace epicausal {

/// Per-node compartments. Populations are fixed; S + I + R = N holds at
/// every step up to accumulated rounding (checked at 1e-9 * N).
struct EpidemicState {
    Eigen::VectorXd S;
    Eigen::VectorXd I;
    Eigen::VectorXd R;
    Eigen::VectorXd N;
};

/// Log-linear transmission model:
/// log beta_j(t) = alpha0 + X_j(t)^T alpha1 + Xt_j(t)^T alpha2
///               + delta1 * A_j(t) + delta2 * At_j(t),
/// where Xt and At are neighbor averages of X and A.
struct BetaModel {
    double alpha0 = -3.0;
    Eigen::VectorXd alpha1;  // one entry per covariate
    Eigen::VectorXd alpha2;  // one entry per covariate (neighbor-averaged terms)
    double delta1 = 0.5;
    double delta2 = 0.2;
};

/// Synthetic-panel generator settings. Defaults reproduce the base scenario:
/// 15x15 rook grid, T = 30 weeks, N = 100,000 per node.
struct ScenarioConfig {
    int rows = 15;
    int cols = 15;
    int T = 30;
    double population = 100000.0;
    double gamma = 0.1;  // recovery rate, (0, 1]
    double phi = 0.4;    // spatial coupling of infections, [0, 1]
    double rho_s = 0.9;  // latent-field spatial dependence
    double rho_t = 0.5;  // latent-field temporal dependence
    double rho_x = 0.5;  // confounding strength: A = rho_x X + sqrt(1-rho_x^2) E
    BetaModel beta;
    double p = 0.5;      // reporting rate, (0, 1]
    int lag = 2;         // observation lag l >= 0
    double tau = 0.0;    // log-scale observation noise sd >= 0
    double initial_scale = 100.0;  // I_j(1) = initial_scale * exp(U_j)
    std::uint64_t seed = 0;

    void validate() const;
};

/// Latent paths recorded by the generator; all matrices are J x T with
/// column t holding week t+1.
struct SimulationTruth {
    Eigen::MatrixXd S, I, R;
    Eigen::MatrixXd lambda;  // capped infection rate actually applied
    Eigen::MatrixXd theta;   // log(S I / N); -inf where S*I = 0
    Eigen::MatrixXd v;       // spillover term of the rate decomposition
    Eigen::MatrixXd beta;    // exp of the log-linear predictor
    BetaModel beta_model;
    ScenarioConfig config;
};

/// Observed panel: counts Y, intervention A, covariates X (name -> J x T),
/// populations N, and the graph they live on. `zeroed_prefix` is the number
/// of leading Y columns forced to zero by the observation lag; readers
/// without truth.json infer it from leading all-zero columns.
struct PanelDataset {
    AdjacencyGraph graph;
    Eigen::MatrixXi Y;
    Eigen::MatrixXd A;
    std::map<std::string, Eigen::MatrixXd> X;
    Eigen::VectorXd N;
    int zeroed_prefix = 0;
    std::optional<SimulationTruth> truth;

    int n_nodes() const { return static_cast<int>(Y.rows()); }
    int n_weeks() const { return static_cast<int>(Y.cols()); }
};

/// New-infection rate lambda_j = beta_j (S_j/N_j) [(1-phi) I_j + phi Itilde_j]
/// with Itilde the neighbor average of I, capped at S_j so the next state
/// stays nonnegative.
Eigen::VectorXd infection_rate(const EpidemicState& state, const AdjacencyGraph& graph,
                               double phi, const Eigen::VectorXd& beta);

/// One week of the difference equations: S' = S - lambda, I' = I + lambda
/// - gamma I, R' = R + gamma I. Requires lambda <= S componentwise.
EpidemicState step(const EpidemicState& state, const Eigen::VectorXd& lambda, double gamma);

/// Rate decomposition: theta_j = log(S_j I_j / N_j) (-inf when S_j I_j = 0),
/// v_j = beta_j phi (S_j/N_j)(Itilde_j - I_j). Satisfies
/// beta_j exp(theta_j) + v_j = uncapped infection rate.
std::pair<Eigen::VectorXd, Eigen::VectorXd> decompose_rate(const EpidemicState& state,
                                                           const AdjacencyGraph& graph, double phi,
                                                           const Eigen::VectorXd& beta);

/// Lagged under-reported counts: Y_j(t) ~ Poisson[p exp(g) lambda_j(t-l)]
/// with g ~ N(0, tau^2) drawn per (j,t). Columns t < l (0-based) are zero.
/// Draw order: column by column, node by node; g before the count.
Eigen::MatrixXi observe(const Eigen::MatrixXd& lambda_history, double p, double tau, int l,
                        std::mt19937_64& rng);

/// Full synthetic-panel generator: latent fields U, X, E from the
/// spatial/space-time models, A = rho_x X + sqrt(1-rho_x^2) E, log-linear
/// beta, deterministic compartment paths, stochastic observation.
/// Deterministic given config.seed.
PanelDataset simulate_scenario(const ScenarioConfig& config);

/// Directory layout: Y.csv, A.csv, X_<name>.csv, N.csv, graph.txt and, when
/// truth is attached, truth.json. Matrix CSVs carry a t1..tT header and J
/// data rows. Integer Y round-trips bit-exactly; doubles use %.17g.
void write_panel(const PanelDataset& data, const std::filesystem::path& dir);
PanelDataset read_panel(const std::filesystem::path& dir);

}  // namespace epicausal
