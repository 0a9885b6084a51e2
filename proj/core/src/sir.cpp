#include "epicausal/sir.hpp"

#include "epicausal/random_fields.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace epicausal {

void ScenarioConfig::validate() const {
    if (rows <= 0 || cols <= 0 || rows * cols < 2) {
        throw std::invalid_argument("ScenarioConfig: grid must have at least 2 nodes");
    }
    if (T <= 0) throw std::invalid_argument("ScenarioConfig: T must be positive");
    if (!(population > 0.0)) throw std::invalid_argument("ScenarioConfig: population must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("ScenarioConfig: gamma must lie in (0, 1]");
    }
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw std::invalid_argument("ScenarioConfig: phi must lie in [0, 1]");
    }
    if (!(rho_s >= 0.0 && rho_s < 1.0) || !(rho_t >= 0.0 && rho_t < 1.0)) {
        throw std::invalid_argument("ScenarioConfig: rho_s and rho_t must lie in [0, 1)");
    }
    if (!(rho_x >= 0.0 && rho_x <= 1.0)) {
        throw std::invalid_argument("ScenarioConfig: rho_x must lie in [0, 1]");
    }
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("ScenarioConfig: p must lie in (0, 1]");
    if (lag < 0) throw std::invalid_argument("ScenarioConfig: lag must be nonnegative");
    if (!(tau >= 0.0)) throw std::invalid_argument("ScenarioConfig: tau must be nonnegative");
    if (!(initial_scale > 0.0)) {
        throw std::invalid_argument("ScenarioConfig: initial_scale must be positive");
    }
    if (beta.alpha1.size() != beta.alpha2.size()) {
        throw std::invalid_argument("ScenarioConfig: alpha1 and alpha2 must have equal length");
    }
}

namespace {

void check_state(const EpidemicState& state) {
    const auto n = state.N.size();
    if (state.S.size() != n || state.I.size() != n || state.R.size() != n) {
        throw std::invalid_argument("EpidemicState: compartment lengths differ");
    }
}

}  // namespace

Eigen::VectorXd infection_rate(const EpidemicState& state, const AdjacencyGraph& graph,
                               double phi, const Eigen::VectorXd& beta) {
    check_state(state);
    if (state.N.size() != graph.n_nodes()) {
        throw std::invalid_argument("infection_rate: state does not match graph");
    }
    if (beta.size() != state.N.size()) {
        throw std::invalid_argument("infection_rate: beta length mismatch");
    }
    if ((beta.array() < 0.0).any()) {
        throw std::invalid_argument("infection_rate: beta must be nonnegative");
    }
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw std::invalid_argument("infection_rate: phi must lie in [0, 1]");
    }
    const Eigen::VectorXd i_tilde = neighbor_average(graph, state.I);
    Eigen::VectorXd lambda = beta.array() * (state.S.array() / state.N.array()) *
                             ((1.0 - phi) * state.I.array() + phi * i_tilde.array());
    return lambda.cwiseMin(state.S);
}

EpidemicState step(const EpidemicState& state, const Eigen::VectorXd& lambda, double gamma) {
    check_state(state);
    if (lambda.size() != state.N.size()) {
        throw std::invalid_argument("step: lambda length mismatch");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("step: gamma must lie in (0, 1]");
    }
    if ((lambda.array() < 0.0).any()) {
        throw std::invalid_argument("step: lambda must be nonnegative");
    }
    if ((lambda.array() > state.S.array()).any()) {
        throw std::runtime_error("step: lambda exceeds S; infection_rate must cap first");
    }
    EpidemicState next;
    next.N = state.N;
    next.S = state.S - lambda;
    next.I = state.I + lambda - gamma * state.I;
    next.R = state.R + gamma * state.I;
    return next;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> decompose_rate(const EpidemicState& state,
                                                           const AdjacencyGraph& graph, double phi,
                                                           const Eigen::VectorXd& beta) {
    check_state(state);
    if (beta.size() != state.N.size()) {
        throw std::invalid_argument("decompose_rate: beta length mismatch");
    }
    const int n = static_cast<int>(state.N.size());
    Eigen::VectorXd theta(n);
    for (int j = 0; j < n; ++j) {
        const double si = state.S(j) * state.I(j);
        theta(j) = si > 0.0 ? std::log(si / state.N(j))
                            : -std::numeric_limits<double>::infinity();
    }
    const Eigen::VectorXd i_tilde = neighbor_average(graph, state.I);
    const Eigen::VectorXd v = beta.array() * phi * (state.S.array() / state.N.array()) *
                              (i_tilde.array() - state.I.array());
    return {theta, v};
}

Eigen::MatrixXi observe(const Eigen::MatrixXd& lambda_history, double p, double tau, int l,
                        std::mt19937_64& rng) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("observe: p must lie in (0, 1]");
    if (!(tau >= 0.0)) throw std::invalid_argument("observe: tau must be nonnegative");
    if (l < 0) throw std::invalid_argument("observe: lag must be nonnegative");
    const int J = static_cast<int>(lambda_history.rows());
    const int T = static_cast<int>(lambda_history.cols());
    Eigen::MatrixXi y = Eigen::MatrixXi::Zero(J, T);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = l; t < T; ++t) {
        for (int j = 0; j < J; ++j) {
            const double g = tau > 0.0 ? tau * normal(rng) : 0.0;
            const double rate = p * std::exp(g) * lambda_history(j, t - l);
            if (rate > 0.0) {
                std::poisson_distribution<int> pois(rate);
                y(j, t) = pois(rng);
            }
        }
    }
    return y;
}

PanelDataset simulate_scenario(const ScenarioConfig& config) {
    config.validate();
    const AdjacencyGraph graph = rook_grid(config.rows, config.cols);
    const SpectralCar spatial(graph);
    const SpectralCar temporal(temporal_path_graph(config.T));
    const int J = graph.n_nodes();
    const int T = config.T;
    const int q = static_cast<int>(config.beta.alpha1.size());

    std::mt19937_64 rng(config.seed);
    // Draw order is part of the reproducibility contract: U, then one
    // space-time field per covariate, then E, then observation noise.
    const Eigen::VectorXd u = sample_car(spatial, {1.0, config.rho_s}, rng);
    std::map<std::string, Eigen::MatrixXd> x_fields;
    for (int k = 0; k < q; ++k) {
        const std::string name = q == 1 ? "x" : "x" + std::to_string(k + 1);
        x_fields.emplace(name,
                         sample_stcar(spatial, temporal, {1.0, config.rho_s, config.rho_t}, rng));
    }
    const Eigen::MatrixXd e_field =
        sample_stcar(spatial, temporal, {1.0, config.rho_s, config.rho_t}, rng);

    // A mixes the first covariate's field with independent noise; covariates
    // beyond the first act as additional confounders only through beta.
    Eigen::MatrixXd a_panel;
    if (q > 0) {
        a_panel = config.rho_x * x_fields.begin()->second +
                  std::sqrt(1.0 - config.rho_x * config.rho_x) * e_field;
    } else {
        a_panel = e_field;
    }
    const Eigen::MatrixXd a_tilde = neighbor_average(graph, a_panel);

    SimulationTruth truth;
    truth.S.resize(J, T);
    truth.I.resize(J, T);
    truth.R.resize(J, T);
    truth.lambda.resize(J, T);
    truth.theta.resize(J, T);
    truth.v.resize(J, T);
    truth.beta.resize(J, T);
    truth.beta_model = config.beta;
    truth.config = config;

    EpidemicState state;
    state.N = Eigen::VectorXd::Constant(J, config.population);
    state.I = config.initial_scale * u.array().exp();
    state.I = state.I.cwiseMin(state.N);  // guards extreme field draws
    state.S = state.N - state.I;
    state.R = Eigen::VectorXd::Zero(J);

    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(J, config.beta.alpha0);
        int k = 0;
        for (const auto& [name, field] : x_fields) {
            const Eigen::VectorXd xt = field.col(t);
            eta += config.beta.alpha1(k) * xt +
                   config.beta.alpha2(k) * neighbor_average(graph, xt);
            ++k;
        }
        eta += config.beta.delta1 * a_panel.col(t) + config.beta.delta2 * a_tilde.col(t);
        const Eigen::VectorXd beta_t = eta.array().exp();

        const Eigen::VectorXd lambda_t = infection_rate(state, graph, config.phi, beta_t);
        const auto [theta_t, v_t] = decompose_rate(state, graph, config.phi, beta_t);

        truth.S.col(t) = state.S;
        truth.I.col(t) = state.I;
        truth.R.col(t) = state.R;
        truth.lambda.col(t) = lambda_t;
        truth.theta.col(t) = theta_t;
        truth.v.col(t) = v_t;
        truth.beta.col(t) = beta_t;

        if (t + 1 < T) state = step(state, lambda_t, config.gamma);
    }

    PanelDataset data;
    data.graph = graph;
    data.A = a_panel;
    data.X = x_fields;
    data.N = Eigen::VectorXd::Constant(J, config.population);
    data.zeroed_prefix = std::min(config.lag, T);
    data.Y = observe(truth.lambda, config.p, config.tau, config.lag, rng);
    data.truth = std::move(truth);
    return data;
}

}  // namespace epicausal
