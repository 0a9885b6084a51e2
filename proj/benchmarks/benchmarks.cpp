#include "epicausal/inference.hpp"
#include "epicausal/propensity.hpp"
#include "epicausal/random_fields.hpp"
#include "epicausal/sir.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace epicausal;

namespace {

// Density with the eigendecomposition recomputed per call, the worst case a
// caller can hit.
void BM_StcarDensityCold(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const AdjacencyGraph g = rook_grid(side, side);
    const int T = 30;
    const StcarParams p{0.7, 0.9, 0.5};
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd theta = sample_stcar(g, T, p, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(stcar_log_density(theta, g, T, p));
    }
}
BENCHMARK(BM_StcarDensityCold)->Arg(5)->Arg(10)->Arg(15);

// Density with cached spectra, the path the sampler actually takes.
void BM_StcarDensityCached(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const AdjacencyGraph g = rook_grid(side, side);
    const int T = 30;
    const StcarParams p{0.7, 0.9, 0.5};
    const SpectralCar spatial(g);
    const SpectralCar temporal(temporal_path_graph(T));
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd theta = sample_stcar(spatial, temporal, p, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(stcar_log_density(theta, spatial, temporal, p));
    }
}
BENCHMARK(BM_StcarDensityCached)->Arg(5)->Arg(10)->Arg(15);

void BM_StcarSample(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const AdjacencyGraph g = rook_grid(side, side);
    const int T = 30;
    const StcarParams p{0.7, 0.9, 0.5};
    const SpectralCar spatial(g);
    const SpectralCar temporal(temporal_path_graph(T));
    std::mt19937_64 rng(2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_stcar(spatial, temporal, p, rng).sum());
    }
}
BENCHMARK(BM_StcarSample)->Arg(5)->Arg(10)->Arg(15);

void BM_Simulate(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    ScenarioConfig sc;
    sc.rows = side;
    sc.cols = side;
    sc.T = 30;
    sc.seed = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_scenario(sc).Y.sum());
    }
}
BENCHMARK(BM_Simulate)->Arg(10)->Arg(15);

// Whole-chain throughput; items/s is MCMC iterations per second.
void BM_SamplerIterations(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    ScenarioConfig sc;
    sc.rows = side;
    sc.cols = side;
    sc.T = 30;
    sc.seed = 4;
    const PanelDataset data = simulate_scenario(sc);
    const PropensityScores scores = estimate_scores(data, PropensityDesign::simulation());
    FitConfig cfg;
    cfg.iterations = 200;
    cfg.burn_in = 100;
    cfg.latent_thin = 0;
    cfg.seed = 5;
    for (auto _ : state) {
        const PosteriorSamples s = fit(data, scores, ModelVariant::Full, cfg);
        benchmark::DoNotOptimize(s.scalars.data());
    }
    state.SetItemsProcessed(state.iterations() * cfg.iterations);
}
BENCHMARK(BM_SamplerIterations)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_LeastSquares(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int p = 12;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    for (int c = 1; c < p; ++c) {
        for (int r = 0; r < n; ++r) x(r, c) = normal(rng);
    }
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r) y(r) = normal(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_least_squares(x, y).coefficients.sum());
    }
}
BENCHMARK(BM_LeastSquares)->Arg(500)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
