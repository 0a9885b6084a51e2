#include "epicausal/random_fields.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

using namespace epicausal;

namespace {

Eigen::MatrixXd empirical_cov(const std::vector<Eigen::VectorXd>& draws) {
    const auto n = static_cast<double>(draws.size());
    const auto d = draws.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : draws) mean += x;
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& x : draws) {
        const Eigen::VectorXd c = x - mean;
        cov += c * c.transpose();
    }
    return cov / (n - 1.0);
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

double dense_stcar_log_density(const Eigen::MatrixXd& theta, const AdjacencyGraph& space, int T,
                               const StcarParams& p) {
    const Eigen::MatrixXd ps = oracle::dense_car_structure(space, p.rho_s);
    const Eigen::MatrixXd pt =
        oracle::dense_car_structure(temporal_path_graph(T), p.rho_t);
    const Eigen::MatrixXd cov = p.sigma * p.sigma * oracle::kron(pt, ps).inverse();
    return oracle::mvn_log_density_cov(flatten(theta), cov);
}

}  // namespace

TEST_SUITE("random_fields") {

TEST_CASE("sample_car independent case has unit variances") {
    const auto g = rook_grid(1, 2);
    std::mt19937_64 rng(11);
    const int n = 100000;
    Eigen::Vector2d sq = Eigen::Vector2d::Zero();
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = sample_car(g, {1.0, 0.0}, rng);
        sq += x.cwiseProduct(x);
    }
    sq /= n;
    CHECK(sq(0) == doctest::Approx(1.0).epsilon(0.03));
    CHECK(sq(1) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("sample_car scale equivariance at fixed seed") {
    const auto g = rook_grid(2, 3);
    std::mt19937_64 a(42), b(42);
    const Eigen::VectorXd x1 = sample_car(g, {1.0, 0.7}, a);
    const Eigen::VectorXd x2 = sample_car(g, {2.0, 0.7}, b);
    CHECK((x2 - 2.0 * x1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_car covariance matches the analytic 2x2 inverse") {
    // Precision [[1,-0.5],[-0.5,1]] inverts to (1/0.75)[[1,0.5],[0.5,1]].
    const auto g = rook_grid(1, 2);
    const SpectralCar sp(g);
    std::mt19937_64 rng(5);
    std::vector<Eigen::VectorXd> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) draws.push_back(sample_car(sp, {1.0, 0.5}, rng));
    const Eigen::MatrixXd cov = empirical_cov(draws);
    CHECK(cov(0, 0) == doctest::Approx(1.0 / 0.75).epsilon(0.03));
    CHECK(cov(1, 1) == doctest::Approx(1.0 / 0.75).epsilon(0.03));
    CHECK(cov(0, 1) == doctest::Approx(0.5 / 0.75).epsilon(0.03));
}

TEST_CASE("sample_stcar with T=1 reproduces sample_car exactly") {
    const auto g = rook_grid(2, 2);
    std::mt19937_64 a(9), b(9);
    const Eigen::MatrixXd st = sample_stcar(g, 1, {1.3, 0.8, 0.5}, a);
    const Eigen::VectorXd car = sample_car(g, {1.3, 0.8}, b);
    CHECK(st.cols() == 1);
    CHECK((st.col(0) - car).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sample_stcar independent case variance is sigma^2 over degree product") {
    const auto g = rook_grid(1, 2);  // degrees 1,1
    const int T = 3;                 // temporal degrees 1,2,1
    std::mt19937_64 rng(13);
    const int n = 100000;
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(2, T);
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd x = sample_stcar(g, T, {2.0, 0.0, 0.0}, rng);
        sq += x.cwiseProduct(x);
    }
    sq /= n;
    const double md[3] = {1.0, 2.0, 1.0};
    for (int j = 0; j < 2; ++j) {
        for (int t = 0; t < T; ++t) {
            CHECK(sq(j, t) == doctest::Approx(4.0 / (1.0 * md[t])).epsilon(0.05));
        }
    }
}

TEST_CASE("sample_stcar covariance matches the dense Kronecker inverse") {
    const auto g = rook_grid(2, 2);
    const int T = 3;
    const StcarParams p{1.0, 0.9, 0.5};
    const Eigen::MatrixXd ps = oracle::dense_car_structure(g, p.rho_s);
    const Eigen::MatrixXd pt = oracle::dense_car_structure(temporal_path_graph(T), p.rho_t);
    const Eigen::MatrixXd exact = oracle::kron(pt, ps).inverse();

    const SpectralCar sp(g);
    const SpectralCar tp(temporal_path_graph(T));
    std::mt19937_64 rng(17);
    std::vector<Eigen::VectorXd> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
        draws.push_back(flatten(sample_stcar(sp, tp, p, rng)));
    }
    const Eigen::MatrixXd cov = empirical_cov(draws);
    const double scale = exact.diagonal().maxCoeff();
    CHECK((cov - exact).cwiseAbs().maxCoeff() < 0.05 * scale);
}

TEST_CASE("stcar_log_density equals the dense oracle on small problems") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> normal;
    struct Case {
        AdjacencyGraph g;
        int T;
        StcarParams p;
    };
    const Case cases[] = {
        {rook_grid(1, 2), 1, {1.0, 0.5, 0.0}},
        {rook_grid(2, 2), 3, {1.0, 0.9, 0.5}},
        {rook_grid(2, 2), 3, {0.7, 0.3, 0.9}},
        {rook_grid(3, 3), 5, {2.0, 0.99, 0.5}},
        {rook_grid(2, 3), 4, {1.0, 0.0, 0.0}},
        {rook_grid(4, 4), 4, {1.5, 0.6, 0.2}},
    };
    for (const auto& c : cases) {
        REQUIRE(c.g.n_nodes() * c.T <= 64);
        Eigen::MatrixXd theta(c.g.n_nodes(), c.T);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = normal(rng);
        const double fast = stcar_log_density(theta, c.g, c.T, c.p);
        const double slow = dense_stcar_log_density(theta, c.g, c.T, c.p);
        CHECK(std::abs(fast - slow) < 1e-8);
    }
}

TEST_CASE("stcar_log_density with a self-looped spatial node") {
    std::vector<std::pair<int, int>> edges{{0, 1}};
    const AdjacencyGraph g(3, edges, IsolatedPolicy::SelfLoop);
    std::mt19937_64 rng(29);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd theta(3, 2);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = normal(rng);
    const StcarParams p{1.1, 0.8, 0.4};
    CHECK(std::abs(stcar_log_density(theta, g, 2, p) - dense_stcar_log_density(theta, g, 2, p)) <
          1e-8);
}

TEST_CASE("stcar_log_density at zero is the normalizing constant") {
    const auto g = rook_grid(2, 2);
    const int T = 2;
    const StcarParams p{1.0, 0.6, 0.3};
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, T);
    const Eigen::MatrixXd prec =
        oracle::kron(oracle::dense_car_structure(temporal_path_graph(T), p.rho_t),
                     oracle::dense_car_structure(g, p.rho_s));
    const double log_det = std::log(prec.determinant());
    const double expected = -0.5 * 8.0 * std::log(2.0 * std::numbers::pi) + 0.5 * log_det;
    CHECK(stcar_log_density(zero, g, T, p) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("stcar_log_density with zero dependence is a sum of normal densities") {
    const auto g = rook_grid(1, 2);
    const int T = 2;
    const StcarParams p{1.4, 0.0, 0.0};
    Eigen::MatrixXd theta(2, T);
    theta << 0.3, -0.2, 1.1, 0.4;
    double expected = 0.0;
    const double md[2] = {1.0, 1.0};
    for (int j = 0; j < 2; ++j) {
        for (int t = 0; t < T; ++t) {
            const double var = p.sigma * p.sigma / (1.0 * md[t]);
            expected += -0.5 * std::log(2.0 * std::numbers::pi * var) -
                        0.5 * theta(j, t) * theta(j, t) / var;
        }
    }
    CHECK(stcar_log_density(theta, g, T, p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("car_log_density matches a dense bivariate oracle") {
    const auto g = rook_grid(1, 2);
    const CarParams p{1.0, 0.5};
    Eigen::VectorXd x(2);
    x << 0.7, -1.2;
    const Eigen::MatrixXd cov = oracle::dense_car_structure(g, p.rho).inverse();
    CHECK(std::abs(car_log_density(x, g, p) - oracle::mvn_log_density_cov(x, cov)) < 1e-8);
}

TEST_CASE("density is maximized at the zero field") {
    const auto g = rook_grid(2, 3);
    const int T = 3;
    const StcarParams p{1.0, 0.7, 0.4};
    const double at_zero = stcar_log_density(Eigen::MatrixXd::Zero(6, T), g, T, p);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd theta(6, T);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = normal(rng);
        CHECK(at_zero >= stcar_log_density(theta, g, T, p));
    }
}

TEST_CASE("samples are bitwise reproducible for a fixed seed") {
    const auto g = rook_grid(3, 3);
    const SpectralCar sp(g);
    const SpectralCar tp(temporal_path_graph(4));
    std::mt19937_64 a(1234), b(1234);
    const Eigen::MatrixXd x = sample_stcar(sp, tp, {1.0, 0.9, 0.5}, a);
    const Eigen::MatrixXd y = sample_stcar(sp, tp, {1.0, 0.9, 0.5}, b);
    CHECK(std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0);
}

TEST_CASE("parameter validation") {
    const auto g = rook_grid(1, 2);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(sample_car(g, {0.0, 0.5}, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_car(g, {1.0, 1.0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_stcar(g, 2, {1.0, -0.1, 0.5}, rng), std::invalid_argument);
    CHECK_THROWS_AS(stcar_log_density(Eigen::MatrixXd::Zero(3, 2), g, 2, {1.0, 0.5, 0.5}),
                    std::invalid_argument);
}

TEST_CASE("spectral log determinant matches dense determinant") {
    for (const auto& g : {rook_grid(3, 3), rook_grid(2, 5)}) {
        const SpectralCar sp(g);
        for (double rho : {0.0, 0.5, 0.9, 0.999}) {
            const Eigen::MatrixXd q = oracle::dense_car_structure(g, rho);
            CHECK(sp.log_det_structure(rho) ==
                  doctest::Approx(std::log(q.determinant())).epsilon(1e-8));
        }
    }
}

TEST_CASE("covariance factor reproduces the precision inverse") {
    const auto g = rook_grid(2, 3);
    const SpectralCar sp(g);
    const double rho = 0.85;
    const Eigen::MatrixXd a = sp.covariance_factor(rho);
    const Eigen::MatrixXd cov = oracle::dense_car_structure(g, rho).inverse();
    CHECK((a * a.transpose() - cov).cwiseAbs().maxCoeff() < 1e-10);
}

}  // TEST_SUITE
