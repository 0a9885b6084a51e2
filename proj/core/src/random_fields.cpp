#include "epicausal/random_fields.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace epicausal {
namespace {

void check_car_params(double sigma, double rho, const char* what) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument(std::string(what) + ": sigma must be positive");
    }
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw std::invalid_argument(std::string(what) + ": rho must lie in [0, 1)");
    }
}

Eigen::MatrixXd standard_normal_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(rows, cols);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) z(r, c) = normal(rng);
    }
    return z;
}

}  // namespace

SpectralCar::SpectralCar(const AdjacencyGraph& graph) : graph_(graph), dim_(graph.n_nodes()) {
    m_.resize(dim_);
    for (int j = 0; j < dim_; ++j) m_(j) = static_cast<double>(graph_.degree(j));
    sum_log_m_ = m_.array().log().sum();

    const Eigen::VectorXd inv_sqrt_m = m_.array().rsqrt();
    Eigen::MatrixXd b_mat = Eigen::MatrixXd::Zero(dim_, dim_);
    for (int j = 0; j < dim_; ++j) {
        for (int k : graph_.neighbors(j)) {
            if (k == j) continue;  // self-loop nodes keep an empty C row
            b_mat(j, k) = inv_sqrt_m(j) * inv_sqrt_m(k);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b_mat);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("SpectralCar: eigendecomposition failed");
    }
    b_ = es.eigenvalues();
    u_ = inv_sqrt_m.asDiagonal() * es.eigenvectors();
}

double SpectralCar::log_det_structure(double rho) const {
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw std::invalid_argument("log_det_structure: rho must lie in [0, 1)");
    }
    return sum_log_m_ + (1.0 - rho * b_.array()).log().sum();
}

Eigen::MatrixXd SpectralCar::covariance_factor(double rho) const {
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw std::invalid_argument("covariance_factor: rho must lie in [0, 1)");
    }
    const Eigen::ArrayXd scale = (1.0 - rho * b_.array()).rsqrt();
    return u_ * scale.matrix().asDiagonal();
}

Eigen::MatrixXd SpectralCar::apply_m(const Eigen::MatrixXd& x) const {
    if (x.rows() != dim_) throw std::invalid_argument("apply_m: dimension mismatch");
    return m_.asDiagonal() * x;
}

Eigen::MatrixXd SpectralCar::apply_c(const Eigen::MatrixXd& x) const {
    if (x.rows() != dim_) throw std::invalid_argument("apply_c: dimension mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (int j = 0; j < dim_; ++j) {
        for (int k : graph_.neighbors(j)) {
            if (k == j) continue;
            out.row(j) += x.row(k);
        }
    }
    return out;
}

Eigen::VectorXd sample_car(const SpectralCar& spatial, const CarParams& params,
                           std::mt19937_64& rng) {
    check_car_params(params.sigma, params.rho, "sample_car");
    const Eigen::MatrixXd z = standard_normal_matrix(spatial.dim(), 1, rng);
    return params.sigma * (spatial.covariance_factor(params.rho) * z.col(0));
}

Eigen::VectorXd sample_car(const AdjacencyGraph& graph, const CarParams& params,
                           std::mt19937_64& rng) {
    return sample_car(SpectralCar(graph), params, rng);
}

Eigen::MatrixXd sample_stcar(const SpectralCar& spatial, const SpectralCar& temporal,
                             const StcarParams& params, std::mt19937_64& rng) {
    check_car_params(params.sigma, params.rho_s, "sample_stcar(spatial)");
    check_car_params(params.sigma, params.rho_t, "sample_stcar(temporal)");
    const Eigen::MatrixXd z = standard_normal_matrix(spatial.dim(), temporal.dim(), rng);
    return params.sigma * spatial.covariance_factor(params.rho_s) * z *
           temporal.covariance_factor(params.rho_t).transpose();
}

Eigen::MatrixXd sample_stcar(const AdjacencyGraph& space, int T, const StcarParams& params,
                             std::mt19937_64& rng) {
    return sample_stcar(SpectralCar(space), SpectralCar(temporal_path_graph(T)), params, rng);
}

double car_log_density(const Eigen::VectorXd& theta, const SpectralCar& spatial,
                       const CarParams& params) {
    check_car_params(params.sigma, params.rho, "car_log_density");
    if (theta.size() != spatial.dim()) {
        throw std::invalid_argument("car_log_density: dimension mismatch");
    }
    const double sigma2 = params.sigma * params.sigma;
    const Eigen::MatrixXd theta_m(theta);
    const double qf = theta.dot(spatial.apply_m(theta_m).col(0)) -
                      params.rho * theta.dot(spatial.apply_c(theta_m).col(0));
    const double n = static_cast<double>(spatial.dim());
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(sigma2) +
           0.5 * spatial.log_det_structure(params.rho) - 0.5 * qf / sigma2;
}

double car_log_density(const Eigen::VectorXd& theta, const AdjacencyGraph& graph,
                       const CarParams& params) {
    return car_log_density(theta, SpectralCar(graph), params);
}

double stcar_log_density(const Eigen::MatrixXd& theta, const SpectralCar& spatial,
                         const SpectralCar& temporal, const StcarParams& params) {
    check_car_params(params.sigma, params.rho_s, "stcar_log_density(spatial)");
    check_car_params(params.sigma, params.rho_t, "stcar_log_density(temporal)");
    if (theta.rows() != spatial.dim() || theta.cols() != temporal.dim()) {
        throw std::invalid_argument("stcar_log_density: theta must be J x T");
    }
    const double sigma2 = params.sigma * params.sigma;
    const StcarQuadParts parts = stcar_quad_parts(theta, spatial, temporal);
    const double qf = parts.value(params.rho_s, params.rho_t);
    const double jt = static_cast<double>(spatial.dim()) * static_cast<double>(temporal.dim());
    const double log_det = static_cast<double>(temporal.dim()) *
                               spatial.log_det_structure(params.rho_s) +
                           static_cast<double>(spatial.dim()) *
                               temporal.log_det_structure(params.rho_t);
    return -0.5 * jt * std::log(2.0 * std::numbers::pi) - 0.5 * jt * std::log(sigma2) +
           0.5 * log_det - 0.5 * qf / sigma2;
}

double stcar_log_density(const Eigen::MatrixXd& theta, const AdjacencyGraph& space, int T,
                         const StcarParams& params) {
    return stcar_log_density(theta, SpectralCar(space), SpectralCar(temporal_path_graph(T)),
                             params);
}

StcarQuadParts stcar_quad_parts(const Eigen::MatrixXd& theta, const SpectralCar& spatial,
                                const SpectralCar& temporal) {
    if (theta.rows() != spatial.dim() || theta.cols() != temporal.dim()) {
        throw std::invalid_argument("stcar_quad_parts: theta must be J x T");
    }
    // tr(Theta^T A_s Theta A_t) for the four (M, C) combinations, via
    // tr(X^T Y) = sum(X .* Y) with X = A_s Theta and Y = Theta A_t.
    const Eigen::MatrixXd ms = spatial.apply_m(theta);
    const Eigen::MatrixXd cs = spatial.apply_c(theta);
    const Eigen::MatrixXd mt = temporal.apply_m(theta.transpose()).transpose();
    const Eigen::MatrixXd ct = temporal.apply_c(theta.transpose()).transpose();
    StcarQuadParts parts;
    parts.mm = ms.cwiseProduct(mt).sum();
    parts.cm = cs.cwiseProduct(mt).sum();
    parts.mc = ms.cwiseProduct(ct).sum();
    parts.cc = cs.cwiseProduct(ct).sum();
    return parts;
}

}  // namespace epicausal
