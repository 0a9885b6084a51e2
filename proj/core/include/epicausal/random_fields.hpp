#pragma once

#include "epicausal/graph.hpp"

#include <Eigen/Dense>

#include <random>

namespace epicausal {

/// Conditional autoregressive field on a graph: precision
/// (1/sigma^2)(M - rho C) with M = diag(m_j) and C the 0/1 adjacency.
/// Self-looped nodes contribute m_j = 1 and an empty C row, so they are
/// independent N(0, sigma^2).
struct CarParams {
    double sigma = 1.0;
    double rho = 0.9;
};

/// Separable space-time field on (spatial graph) x (temporal path):
/// precision (1/sigma^2) (P_t kron P_s) for the time-major stacking
/// theta = (theta(1)^T, ..., theta(T)^T)^T, i.e. the column-major vec of the
/// J x T matrix whose column t is the spatial field at time t.
struct StcarParams {
    double sigma = 1.0;
    double rho_s = 0.9;
    double rho_t = 0.5;
};

/// Eigenstructure of the generalized problem C v = b M v, computed once per
/// graph and reused for every rho. Gives O(J) log-determinants and an exact
/// covariance factor for sampling:
///   log det(M - rho C) = sum_j log m_j + sum_i log(1 - rho b_i)
///   A(rho) A(rho)^T = (M - rho C)^{-1},  A(rho) = M^{-1/2} V diag(1-rho b)^{-1/2}
class SpectralCar {
public:
    explicit SpectralCar(const AdjacencyGraph& graph);

    int dim() const { return dim_; }
    const AdjacencyGraph& graph() const { return graph_; }
    const Eigen::VectorXd& degrees() const { return m_; }
    /// Generalized eigenvalues b_i, ascending; max is 1 on a connected graph.
    const Eigen::VectorXd& eigenvalues() const { return b_; }

    double log_det_structure(double rho) const;
    Eigen::MatrixXd covariance_factor(double rho) const;

    /// diag(m) x and C x; columns treated independently.
    Eigen::MatrixXd apply_m(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd apply_c(const Eigen::MatrixXd& x) const;

private:
    AdjacencyGraph graph_;
    int dim_ = 0;
    Eigen::VectorXd m_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd u_;  // M^{-1/2} V, V orthonormal eigenvectors of M^{-1/2} C M^{-1/2}
    double sum_log_m_ = 0.0;
};

/// One exact draw. Consumes dim() standard normals from rng in index order.
Eigen::VectorXd sample_car(const SpectralCar& spatial, const CarParams& params,
                           std::mt19937_64& rng);
Eigen::VectorXd sample_car(const AdjacencyGraph& graph, const CarParams& params,
                           std::mt19937_64& rng);

/// One exact J x T draw via Theta = sigma * A_s Z A_t^T with Z iid standard
/// normal, drawn column by column (time-major). Matches the Kronecker
/// precision above for any (rho_s, rho_t).
Eigen::MatrixXd sample_stcar(const SpectralCar& spatial, const SpectralCar& temporal,
                             const StcarParams& params, std::mt19937_64& rng);
Eigen::MatrixXd sample_stcar(const AdjacencyGraph& space, int T, const StcarParams& params,
                             std::mt19937_64& rng);

double car_log_density(const Eigen::VectorXd& theta, const SpectralCar& spatial,
                       const CarParams& params);
double car_log_density(const Eigen::VectorXd& theta, const AdjacencyGraph& graph,
                       const CarParams& params);

double stcar_log_density(const Eigen::MatrixXd& theta, const SpectralCar& spatial,
                         const SpectralCar& temporal, const StcarParams& params);
double stcar_log_density(const Eigen::MatrixXd& theta, const AdjacencyGraph& space, int T,
                         const StcarParams& params);

/// Pieces of the STCAR quadratic form, bilinear in (rho_s, rho_t):
/// theta^T (P_t kron P_s) theta = mm - rho_s*cm - rho_t*mc + rho_s*rho_t*cc.
/// Lets rho updates re-evaluate the form without touching theta.
struct StcarQuadParts {
    double mm = 0.0;
    double cm = 0.0;
    double mc = 0.0;
    double cc = 0.0;

    double value(double rho_s, double rho_t) const {
        return mm - rho_s * cm - rho_t * mc + rho_s * rho_t * cc;
    }
};

StcarQuadParts stcar_quad_parts(const Eigen::MatrixXd& theta, const SpectralCar& spatial,
                                const SpectralCar& temporal);

}  // namespace epicausal
