#pragma once

#include "epicausal/sir.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace epicausal {

/// One regressor in a propensity regression. Lagged kinds read column t-lag;
/// polynomial kinds use the 1-based week index. Week-since-first-case for
/// county j counts weeks after the first t with Y_j(t) > 0 (0 before it and
/// for counties that never report a case).
struct PropensityTerm {
    enum class Kind {
        Intercept,
        ALag,                  // A_j(t-lag)
        AtildeLag,             // neighbor-averaged A at lag
        XLag,                  // every covariate at lag (one column each)
        YLag,                  // raw count Y_j(t-lag)
        YLagLogRate,           // log(max(Y_j(t-lag), 0.5)) - log(N_j)
        TimePoly,              // (week index)^degree
        WeeksSinceFirstCasePoly,
        TimeInteractionALag1,  // week index * A_j(t-1)
        ABaseline,             // A_j(1)
    };
    Kind kind = Kind::Intercept;
    int lag = 0;
    int degree = 1;
};

struct PropensityDesign {
    std::vector<PropensityTerm> terms;

    int max_lag() const;
    void validate(int T) const;

    /// A(t-1), A(t-2), X(t), X(t-1), Y(t-1) plus intercept.
    static PropensityDesign simulation();
    /// A(t-1), X(t), X(t-1), weeks-since-first-case (linear, quadratic),
    /// week index (linear, quadratic), t*A(t-1), A(1), log Y(t-1) - log N,
    /// plus intercept.
    static PropensityDesign application();
};

/// Stacked (j,t) regression problem: row (t - valid_from)*J + j holds the
/// regressors for county j at week index t.
struct DesignMatrix {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::string> column_names;
    int valid_from = 0;  // first usable 0-based column of the panel
};

DesignMatrix build_design_matrix(const PanelDataset& dataset, const PropensityDesign& design);

struct LeastSquaresFit {
    Eigen::VectorXd coefficients;  // original (unstandardized) scale
    Eigen::VectorXd fitted;
    bool used_pseudoinverse = false;
};

/// Minimizes ||y - X b||. Columns are standardized internally for
/// conditioning (centering only when a constant column is present, so the
/// span is unchanged); coefficients are mapped back to the original scale.
/// Rank deficiency at relative singular-value threshold 1e-10 falls back to
/// the minimal-norm pseudoinverse solution and sets used_pseudoinverse.
LeastSquaresFit fit_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Indirect score: neighbor average of the direct score panel.
Eigen::MatrixXd indirect_scores(const AdjacencyGraph& graph, const Eigen::MatrixXd& e);

/// Direct fitted means e_j(t) and indirect scores; columns before valid_from
/// are NaN and must stay outside any fit window.
struct PropensityScores {
    Eigen::MatrixXd e;
    Eigen::MatrixXd e_tilde;
    int valid_from = 0;
};

/// How e_tilde is produced: neighbor-averaging e (default), or a separate
/// regression of the neighbor-averaged intervention on neighbor-averaged
/// regressors (time and week-since-first-case terms stay county-local).
enum class TildeMode { NeighborAverage, SeparateRegression };

PropensityScores estimate_scores(const PanelDataset& dataset, const PropensityDesign& design,
                                 TildeMode mode = TildeMode::NeighborAverage);

/// Writes e.csv / e_tilde.csv next to the panel files.
void write_scores(const PropensityScores& scores, const std::filesystem::path& dir);

/// Correlation of A and a covariate before and after conditioning on e,
/// over the valid cells. Conditioning shrinks |corr| when e balances.
struct BalanceDiagnostic {
    double marginal = 0.0;
    double partial = 0.0;
};

BalanceDiagnostic balancing_diagnostic(const PanelDataset& dataset,
                                       const PropensityScores& scores,
                                       const std::string& covariate);

}  // namespace epicausal
