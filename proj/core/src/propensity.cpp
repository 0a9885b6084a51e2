#include "epicausal/propensity.hpp"

#include "epicausal/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace epicausal {
namespace {

int term_lag(const PropensityTerm& term) {
    using Kind = PropensityTerm::Kind;
    switch (term.kind) {
        case Kind::ALag:
        case Kind::AtildeLag:
        case Kind::XLag:
        case Kind::YLag:
        case Kind::YLagLogRate:
            return term.lag;
        case Kind::TimeInteractionALag1:
            return 1;
        default:
            return 0;
    }
}

// Arrays the term evaluation reads; the tilde regression swaps in
// neighbor-averaged versions of A, X and Y while keeping the county-local
// time terms.
struct TermInputs {
    const PanelDataset* dataset = nullptr;
    Eigen::MatrixXd a;
    Eigen::MatrixXd a_tilde;
    Eigen::MatrixXd y;                      // counts as reals
    std::vector<Eigen::MatrixXd> x_fields;  // in map (sorted-name) order
    Eigen::VectorXi first_case_week;        // 1-based; 0 if never
};

TermInputs make_inputs(const PanelDataset& dataset, bool tilded) {
    TermInputs in;
    in.dataset = &dataset;
    in.a = tilded ? neighbor_average(dataset.graph, dataset.A) : dataset.A;
    in.a_tilde = neighbor_average(dataset.graph, in.a);
    Eigen::MatrixXd y = dataset.Y.cast<double>();
    in.y = tilded ? neighbor_average(dataset.graph, y) : y;
    for (const auto& [name, field] : dataset.X) {
        in.x_fields.push_back(tilded ? neighbor_average(dataset.graph, field) : field);
    }
    const int J = dataset.n_nodes();
    const int T = dataset.n_weeks();
    in.first_case_week = Eigen::VectorXi::Zero(J);
    for (int j = 0; j < J; ++j) {
        for (int t = 0; t < T; ++t) {
            if (dataset.Y(j, t) > 0) {
                in.first_case_week(j) = t + 1;
                break;
            }
        }
    }
    return in;
}

int term_width(const PropensityTerm& term, const TermInputs& in) {
    return term.kind == PropensityTerm::Kind::XLag ? static_cast<int>(in.x_fields.size()) : 1;
}

void eval_term(const PropensityTerm& term, const TermInputs& in, int j, int t, double* out) {
    using Kind = PropensityTerm::Kind;
    const double week = static_cast<double>(t + 1);
    switch (term.kind) {
        case Kind::Intercept:
            out[0] = 1.0;
            return;
        case Kind::ALag:
            out[0] = in.a(j, t - term.lag);
            return;
        case Kind::AtildeLag:
            out[0] = in.a_tilde(j, t - term.lag);
            return;
        case Kind::XLag:
            for (std::size_t k = 0; k < in.x_fields.size(); ++k) {
                out[k] = in.x_fields[k](j, t - term.lag);
            }
            return;
        case Kind::YLag:
            out[0] = in.y(j, t - term.lag);
            return;
        case Kind::YLagLogRate:
            out[0] = std::log(std::max(in.y(j, t - term.lag), 0.5)) -
                     std::log(in.dataset->N(j));
            return;
        case Kind::TimePoly:
            out[0] = std::pow(week, term.degree);
            return;
        case Kind::WeeksSinceFirstCasePoly: {
            const int f = in.first_case_week(j);
            const double w = (f > 0 && t + 1 > f) ? static_cast<double>(t + 1 - f) : 0.0;
            out[0] = std::pow(w, term.degree);
            return;
        }
        case Kind::TimeInteractionALag1:
            out[0] = week * in.a(j, t - 1);
            return;
        case Kind::ABaseline:
            out[0] = in.a(j, 0);
            return;
    }
    throw std::logic_error("eval_term: unhandled kind");
}

std::string term_name(const PropensityTerm& term, const TermInputs& in, int sub) {
    using Kind = PropensityTerm::Kind;
    switch (term.kind) {
        case Kind::Intercept:
            return "intercept";
        case Kind::ALag:
            return "A_lag" + std::to_string(term.lag);
        case Kind::AtildeLag:
            return "Atilde_lag" + std::to_string(term.lag);
        case Kind::XLag: {
            auto it = in.dataset->X.begin();
            std::advance(it, sub);
            return "X_" + it->first + "_lag" + std::to_string(term.lag);
        }
        case Kind::YLag:
            return "Y_lag" + std::to_string(term.lag);
        case Kind::YLagLogRate:
            return "logYrate_lag" + std::to_string(term.lag);
        case Kind::TimePoly:
            return term.degree == 1 ? "t" : "t^" + std::to_string(term.degree);
        case Kind::WeeksSinceFirstCasePoly:
            return term.degree == 1 ? "weeks_since_first_case"
                                    : "weeks_since_first_case^" + std::to_string(term.degree);
        case Kind::TimeInteractionALag1:
            return "t*A_lag1";
        case Kind::ABaseline:
            return "A_baseline";
    }
    throw std::logic_error("term_name: unhandled kind");
}

DesignMatrix build_design(const PanelDataset& dataset, const PropensityDesign& design,
                          bool tilded) {
    design.validate(dataset.n_weeks());
    const TermInputs in = make_inputs(dataset, tilded);
    const int J = dataset.n_nodes();
    const int T = dataset.n_weeks();
    const int valid_from = design.max_lag();

    int n_cols = 0;
    for (const auto& term : design.terms) n_cols += term_width(term, in);

    DesignMatrix out;
    out.valid_from = valid_from;
    out.x.resize(static_cast<Eigen::Index>(J) * (T - valid_from), n_cols);
    out.y.resize(out.x.rows());
    for (const auto& term : design.terms) {
        for (int sub = 0; sub < term_width(term, in); ++sub) {
            out.column_names.push_back(term_name(term, in, sub));
        }
    }

    std::vector<double> row(static_cast<std::size_t>(n_cols));
    for (int t = valid_from; t < T; ++t) {
        for (int j = 0; j < J; ++j) {
            double* cursor = row.data();
            for (const auto& term : design.terms) {
                eval_term(term, in, j, t, cursor);
                cursor += term_width(term, in);
            }
            const Eigen::Index r = static_cast<Eigen::Index>(t - valid_from) * J + j;
            for (int c = 0; c < n_cols; ++c) out.x(r, c) = row[static_cast<std::size_t>(c)];
            out.y(r) = in.a(j, t);
        }
    }
    return out;
}

}  // namespace

int PropensityDesign::max_lag() const {
    int lag = 0;
    for (const auto& term : terms) lag = std::max(lag, term_lag(term));
    return lag;
}

void PropensityDesign::validate(int T) const {
    if (terms.empty()) {
        throw std::invalid_argument("PropensityDesign: empty term list");
    }
    const bool has_intercept =
        std::any_of(terms.begin(), terms.end(), [](const PropensityTerm& t) {
            return t.kind == PropensityTerm::Kind::Intercept;
        });
    if (!has_intercept) {
        throw std::invalid_argument("PropensityDesign: intercept term required");
    }
    for (const auto& term : terms) {
        if (term.lag < 0) throw std::invalid_argument("PropensityDesign: negative lag");
        if (term.degree < 1) throw std::invalid_argument("PropensityDesign: degree must be >= 1");
    }
    if (max_lag() >= T) {
        throw std::invalid_argument("PropensityDesign: max lag " + std::to_string(max_lag()) +
                                    " leaves no usable weeks for T = " + std::to_string(T));
    }
}

PropensityDesign PropensityDesign::simulation() {
    using Kind = PropensityTerm::Kind;
    return {{
        {Kind::Intercept, 0, 1},
        {Kind::ALag, 1, 1},
        {Kind::ALag, 2, 1},
        {Kind::XLag, 0, 1},
        {Kind::XLag, 1, 1},
        {Kind::YLag, 1, 1},
    }};
}

PropensityDesign PropensityDesign::application() {
    using Kind = PropensityTerm::Kind;
    return {{
        {Kind::Intercept, 0, 1},
        {Kind::ALag, 1, 1},
        {Kind::XLag, 0, 1},
        {Kind::XLag, 1, 1},
        {Kind::WeeksSinceFirstCasePoly, 0, 1},
        {Kind::WeeksSinceFirstCasePoly, 0, 2},
        {Kind::TimePoly, 0, 1},
        {Kind::TimePoly, 0, 2},
        {Kind::TimeInteractionALag1, 0, 1},
        {Kind::ABaseline, 0, 1},
        {Kind::YLagLogRate, 1, 1},
    }};
}

DesignMatrix build_design_matrix(const PanelDataset& dataset, const PropensityDesign& design) {
    return build_design(dataset, design, false);
}

LeastSquaresFit fit_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw std::invalid_argument("fit_least_squares: row mismatch");
    if (x.rows() < x.cols()) {
        throw std::invalid_argument("fit_least_squares: more columns than rows");
    }
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();

    // Standardize for conditioning. Centering changes the span unless a
    // constant column is present, so it is applied only then.
    Eigen::VectorXd mean = x.colwise().mean();
    Eigen::VectorXd scale(p);
    std::vector<bool> constant(static_cast<std::size_t>(p), false);
    Eigen::Index const_col = -1;
    for (Eigen::Index c = 0; c < p; ++c) {
        const double mx = x.col(c).maxCoeff();
        const double mn = x.col(c).minCoeff();
        if (mx == mn) {
            constant[static_cast<std::size_t>(c)] = true;
            if (const_col < 0 && mx != 0.0) const_col = c;
        }
        const double sd = std::sqrt((x.col(c).array() - mean(c)).square().sum() /
                                    std::max<double>(1.0, static_cast<double>(n - 1)));
        scale(c) = sd > 0.0 ? sd : 1.0;
    }
    const bool center = const_col >= 0;

    Eigen::MatrixXd xs(n, p);
    for (Eigen::Index c = 0; c < p; ++c) {
        if (constant[static_cast<std::size_t>(c)]) {
            xs.col(c) = x.col(c);
        } else if (center) {
            xs.col(c) = (x.col(c).array() - mean(c)) / scale(c);
        } else {
            xs.col(c) = x.col(c) / scale(c);
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-10);
    LeastSquaresFit fit;
    Eigen::VectorXd bs;
    if (qr.rank() == p) {
        bs = qr.solve(y);
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);
        bs = svd.solve(y);
        fit.used_pseudoinverse = true;
    }
    fit.fitted = xs * bs;

    fit.coefficients.resize(p);
    double intercept_shift = 0.0;
    for (Eigen::Index c = 0; c < p; ++c) {
        if (constant[static_cast<std::size_t>(c)]) {
            fit.coefficients(c) = bs(c);
        } else if (center) {
            fit.coefficients(c) = bs(c) / scale(c);
            intercept_shift += bs(c) * mean(c) / scale(c);
        } else {
            fit.coefficients(c) = bs(c) / scale(c);
        }
    }
    if (center) {
        fit.coefficients(const_col) -= intercept_shift / x(0, const_col);
    }
    return fit;
}

Eigen::MatrixXd indirect_scores(const AdjacencyGraph& graph, const Eigen::MatrixXd& e) {
    return neighbor_average(graph, e);
}

PropensityScores estimate_scores(const PanelDataset& dataset, const PropensityDesign& design,
                                 TildeMode mode) {
    const int J = dataset.n_nodes();
    const int T = dataset.n_weeks();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    const DesignMatrix dm = build_design(dataset, design, false);
    const LeastSquaresFit fit = fit_least_squares(dm.x, dm.y);

    PropensityScores scores;
    scores.valid_from = dm.valid_from;
    scores.e = Eigen::MatrixXd::Constant(J, T, nan);
    for (int t = dm.valid_from; t < T; ++t) {
        for (int j = 0; j < J; ++j) {
            scores.e(j, t) = fit.fitted(static_cast<Eigen::Index>(t - dm.valid_from) * J + j);
        }
    }

    if (mode == TildeMode::NeighborAverage) {
        scores.e_tilde = indirect_scores(dataset.graph, scores.e);
    } else {
        const DesignMatrix dmt = build_design(dataset, design, true);
        const LeastSquaresFit fit_t = fit_least_squares(dmt.x, dmt.y);
        scores.e_tilde = Eigen::MatrixXd::Constant(J, T, nan);
        for (int t = dmt.valid_from; t < T; ++t) {
            for (int j = 0; j < J; ++j) {
                scores.e_tilde(j, t) =
                    fit_t.fitted(static_cast<Eigen::Index>(t - dmt.valid_from) * J + j);
            }
        }
    }
    return scores;
}

void write_scores(const PropensityScores& scores, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_csv(scores.e, dir / "e.csv");
    write_matrix_csv(scores.e_tilde, dir / "e_tilde.csv");
}

BalanceDiagnostic balancing_diagnostic(const PanelDataset& dataset,
                                       const PropensityScores& scores,
                                       const std::string& covariate) {
    const auto it = dataset.X.find(covariate);
    if (it == dataset.X.end()) {
        throw std::invalid_argument("balancing_diagnostic: unknown covariate " + covariate);
    }
    const int J = dataset.n_nodes();
    const int T = dataset.n_weeks();
    const Eigen::Index n = static_cast<Eigen::Index>(J) * (T - scores.valid_from);
    if (n < 3) throw std::invalid_argument("balancing_diagnostic: too few valid cells");

    Eigen::VectorXd a(n), x(n), e(n);
    Eigen::Index r = 0;
    for (int t = scores.valid_from; t < T; ++t) {
        for (int j = 0; j < J; ++j, ++r) {
            a(r) = dataset.A(j, t);
            x(r) = it->second(j, t);
            e(r) = scores.e(j, t);
        }
    }

    const auto corr = [](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
        const Eigen::ArrayXd cu = u.array() - u.mean();
        const Eigen::ArrayXd cv = v.array() - v.mean();
        const double denom = std::sqrt(cu.square().sum() * cv.square().sum());
        return denom > 0.0 ? (cu * cv).sum() / denom : 0.0;
    };
    const auto residualize = [&](const Eigen::VectorXd& target) {
        Eigen::MatrixXd z(n, 2);
        z.col(0).setOnes();
        z.col(1) = e;
        const LeastSquaresFit f = fit_least_squares(z, target);
        return Eigen::VectorXd(target - f.fitted);
    };

    BalanceDiagnostic diag;
    diag.marginal = corr(a, x);
    diag.partial = corr(residualize(a), residualize(x));
    return diag;
}

}  // namespace epicausal
