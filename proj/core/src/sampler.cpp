#include "epicausal/inference.hpp"

#include "epicausal/random_fields.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

namespace epicausal {

namespace {

constexpr double kDiagStepSd = 0.05;  // per-coefficient sd before adaptation kicks in
constexpr double kCovRidge = 1e-9;

double log_inv_gamma_core(double x) {
    // Shape/rate constants cancel in MH ratios except through these terms.
    return -(kVariancePriorShape + 1.0) * std::log(x) - kVariancePriorRate / x;
}

/// Robbins-Monro tuning of a log proposal scale toward a target rate.
struct AdaptiveScale {
    double log_scale;
    double target;
    long n = 0;

    double scale() const { return std::exp(log_scale); }
    void adapt(double rate) {
        ++n;
        const double gamma = std::min(0.25, 1.0 / std::sqrt(static_cast<double>(n)));
        log_scale = std::clamp(log_scale + gamma * (rate - target), -10.0, 5.0);
    }
};

struct BlockCounter {
    long accepted = 0;
    long proposed = 0;
};

/// Welford running mean/scatter of the regression chain, for the
/// empirical-covariance proposal.
struct RunningCov {
    Eigen::VectorXd mean;
    Eigen::MatrixXd m2;
    long n = 0;

    void init(Eigen::Index p) {
        mean = Eigen::VectorXd::Zero(p);
        m2 = Eigen::MatrixXd::Zero(p, p);
        n = 0;
    }
    void add(const Eigen::VectorXd& x) {
        ++n;
        Eigen::VectorXd d = x - mean;
        mean += d / static_cast<double>(n);
        m2.noalias() += d * (x - mean).transpose();
    }
    Eigen::MatrixXd cov() const { return m2 / static_cast<double>(n - 1); }
};

class Sampler {
public:
    Sampler(const PanelDataset& data, RateDesign design, ModelVariant variant,
            const FitConfig& config)
        : data_(data),
          design_(std::move(design)),
          variant_(variant),
          config_(config),
          spatial_(data.graph),
          temporal_(temporal_path_graph(data.n_weeks())),
          nugget_(variant_has_nugget(variant)),
          J_(data.n_nodes()),
          T_(data.n_weeks()),
          t0_(config.window_start_index()),
          l_(config.lag),
          Yd_(data.Y.cast<double>()),
          rng_(config.seed) {
        reg_scale_ = {std::log(1.0), config_.regression_target_rate};
        g_scale_ = {std::log(0.1), config_.single_site_target_rate};
        v_scale_ = {std::log(0.1), config_.single_site_target_rate};
        s2_scale_ = {std::log(0.5), config_.single_site_target_rate};
        t2_scale_ = {std::log(0.5), config_.single_site_target_rate};
        sv2_scale_ = {std::log(0.5), config_.single_site_target_rate};
        rs_scale_ = {std::log(0.5), config_.single_site_target_rate};
        rt_scale_ = {std::log(0.5), config_.single_site_target_rate};
        cov_.init(design_.n_columns());
    }

    PosteriorSamples run(const ModelParams* initial) {
        initialize(initial);
        const int n_draws = (config_.iterations - config_.burn_in) / config_.thin;

        PosteriorSamples out;
        out.variant = variant_;
        out.seed = config_.seed;
        out.scalar_names = design_.names;
        out.scalar_names.emplace_back("sigma2");
        out.scalar_names.emplace_back("tau2");
        if (nugget_) {
            out.scalar_names.emplace_back("sigma_v2");
            out.scalar_names.emplace_back("mu_v");
        }
        out.scalar_names.emplace_back("rho_s");
        out.scalar_names.emplace_back("rho_t");
        out.scalars.resize(n_draws, static_cast<Eigen::Index>(out.scalar_names.size()));

        int d = 0;
        for (int iter = 0; iter < config_.iterations; ++iter) {
            if (iter == config_.burn_in) counters_.clear();
            const bool frozen = iter >= config_.burn_in;
            update_regression(frozen);
            update_theta();
            update_g(frozen);
            if (nugget_) update_v(frozen);
            quad_ = stcar_quad_parts(par_.theta, spatial_, temporal_);
            update_sigma2(frozen);
            update_tau2(frozen);
            if (nugget_) {
                update_sigma_v2(frozen);
                update_mu_v();
            }
            if (variant_ != ModelVariant::NonSpatial) update_rho_s(frozen);
            update_rho_t(frozen);
            if (iter >= config_.burn_in && (iter - config_.burn_in + 1) % config_.thin == 0 &&
                d < n_draws) {
                record(out, d, iter);
                ++d;
            }
        }
        for (const auto& [name, c] : counters_) {
            out.acceptance_rates[name] =
                c.proposed ? static_cast<double>(c.accepted) / static_cast<double>(c.proposed)
                           : 0.0;
        }
        out.exp_clamp_count = clamps_;
        out.final_state = par_;
        return out;
    }

private:
    void refresh_caches() {
        eta_ = design_.eta(par_.coefficients);
        F_ = Eigen::MatrixXd::Zero(J_, T_);
        if (nugget_) {
            for (int t = t0_; t < T_; ++t) {
                for (int j = 0; j < J_; ++j) F_(j, t) = clamped_exp(par_.v_tilde(j, t), &clamps_);
            }
        }
        U_.resize(J_, T_);
        rebuild_u(eta_, U_);
    }

    void rebuild_u(const Eigen::MatrixXd& eta, Eigen::MatrixXd& u) const {
        u.setZero(J_, T_);
        for (int t = t0_; t < T_; ++t) {
            for (int j = 0; j < J_; ++j) {
                u(j, t) =
                    clamped_exp(par_.g(j, t) + eta(j, t - l_) + par_.theta(j, t - l_), &clamps_);
            }
        }
    }

    /// Window Poisson log likelihood without the lgamma constant.
    double window_loglike(const Eigen::MatrixXd& u, const Eigen::MatrixXd& f) const {
        double out = 0.0;
        for (int t = t0_; t < T_; ++t) {
            for (int j = 0; j < J_; ++j) {
                const double mu = u(j, t) + f(j, t);
                out += Yd_(j, t) * std::log(mu) - mu;
            }
        }
        return out;
    }

    Eigen::VectorXd irls_init() const {
        const Eigen::Index n = static_cast<Eigen::Index>(J_) * (T_ - t0_);
        const Eigen::Index p = design_.n_columns();
        Eigen::MatrixXd x(n, p);
        Eigen::VectorXd y(n);
        Eigen::Index r = 0;
        for (int t = t0_; t < T_; ++t) {
            for (int j = 0; j < J_; ++j, ++r) {
                for (Eigen::Index c = 0; c < p; ++c) {
                    x(r, c) = design_.columns[static_cast<std::size_t>(c)](j, t - l_);
                }
                y(r) = Yd_(j, t);
            }
        }
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        beta(0) = std::log(std::max(y.mean(), 1e-3));
        for (int it = 0; it < 50; ++it) {
            Eigen::VectorXd lin = (x * beta).cwiseMin(30.0).cwiseMax(-30.0);
            Eigen::VectorXd mu = lin.array().exp();
            Eigen::VectorXd z = lin + (y - mu).cwiseQuotient(mu);
            Eigen::MatrixXd xtw = x.transpose() * mu.asDiagonal();
            Eigen::MatrixXd a = xtw * x;
            a.diagonal().array() += 1e-8;
            Eigen::VectorXd next = a.ldlt().solve(xtw * z);
            if (!next.allFinite()) break;
            const double step = (next - beta).norm();
            beta = next;
            if (step < 1e-10) break;
        }
        if (!beta.allFinite()) {
            beta.setZero();
            beta(0) = std::log(std::max(y.mean(), 1e-3));
        }
        return beta;
    }

    void initialize(const ModelParams* initial) {
        if (initial) {
            par_ = *initial;
            if (par_.coefficients.size() != design_.n_columns()) {
                throw std::invalid_argument("fit: initial coefficient length mismatch");
            }
            if (par_.theta.rows() != J_ || par_.theta.cols() != T_ || par_.g.rows() != J_ ||
                par_.g.cols() != T_) {
                throw std::invalid_argument("fit: initial latent panel shape mismatch");
            }
            if (nugget_ && (par_.v_tilde.rows() != J_ || par_.v_tilde.cols() != T_)) {
                throw std::invalid_argument("fit: initial v_tilde shape mismatch");
            }
            if (variant_ == ModelVariant::NonSpatial && par_.rho_s != 0.0) {
                throw std::invalid_argument("fit: NonSpatial requires rho_s = 0");
            }
            if (!nugget_ && par_.v_tilde.size() == 0) par_.v_tilde.setZero(J_, T_);
            refresh_caches();
            if (!std::isfinite(current_log_posterior())) {
                throw std::invalid_argument("fit: initial state has non-finite posterior");
            }
            return;
        }
        const Eigen::VectorXd beta0 = irls_init();
        // The nugget starts dormant: an exp() term can only add to the mean,
        // so a chain started with a sizable floor settles into inflating every
        // regression slope to pay for it and the single-site walk never backs
        // out of that regime. Started near zero it grows only where the
        // likelihood demands.
        const double v0 = std::log(std::max(Yd_.mean(), 1e-3)) - 7.0;
        for (int attempt = 0; attempt < 10; ++attempt) {
            par_.coefficients = beta0 * std::pow(0.5, attempt);
            par_.sigma2 = 0.1;
            par_.tau2 = 0.1;
            par_.sigma_v2 = 1.0;
            par_.mu_v = v0;
            par_.rho_s = variant_ == ModelVariant::NonSpatial ? 0.0 : 0.5;
            par_.rho_t = 0.5;
            par_.theta = Eigen::MatrixXd::Zero(J_, T_);
            par_.g = Eigen::MatrixXd::Zero(J_, T_);
            par_.v_tilde = Eigen::MatrixXd::Constant(J_, T_, v0);
            refresh_caches();
            if (std::isfinite(current_log_posterior())) return;
        }
        throw std::runtime_error("fit: no finite starting point after 10 attempts");
    }

    double current_log_posterior() const {
        return window_loglike(U_, F_) + log_prior(par_, design_, variant_, data_.graph, T_);
    }

    void update_regression(bool frozen) {
        auto& c = counters_["regression"];
        const Eigen::Index p = design_.n_columns();
        Eigen::VectorXd z(p);
        for (Eigen::Index i = 0; i < p; ++i) z(i) = norm_(rng_);
        Eigen::VectorXd bp;
        if (use_cov_) {
            bp = par_.coefficients + reg_scale_.scale() * (prop_chol_ * z);
        } else {
            bp = par_.coefficients + (reg_scale_.scale() * kDiagStepSd) * z;
        }
        const double prior_delta = -(bp.squaredNorm() - par_.coefficients.squaredNorm()) /
                                   (2.0 * kCoefficientPriorVariance);
        Eigen::MatrixXd etap = design_.eta(bp);
        Eigen::MatrixXd up;
        rebuild_u(etap, up);
        const double la = window_loglike(up, F_) - window_loglike(U_, F_) + prior_delta;
        ++c.proposed;
        const bool acc = std::log(unif_(rng_)) < la;
        if (acc) {
            par_.coefficients = std::move(bp);
            eta_ = std::move(etap);
            U_ = std::move(up);
            ++c.accepted;
        }
        if (!frozen) {
            reg_scale_.adapt(acc ? 1.0 : 0.0);
            cov_.add(par_.coefficients);
            maybe_refresh_proposal_chol();
        }
    }

    void maybe_refresh_proposal_chol() {
        const Eigen::Index p = design_.n_columns();
        if (cov_.n <= std::max<long>(config_.adapt_initial, p + 4) || cov_.n % 25 != 0) return;
        Eigen::MatrixXd s = (2.38 * 2.38 / static_cast<double>(p)) *
                            (cov_.cov() + kCovRidge * Eigen::MatrixXd::Identity(p, p));
        Eigen::LLT<Eigen::MatrixXd> llt(s);
        if (llt.info() == Eigen::Success) {
            prop_chol_ = llt.matrixL();
            use_cov_ = true;
        }
    }

    /// Single-site update of the STCAR field. Every cell has a Gaussian prior
    /// full conditional N(cm, sigma2/(m_t m_s)) from the Kronecker precision;
    /// cells inside the fit window add the Poisson term, handled with a
    /// one-step Taylor (Gamerman-style) proposal rebuilt at the proposed
    /// point for the reverse density. Prior-only cells are exact Gibbs draws.
    void update_theta() {
        auto& c = counters_["theta"];
        const auto& sg = spatial_.graph();
        const auto& tg = temporal_.graph();
        const auto& ms = spatial_.degrees();
        const auto& mt = temporal_.degrees();
        const double inv_s2 = 1.0 / par_.sigma2;
        for (int s = 0; s < T_; ++s) {
            const int t = s + l_;
            const bool in_window = t >= t0_ && t < T_;
            for (int j = 0; j < J_; ++j) {
                double ssp = 0.0;
                double stm = 0.0;
                double sst = 0.0;
                const bool sloop = sg.is_self_looped(j);
                if (!sloop) {
                    for (int k : sg.neighbors(j)) ssp += par_.theta(k, s);
                }
                if (!tg.is_self_looped(s)) {
                    for (int sp : tg.neighbors(s)) {
                        stm += par_.theta(j, sp);
                        if (!sloop) {
                            for (int k : sg.neighbors(j)) sst += par_.theta(k, sp);
                        }
                    }
                }
                const double mm = mt(s) * ms(j);
                const double qdd = mm * inv_s2;
                const double cm = (par_.rho_s * mt(s) * ssp + par_.rho_t * ms(j) * stm -
                                   par_.rho_s * par_.rho_t * sst) /
                                  mm;
                if (!in_window) {
                    par_.theta(j, s) = cm + norm_(rng_) / std::sqrt(qdd);
                    continue;
                }
                const double y = Yd_(j, t);
                const double fjt = F_(j, t);
                const double th0 = par_.theta(j, s);
                const double u0 = U_(j, t);
                const double mu0 = u0 + fjt;
                const double grad0 = u0 * (y / mu0 - 1.0);
                const double curv0 = std::max(u0 - y * u0 * fjt / (mu0 * mu0), 0.0);
                const double prec_q = qdd + curv0;
                const double mean_q = (qdd * cm + curv0 * th0 + grad0) / prec_q;
                const double thp = mean_q + norm_(rng_) / std::sqrt(prec_q);
                const double up =
                    clamped_exp(par_.g(j, t) + eta_(j, s) + thp, &clamps_);
                const double mup = up + fjt;
                const double gradp = up * (y / mup - 1.0);
                const double curvp = std::max(up - y * up * fjt / (mup * mup), 0.0);
                const double prec_r = qdd + curvp;
                const double mean_r = (qdd * cm + curvp * thp + gradp) / prec_r;
                double la = y * (std::log(mup) - std::log(mu0)) - (mup - mu0);
                la += -0.5 * qdd * ((thp - cm) * (thp - cm) - (th0 - cm) * (th0 - cm));
                la += 0.5 * std::log(prec_r) - 0.5 * prec_r * (th0 - mean_r) * (th0 - mean_r);
                la -= 0.5 * std::log(prec_q) - 0.5 * prec_q * (thp - mean_q) * (thp - mean_q);
                ++c.proposed;
                if (std::log(unif_(rng_)) < la) {
                    par_.theta(j, s) = thp;
                    U_(j, t) = up;
                    ++c.accepted;
                }
            }
        }
    }

    void update_g(bool frozen) {
        auto& c = counters_["g"];
        long acc_sweep = 0;
        long n_sweep = 0;
        const double prior_sd = std::sqrt(par_.tau2);
        for (int t = 0; t < T_; ++t) {
            if (t < t0_) {
                for (int j = 0; j < J_; ++j) par_.g(j, t) = prior_sd * norm_(rng_);
                continue;
            }
            const int s = t - l_;
            for (int j = 0; j < J_; ++j) {
                const double g0 = par_.g(j, t);
                const double gp = g0 + g_scale_.scale() * norm_(rng_);
                const double up = clamped_exp(gp + eta_(j, s) + par_.theta(j, s), &clamps_);
                const double mu0 = U_(j, t) + F_(j, t);
                const double mup = up + F_(j, t);
                double la = Yd_(j, t) * (std::log(mup) - std::log(mu0)) - (mup - mu0);
                la -= (gp * gp - g0 * g0) / (2.0 * par_.tau2);
                ++n_sweep;
                if (std::log(unif_(rng_)) < la) {
                    par_.g(j, t) = gp;
                    U_(j, t) = up;
                    ++acc_sweep;
                }
            }
        }
        c.accepted += acc_sweep;
        c.proposed += n_sweep;
        if (!frozen && n_sweep > 0) {
            g_scale_.adapt(static_cast<double>(acc_sweep) / static_cast<double>(n_sweep));
        }
    }

    void update_v(bool frozen) {
        auto& c = counters_["v_tilde"];
        long acc_sweep = 0;
        long n_sweep = 0;
        const double prior_sd = std::sqrt(par_.sigma_v2);
        for (int t = 0; t < T_; ++t) {
            if (t < t0_) {
                for (int j = 0; j < J_; ++j) par_.v_tilde(j, t) = par_.mu_v + prior_sd * norm_(rng_);
                continue;
            }
            for (int j = 0; j < J_; ++j) {
                const double v0 = par_.v_tilde(j, t);
                const double vp = v0 + v_scale_.scale() * norm_(rng_);
                const double fp = clamped_exp(vp, &clamps_);
                const double mu0 = U_(j, t) + F_(j, t);
                const double mup = U_(j, t) + fp;
                double la = Yd_(j, t) * (std::log(mup) - std::log(mu0)) - (mup - mu0);
                la -= ((vp - par_.mu_v) * (vp - par_.mu_v) - (v0 - par_.mu_v) * (v0 - par_.mu_v)) /
                      (2.0 * par_.sigma_v2);
                ++n_sweep;
                if (std::log(unif_(rng_)) < la) {
                    par_.v_tilde(j, t) = vp;
                    F_(j, t) = fp;
                    ++acc_sweep;
                }
            }
        }
        c.accepted += acc_sweep;
        c.proposed += n_sweep;
        if (!frozen && n_sweep > 0) {
            v_scale_.adapt(static_cast<double>(acc_sweep) / static_cast<double>(n_sweep));
        }
    }

    /// Log-scale random walk on a variance with an InvGamma prior and a
    /// Gaussian sum-of-squares term: the full conditional is known up to the
    /// same two statistics, so only (n, ss) enter the ratio.
    bool variance_mh_step(double& variance, double ss, double n, AdaptiveScale& scale,
                          BlockCounter& c) {
        const double l0 = std::log(variance);
        const double lp = l0 + scale.scale() * norm_(rng_);
        const double vp = std::exp(lp);
        double la = log_inv_gamma_core(vp) - log_inv_gamma_core(variance);
        la += -0.5 * n * (lp - l0) - 0.5 * ss * (1.0 / vp - 1.0 / variance);
        la += lp - l0;  // Jacobian of the log transform
        ++c.proposed;
        const bool acc = std::log(unif_(rng_)) < la;
        if (acc) {
            variance = vp;
            ++c.accepted;
        }
        return acc;
    }

    void update_sigma2(bool frozen) {
        const double qf = quad_.value(par_.rho_s, par_.rho_t);
        const double n = static_cast<double>(J_) * static_cast<double>(T_);
        const bool acc = variance_mh_step(par_.sigma2, qf, n, s2_scale_, counters_["sigma2"]);
        if (!frozen) s2_scale_.adapt(acc ? 1.0 : 0.0);
    }

    void update_tau2(bool frozen) {
        const double ss = par_.g.squaredNorm();
        const double n = static_cast<double>(J_) * static_cast<double>(T_);
        const bool acc = variance_mh_step(par_.tau2, ss, n, t2_scale_, counters_["tau2"]);
        if (!frozen) t2_scale_.adapt(acc ? 1.0 : 0.0);
    }

    void update_sigma_v2(bool frozen) {
        const double ss = (par_.v_tilde.array() - par_.mu_v).square().sum();
        const double n = static_cast<double>(J_) * static_cast<double>(T_);
        const bool acc = variance_mh_step(par_.sigma_v2, ss, n, sv2_scale_, counters_["sigma_v2"]);
        if (!frozen) sv2_scale_.adapt(acc ? 1.0 : 0.0);
    }

    void update_mu_v() {
        const double n = static_cast<double>(J_) * static_cast<double>(T_);
        const double prec = 1.0 / kCoefficientPriorVariance + n / par_.sigma_v2;
        const double mean = (par_.v_tilde.sum() / par_.sigma_v2) / prec;
        par_.mu_v = mean + norm_(rng_) / std::sqrt(prec);
    }

    /// Logit-scale random walk on a CAR dependence parameter. `factor_mult`
    /// is the Kronecker exponent of that factor's determinant (T for rho_s,
    /// J for rho_t).
    void rho_mh_step(double& rho, const SpectralCar& factor, double factor_mult,
                     bool is_spatial, AdaptiveScale& scale, BlockCounter& c, bool frozen) {
        const double r0 = rho;
        const double x0 = std::log(r0 / (1.0 - r0));
        const double xp = x0 + scale.scale() * norm_(rng_);
        const double rp = 1.0 / (1.0 + std::exp(-xp));
        ++c.proposed;
        bool acc = false;
        if (rp > 0.0 && rp < kMaxCarRho) {
            const double qf0 = is_spatial ? quad_.value(r0, par_.rho_t) : quad_.value(par_.rho_s, r0);
            const double qfp = is_spatial ? quad_.value(rp, par_.rho_t) : quad_.value(par_.rho_s, rp);
            double la = 0.5 * factor_mult * (factor.log_det_structure(rp) - factor.log_det_structure(r0));
            la += -0.5 / par_.sigma2 * (qfp - qf0);
            la += std::log(rp * (1.0 - rp)) - std::log(r0 * (1.0 - r0));
            acc = std::log(unif_(rng_)) < la;
        }
        if (acc) {
            rho = rp;
            ++c.accepted;
        }
        if (!frozen) scale.adapt(acc ? 1.0 : 0.0);
    }

    void update_rho_s(bool frozen) {
        rho_mh_step(par_.rho_s, spatial_, static_cast<double>(T_), true, rs_scale_,
                    counters_["rho_s"], frozen);
    }

    void update_rho_t(bool frozen) {
        rho_mh_step(par_.rho_t, temporal_, static_cast<double>(J_), false, rt_scale_,
                    counters_["rho_t"], frozen);
    }

    void record(PosteriorSamples& out, int d, int iter) const {
        Eigen::Index c = 0;
        for (Eigen::Index i = 0; i < par_.coefficients.size(); ++i) {
            out.scalars(d, c++) = par_.coefficients(i);
        }
        out.scalars(d, c++) = par_.sigma2;
        out.scalars(d, c++) = par_.tau2;
        if (nugget_) {
            out.scalars(d, c++) = par_.sigma_v2;
            out.scalars(d, c++) = par_.mu_v;
        }
        out.scalars(d, c++) = par_.rho_s;
        out.scalars(d, c++) = par_.rho_t;
        if (config_.latent_thin > 0 && d % config_.latent_thin == 0) {
            out.theta_draws.push_back(par_.theta);
            out.g_draws.push_back(par_.g);
            if (nugget_) out.v_draws.push_back(par_.v_tilde);
            out.latent_draw_iterations.push_back(iter);
        }
    }

    const PanelDataset& data_;
    RateDesign design_;
    ModelVariant variant_;
    FitConfig config_;
    SpectralCar spatial_;
    SpectralCar temporal_;
    bool nugget_;
    int J_, T_, t0_, l_;
    Eigen::MatrixXd Yd_;

    ModelParams par_;
    Eigen::MatrixXd eta_;
    Eigen::MatrixXd U_;  // exp(g + eta(t-l) + theta(t-l)) on window columns
    Eigen::MatrixXd F_;  // exp(v_tilde) on window columns; zero without nugget
    StcarQuadParts quad_;
    mutable std::int64_t clamps_ = 0;

    std::mt19937_64 rng_;
    std::normal_distribution<double> norm_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};

    AdaptiveScale reg_scale_{}, g_scale_{}, v_scale_{}, s2_scale_{}, t2_scale_{}, sv2_scale_{},
        rs_scale_{}, rt_scale_{};
    RunningCov cov_;
    Eigen::MatrixXd prop_chol_;
    bool use_cov_ = false;
    std::map<std::string, BlockCounter> counters_;
};

}  // namespace

PosteriorSamples fit(const PanelDataset& dataset, const PropensityScores& scores,
                     ModelVariant variant, const FitConfig& config, const ModelParams* initial) {
    const PsTerms terms = variant == ModelVariant::NoPS ? PsTerms::None : config.ps_terms;
    RateDesign design = terms == PsTerms::None ? build_rate_design(dataset)
                                               : build_rate_design(dataset, scores, terms);
    config.validate(dataset.n_weeks(), design.valid_from);
    Sampler sampler(dataset, std::move(design), variant, config);
    return sampler.run(initial);
}

PosteriorSamples fit(const PanelDataset& dataset, ModelVariant variant, const FitConfig& config,
                     const ModelParams* initial) {
    RateDesign design = build_rate_design(dataset);
    config.validate(dataset.n_weeks(), design.valid_from);
    Sampler sampler(dataset, std::move(design), variant, config);
    return sampler.run(initial);
}

}  // namespace epicausal
