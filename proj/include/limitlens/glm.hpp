#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitlens/stats.hpp"

namespace limitlens {

enum class Link : std::uint8_t { Logit, Probit };

inline std::string to_string(Link l) { return l == Link::Logit ? "logit" : "probit"; }

inline Link parse_link(std::string_view s) {
    if (s == "logit") return Link::Logit;
    if (s == "probit") return Link::Probit;
    throw std::invalid_argument("unknown link: " + std::string(s));
}

struct GlmOptions {
    double tol_rel_ll = 1e-10;
    double tol_grad = 1e-8;   // on the standardized scale
    int max_iter = 100;
    double alpha = 0.05;      // Wald significance level
};

struct GlmFit {
    Link link = Link::Logit;
    std::vector<double> beta;  // raw regressor units
    std::vector<double> se;
    std::vector<double> cov;  // row-major p x p, raw units
    std::vector<double> z;
    std::vector<char> significance;  // '+', '-', '0'
    double loglik = 0.0;
    double loglik_null = 0.0;
    double rho2 = 0.0;
    double accuracy = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string reason;  // empty on success; "separation", "max_iterations", ...
    bool ridge_used = false;
    double condition_number = 0.0;  // of the standardized design
};

// Relative odds change for a coefficient under a regressor move of dx.
inline double odds_effect(double beta, double dx) { return std::expm1(beta * dx); }

// McFadden pseudo R-squared.
inline double mcfadden_rho2(double loglik_fitted, double loglik_null) {
    if (loglik_null == 0.0) throw std::invalid_argument("mcfadden_rho2: degenerate null likelihood");
    return 1.0 - loglik_fitted / loglik_null;
}

inline char wald_code(double beta, double se, double z_crit) {
    if (!(se > 0.0)) return '0';
    const double z = beta / se;
    if (z > z_crit) return '+';
    if (z < -z_crit) return '-';
    return '0';
}

namespace detail {

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// log Phi(z); asymptotic series below -20 where erfc would underflow.
inline double log_norm_cdf(double z) {
    if (z < -20.0) {
        const double zi = 1.0 / (z * z);
        const double series = 1.0 + zi * (-1.0 + zi * (3.0 - 15.0 * zi));
        return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-z) + std::log(series);
    }
    return std::log(normal_cdf(z));
}

// Inverse Mills ratio phi(z)/Phi(z) with the matching asymptotic branch.
inline double inv_mills(double z) {
    if (z < -20.0) {
        const double zi = 1.0 / (z * z);
        const double series = 1.0 + zi * (-1.0 + zi * (3.0 - 15.0 * zi));
        return -z / series;
    }
    return normal_pdf(z) / normal_cdf(z);
}

struct RowEval {
    double ll = 0.0;  // log-likelihood
    double g = 0.0;   // d ll / d eta
    double w = 0.0;   // -d^2 ll / d eta^2 (observed information weight)
};

inline RowEval eval_row(Link link, double eta, int y) {
    RowEval r;
    if (link == Link::Logit) {
        const double mu = eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
        r.ll = y == 1 ? -softplus(-eta) : -softplus(eta);
        r.g = static_cast<double>(y) - mu;
        r.w = mu * (1.0 - mu);
    } else {
        const double s = y == 1 ? 1.0 : -1.0;
        const double zed = s * eta;
        const double lambda = inv_mills(zed);
        r.ll = log_norm_cdf(zed);
        r.g = s * lambda;
        r.w = lambda * (lambda + zed);  // positive for all zed
    }
    return r;
}

}  // namespace detail

// Maximum-likelihood fit of a binary-response GLM by Newton-Raphson on the
// observed information, with step-halving. X is row-major n x p and must
// carry the intercept as its first column; reported coefficients, covariance
// and z statistics are in raw regressor units (the design is standardized
// internally purely for conditioning).
inline GlmFit fit_glm(Link link, std::size_t n, std::size_t p, const double* x_rowmajor,
                      const int* y, const GlmOptions& opts = {}) {
    if (p == 0) throw std::invalid_argument("empty design");
    if (n < p + 1) throw std::invalid_argument("too few rows for " + std::to_string(p) + " coefficients");
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) ones += static_cast<std::size_t>(y[i] == 1);
    if (ones == 0 || ones == n) throw std::invalid_argument("degenerate response");

    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;
    const auto ni = static_cast<Eigen::Index>(n);
    const auto pi = static_cast<Eigen::Index>(p);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        x_rowmajor, ni, pi);

    // Standardize non-intercept columns (constants left untouched).
    Vec shift = Vec::Zero(pi), scale = Vec::Ones(pi);
    Mat Xs(ni, pi);
    Xs.col(0) = X.col(0);
    for (Eigen::Index j = 1; j < pi; ++j) {
        const double m = X.col(j).mean();
        const double sd = std::sqrt((X.col(j).array() - m).square().sum() / static_cast<double>(n));
        if (sd > 0.0) {
            shift[j] = m;
            scale[j] = sd;
            Xs.col(j) = (X.col(j).array() - m) / sd;
        } else {
            Xs.col(j) = X.col(j);
        }
    }

    GlmFit fit;
    fit.link = link;

    const double pbar = static_cast<double>(ones) / static_cast<double>(n);
    Vec beta = Vec::Zero(pi);
    beta[0] = link == Link::Logit ? std::log(pbar / (1.0 - pbar)) : normal_quantile(pbar);

    Vec eta(ni), grow(ni), w(ni);
    double ll = 0.0;
    auto evaluate = [&](const Vec& b) {
        eta.noalias() = Xs * b;
        double s = 0.0;
        for (Eigen::Index i = 0; i < ni; ++i) {
            const auto r = detail::eval_row(link, eta[i], y[static_cast<std::size_t>(i)]);
            s += r.ll;
            grow[i] = r.g;
            w[i] = r.w;
        }
        return s;
    };
    ll = evaluate(beta);

    constexpr double kSeparationNorm = 20.0;  // standardized-scale coefficient bound

    auto newton_step = [&](Vec& grad_out) -> Vec {
        grad_out.noalias() = Xs.transpose() * grow;
        Mat H = Xs.transpose() * w.asDiagonal() * Xs;
        Eigen::LDLT<Mat> ldlt(H);
        Vec step;
        bool ok = ldlt.info() == Eigen::Success;
        if (ok) {
            step = ldlt.solve(grad_out);
            ok = step.allFinite() && (H.selfadjointView<Eigen::Lower>() * step - grad_out).norm() <=
                                         1e-6 * (grad_out.norm() + 1.0);
        }
        if (!ok) {
            fit.ridge_used = true;
            H.diagonal().array() += 1e-8;
            step = Eigen::LDLT<Mat>(H).solve(grad_out);
        }
        return step;
    };

    bool converged = false;
    Vec grad(pi);
    for (int iter = 0; iter < opts.max_iter && !converged; ++iter) {
        Vec step = newton_step(grad);
        if (grad.lpNorm<Eigen::Infinity>() < opts.tol_grad) {
            converged = true;
            break;
        }
        double ll_new = 0.0;
        Vec beta_new;
        bool improved = false;
        for (int half = 0; half < 40; ++half) {
            beta_new = beta + step;
            ll_new = evaluate(beta_new);
            if (ll_new >= ll - 1e-14 * std::abs(ll)) {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        ++fit.iterations;
        if (!improved) {
            evaluate(beta);  // restore caches for the current iterate
            fit.reason = "line_search_stall";
            break;
        }
        const double delta = std::abs(ll_new - ll);
        beta = beta_new;
        ll = ll_new;
        if (beta.lpNorm<Eigen::Infinity>() > kSeparationNorm) {
            fit.reason = "separation";
            break;
        }
        if (delta < opts.tol_rel_ll * (std::abs(ll) + 1e-12)) converged = true;
    }

    if (!converged && fit.reason.empty()) fit.reason = "max_iterations";
    if (converged && beta.lpNorm<Eigen::Infinity>() > kSeparationNorm) {
        converged = false;
        fit.reason = "separation";
    }

    // Polish: push the score toward machine zero so the reported optimum
    // satisfies the first-order conditions in raw units as well.
    if (converged) {
        for (int extra = 0; extra < 4; ++extra) {
            Vec step = newton_step(grad);
            if (grad.lpNorm<Eigen::Infinity>() <= 1e-10) break;
            const double ll_new = evaluate(beta + step);
            if (!(ll_new >= ll - 1e-12 * std::abs(ll))) {
                evaluate(beta);
                break;
            }
            beta += step;
            ll = ll_new;
            ++fit.iterations;
        }
    }

    fit.converged = converged;
    fit.loglik = ll;

    // Null log-likelihood from the intercept-only MLE eta = g(pbar), summed by
    // the identical per-row routine so an intercept-only fit yields rho2 = 0
    // bit-exactly.
    {
        const double eta0 = link == Link::Logit ? std::log(pbar / (1.0 - pbar)) : normal_quantile(pbar);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += detail::eval_row(link, eta0, y[i]).ll;
        fit.loglik_null = s;
    }
    fit.rho2 = converged ? mcfadden_rho2(fit.loglik, fit.loglik_null) : 0.0;

    // Classification at the 0.5 threshold == eta >= 0 under either link.
    {
        eta.noalias() = Xs * beta;
        std::size_t correct = 0;
        for (Eigen::Index i = 0; i < ni; ++i) {
            const int pred = eta[i] >= 0.0 ? 1 : 0;
            correct += static_cast<std::size_t>(pred == y[static_cast<std::size_t>(i)]);
        }
        fit.accuracy = static_cast<double>(correct) / static_cast<double>(n);
        evaluate(beta);  // refresh weights at the final iterate
    }

    // Map the standardized coefficients and covariance back to raw units:
    // beta_raw = T beta_std, cov_raw = T cov_std T'.
    Mat T = Mat::Zero(pi, pi);
    T(0, 0) = 1.0;
    for (Eigen::Index j = 1; j < pi; ++j) {
        T(0, j) = -shift[j] / scale[j];
        T(j, j) = 1.0 / scale[j];
    }
    Mat H = Xs.transpose() * w.asDiagonal() * Xs;
    if (fit.ridge_used) H.diagonal().array() += 1e-8;
    Mat cov_std = Eigen::LDLT<Mat>(H).solve(Mat::Identity(pi, pi));
    Mat cov_raw = T * cov_std * T.transpose();
    cov_raw = 0.5 * (cov_raw + cov_raw.transpose()).eval();
    Vec beta_raw = T * beta;

    {
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(Xs.transpose() * Xs));
        const double lmin = es.eigenvalues().minCoeff();
        const double lmax = es.eigenvalues().maxCoeff();
        fit.condition_number = lmin > 0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
    }

    fit.beta.assign(beta_raw.data(), beta_raw.data() + pi);
    fit.cov.resize(p * p);
    for (Eigen::Index r = 0; r < pi; ++r)
        for (Eigen::Index c = 0; c < pi; ++c)
            fit.cov[static_cast<std::size_t>(r * pi + c)] = cov_raw(r, c);
    fit.se.resize(p);
    fit.z.resize(p);
    fit.significance.resize(p);
    const double z_crit = normal_quantile(1.0 - opts.alpha / 2.0);
    for (std::size_t j = 0; j < p; ++j) {
        const double v = cov_raw(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        fit.se[j] = v > 0 ? std::sqrt(v) : 0.0;
        fit.z[j] = fit.se[j] > 0 ? fit.beta[j] / fit.se[j] : 0.0;
        fit.significance[j] = wald_code(fit.beta[j], fit.se[j], z_crit);
    }
    return fit;
}

inline GlmFit fit_glm(Link link, std::size_t n, std::size_t p, const std::vector<double>& x,
                      const std::vector<int>& y, const GlmOptions& opts = {}) {
    if (x.size() != n * p || y.size() != n) throw std::invalid_argument("design shape mismatch");
    return fit_glm(link, n, p, x.data(), y.data(), opts);
}

// Independent recount of classification accuracy from raw coefficients.
inline double classify_and_score(const std::vector<double>& beta, std::size_t n, std::size_t p,
                                 const double* x_rowmajor, const int* y) {
    if (beta.size() != p) throw std::invalid_argument("coefficient count mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < p; ++j) eta += beta[j] * x_rowmajor[i * p + j];
        correct += static_cast<std::size_t>((eta >= 0.0 ? 1 : 0) == y[i]);
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace limitlens
