#include "tslab/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "tslab/errors.hpp"
#include "tslab/numcore.hpp"
#include "tslab/parallel.hpp"

namespace tslab {

namespace {

std::size_t max_lag(const std::vector<std::size_t>& lags) {
    std::size_t m = 0;
    for (std::size_t l : lags) m = std::max(m, l);
    return m;
}

// Rows-as-predictors lasso problem over samples [first, last).
struct RowDesign {
    Matrix rows;  // k x M
    std::vector<double> resp;
    std::vector<double> mask;

    LassoProblem problem() const {
        LassoProblem p;
        p.design = rows.transposed();
        p.response = resp;
        p.penalty_mask = mask;
        p.standardize = true;
        return p;
    }
};

void append_lag_rows(RowDesign& d, const std::vector<double>& lag_source,
                     const std::vector<std::size_t>& lags, std::size_t first, std::size_t last,
                     bool penalize = true) {
    const std::size_t m = last - first;
    const std::size_t base = d.rows.rows();
    Matrix grown(base + lags.size(), m);
    for (std::size_t i = 0; i < base; ++i)
        for (std::size_t j = 0; j < m; ++j) grown(i, j) = d.rows(i, j);
    for (std::size_t k = 0; k < lags.size(); ++k) {
        if (lags[k] > first) throw InsufficientHistory("lag offset exceeds usable history");
        for (std::size_t j = 0; j < m; ++j)
            grown(base + k, j) = lag_source[first + j - lags[k]];
    }
    d.rows = std::move(grown);
    d.mask.resize(d.rows.rows(), penalize ? 1.0 : 0.0);
}

LassoFit tuned_fit(const RowDesign& d, const EstimatorConfig& cfg) {
    const LassoProblem problem = d.problem();
    const double ratio = cfg.lambda_ratio > 0.0
                             ? cfg.lambda_ratio
                             : (problem.design.rows() > problem.design.cols() ? 1e-4 : 1e-2);
    return tune_bic(problem, lambda_grid(problem, cfg.n_lambda, ratio));
}

double min_eigen_of_rows(const Matrix& rows) { return corr_stats(rows).min_eigenvalue; }

std::vector<std::size_t> support_of(const std::vector<double>& alpha) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] != 0.0) s.push_back(i);
    return s;
}

Matrix slice_rows(const Matrix& x, std::size_t first, std::size_t last) {
    Matrix out(x.rows(), last - first);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = first; j < last; ++j) out(i, j - first) = x(i, j);
    return out;
}

std::vector<double> slice_vec(const std::vector<double>& v, std::size_t first, std::size_t last) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first),
                               v.begin() + static_cast<std::ptrdiff_t>(last));
}

FitResult fit_plain_or_lassoy(const EstimatorConfig& cfg, const Matrix& x,
                              const std::vector<double>& response,
                              const std::vector<double>& lag_source, std::size_t first,
                              std::size_t last) {
    const std::size_t n = x.rows();
    const std::vector<std::size_t> lags =
        cfg.method == Method::LassoY ? cfg.y_lags : std::vector<std::size_t>{};

    RowDesign d;
    d.rows = slice_rows(x, first, last);
    d.resp = slice_vec(response, first, last);
    d.mask.assign(n, 1.0);
    const Matrix x_block = d.rows;
    append_lag_rows(d, lag_source, lags, first, last, cfg.penalize_y_lags);

    const LassoFit lf = tuned_fit(d, cfg);
    FitResult out;
    out.method = cfg.method;
    out.cfg = cfg;
    out.cfg.y_lags = lags;
    out.first_sample = first;
    out.alpha_hat.assign(lf.coefficients.begin(), lf.coefficients.begin() + n);
    out.lag_coeffs.assign(lf.coefficients.begin() + n, lf.coefficients.end());
    out.selected = support_of(out.alpha_hat);
    out.intercept = lf.intercept;
    out.lambda = lf.lambda;
    out.insample_rss = lf.rss;
    out.fp_denominator = n;
    out.solver_coeffs = lf.coefficients;
    out.min_eigen = min_eigen_of_rows(x_block);
    return out;
}

FitResult fit_gls(const EstimatorConfig& cfg, const Matrix& x,
                  const std::vector<double>& response, const std::vector<double>& lag_source,
                  std::size_t first, std::size_t last) {
    const std::size_t n = x.rows();
    if (first < cfg.gls_ar_cap)
        throw InsufficientHistory("fit_gls: first_sample below the error-filter order cap");

    // Step 1: plain LASSO residuals stand in for the unobserved errors.
    EstimatorConfig plain_cfg = cfg;
    plain_cfg.method = Method::PlainLasso;
    const FitResult plain = fit_plain_or_lassoy(plain_cfg, x, response, lag_source, first, last);
    const std::size_t m = last - first;
    std::vector<double> eps(m);
    for (std::size_t j = 0; j < m; ++j) {
        double fitted = plain.intercept;
        for (std::size_t i = 0; i < n; ++i) fitted += plain.alpha_hat[i] * x(i, first + j);
        eps[j] = response[first + j] - fitted;
    }

    // Step 2: AR(p) on the residuals, order up to the cap by BIC.
    const ArmaFit eps_fit = select_order_bic(eps, cfg.gls_ar_cap, 0);
    const std::vector<double> filter = eps_fit.spec.ar;

    FitResult out;
    out.method = Method::GlsLasso;
    out.cfg = cfg;
    out.first_sample = first;
    out.gls_filter = filter;
    out.lag_coeffs = filter;
    out.fp_denominator = n;

    if (filter.empty()) {
        // Degenerate filter: reduces to the plain fit.
        out.alpha_hat = plain.alpha_hat;
        out.selected = plain.selected;
        out.intercept = plain.intercept;
        out.lambda = plain.lambda;
        out.insample_rss = plain.insample_rss;
        out.solver_coeffs = plain.solver_coeffs;
        out.min_eigen = plain.min_eigen;
        out.degraded = true;
        return out;
    }

    // Step 3: Cochrane-Orcutt filter on response and predictors, then LASSO.
    const std::size_t p_eps = filter.size();
    RowDesign d;
    d.rows = Matrix(n, m);
    d.resp.resize(m);
    d.mask.assign(n, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t t = first + j;
        double yt = response[t];
        for (std::size_t l = 0; l < p_eps; ++l) yt -= filter[l] * response[t - l - 1];
        d.resp[j] = yt;
        for (std::size_t i = 0; i < n; ++i) {
            double xt = x(i, t);
            for (std::size_t l = 0; l < p_eps; ++l) xt -= filter[l] * x(i, t - l - 1);
            d.rows(i, j) = xt;
        }
    }

    const LassoFit lf = tuned_fit(d, cfg);
    out.alpha_hat = lf.coefficients;
    out.selected = support_of(out.alpha_hat);
    out.intercept = lf.intercept;
    out.lambda = lf.lambda;
    out.insample_rss = lf.rss;
    out.solver_coeffs = lf.coefficients;
    out.min_eigen = min_eigen_of_rows(d.rows);
    return out;
}

FitResult fit_ardl(const EstimatorConfig& cfg, const Matrix& x,
                   const std::vector<double>& response, const std::vector<double>& lag_source,
                   std::size_t first, std::size_t last) {
    const std::size_t n = x.rows();
    const std::size_t copies = cfg.x_extra_lags + 1;
    if (first < cfg.x_extra_lags)
        throw InsufficientHistory("fit_ardl: first_sample below predictor lag span");
    const std::size_t m = last - first;

    RowDesign d;
    d.rows = Matrix(n * copies, m);
    d.resp = slice_vec(response, first, last);
    d.mask.assign(n * copies, 1.0);
    for (std::size_t l = 0; l < copies; ++l)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                d.rows(l * n + i, j) = x(i, first + j - l);
    const Matrix x_block = d.rows;
    append_lag_rows(d, lag_source, cfg.y_lags, first, last, cfg.penalize_y_lags);

    const LassoFit lf = tuned_fit(d, cfg);
    FitResult out;
    out.method = Method::ArdlLasso;
    out.cfg = cfg;
    out.first_sample = first;
    out.solver_coeffs = lf.coefficients;
    out.alpha_hat.assign(lf.coefficients.begin(), lf.coefficients.begin() + n);  // lag-0 copies
    out.lag_coeffs.assign(lf.coefficients.begin() + n * copies, lf.coefficients.end());
    // A predictor counts as selected when any of its lag copies survives.
    for (std::size_t i = 0; i < n; ++i) {
        bool any = false;
        for (std::size_t l = 0; l < copies; ++l)
            if (lf.coefficients[l * n + i] != 0.0) any = true;
        if (any) out.selected.push_back(i);
    }
    out.intercept = lf.intercept;
    out.lambda = lf.lambda;
    out.insample_rss = lf.rss;
    out.fp_denominator = n * copies + cfg.y_lags.size();
    out.min_eigen = min_eigen_of_rows(x_block);
    return out;
}

FitResult fit_farm(const EstimatorConfig& cfg, const Matrix& x,
                   const std::vector<double>& response, const std::vector<double>& lag_source,
                   std::size_t first, std::size_t last) {
    const std::size_t n = x.rows();
    if (n < 2) throw Error("fit_farm: need at least two predictors");
    const std::size_t m = last - first;

    // Standardize rows, then principal components of the row correlation.
    Matrix z(n, m);
    std::vector<double> x_mean(n), x_sd(n);
    for (std::size_t i = 0; i < n; ++i) {
        const StandardizeResult s = standardize(slice_vec(x.row(i), first, last));
        z.set_row(i, s.values);
        x_mean[i] = s.mean;
        x_sd[i] = s.sd;
    }
    const Matrix corr = correlation_matrix(z);
    const EigenDecomposition ed = sym_eigen(corr);

    // Eigenvalue-ratio choice of the factor count.
    const std::size_t cap = std::min<std::size_t>(cfg.factor_cap, n - 1);
    std::vector<double> lam(n);  // descending
    for (std::size_t i = 0; i < n; ++i) lam[i] = std::max(ed.values[n - 1 - i], 0.0);
    std::size_t r = 1;
    double best_ratio = -1.0;
    for (std::size_t k = 1; k <= cap; ++k) {
        const double denom = std::max(lam[k], 1e-300);
        const double ratio = lam[k - 1] / denom;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            r = k;
        }
    }

    // Factor rows from the top-r directions, loadings by per-series regression.
    Matrix dirs(n, r);
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t i = 0; i < n; ++i) dirs(i, k) = ed.vectors(i, n - 1 - k);
    Matrix f(r, m);
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += dirs(i, k) * z(i, j);
            f(k, j) = s;
        }
    Matrix f_design = f.transposed();  // m x r
    Matrix loadings(n, r);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> li = ols(f_design, z.row(i));
        for (std::size_t k = 0; k < r; ++k) loadings(i, k) = li[k];
    }
    Matrix idio(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double common = 0.0;
            for (std::size_t k = 0; k < r; ++k) common += loadings(i, k) * f(k, j);
            idio(i, j) = z(i, j) - common;
        }

    RowDesign d;
    d.rows = Matrix(r + n, m);
    d.resp = slice_vec(response, first, last);
    d.mask.assign(r + n, 1.0);
    for (std::size_t k = 0; k < r; ++k) {
        d.mask[k] = 0.0;  // factors stay unpenalized
        for (std::size_t j = 0; j < m; ++j) d.rows(k, j) = f(k, j);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) d.rows(r + i, j) = idio(i, j);
    append_lag_rows(d, lag_source, cfg.y_lags, first, last, cfg.penalize_y_lags);

    const LassoFit lf = tuned_fit(d, cfg);
    FitResult out;
    out.method = Method::FarmSelect;
    out.cfg = cfg;
    out.first_sample = first;
    out.solver_coeffs = lf.coefficients;
    out.n_factors = r;
    out.farm_dirs = dirs;
    out.farm_loadings = loadings;
    out.farm_x_mean = x_mean;
    out.farm_x_sd = x_sd;
    out.alpha_hat.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        out.alpha_hat[i] = lf.coefficients[r + i] / x_sd[i];  // back to the original scale
    out.selected = support_of(out.alpha_hat);
    out.lag_coeffs.assign(lf.coefficients.begin() + r + n, lf.coefficients.end());
    out.intercept = lf.intercept;
    out.lambda = lf.lambda;
    out.insample_rss = lf.rss;
    out.fp_denominator = n;
    out.min_eigen = min_eigen_of_rows(idio);
    return out;
}

FitResult fit_armar(const EstimatorConfig& cfg, const Matrix& x,
                    const std::vector<double>& response, const std::vector<double>& lag_source,
                    std::size_t first, std::size_t last) {
    const std::size_t n = x.rows();
    ArmarRows rows = armar_residual_rows(x, cfg.max_p, cfg.max_q, first, cfg.workers, last);

    RowDesign d;
    d.rows = rows.u_rows;
    d.resp = slice_vec(response, first, last);
    d.mask.assign(n, 1.0);
    append_lag_rows(d, lag_source, cfg.y_lags, first, last, cfg.penalize_y_lags);

    const LassoFit lf = tuned_fit(d, cfg);
    FitResult out;
    out.method = Method::ArmarLasso;
    out.cfg = cfg;
    out.first_sample = first;
    out.solver_coeffs = lf.coefficients;
    out.arma_fits = std::move(rows.fits);
    out.alpha_hat.assign(lf.coefficients.begin(), lf.coefficients.begin() + n);
    out.lag_coeffs.assign(lf.coefficients.begin() + n, lf.coefficients.end());
    out.selected = support_of(out.alpha_hat);
    out.intercept = lf.intercept;
    out.lambda = lf.lambda;
    out.insample_rss = lf.rss;
    out.fp_denominator = n;
    for (bool flag : rows.degraded) out.degraded = out.degraded || flag;
    out.min_eigen = min_eigen_of_rows(rows.u_rows);
    return out;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::PlainLasso: return "LAS";
        case Method::LassoY: return "LASy";
        case Method::GlsLasso: return "GLS-LAS";
        case Method::ArdlLasso: return "ARDL-LAS";
        case Method::FarmSelect: return "FaSel";
        case Method::ArmarLasso: return "ARMAr-LAS";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "LAS" || name == "lasso") return Method::PlainLasso;
    if (name == "LASy" || name == "lasso-y") return Method::LassoY;
    if (name == "GLS-LAS" || name == "gls") return Method::GlsLasso;
    if (name == "ARDL-LAS" || name == "ardl") return Method::ArdlLasso;
    if (name == "FaSel" || name == "farm") return Method::FarmSelect;
    if (name == "ARMAr-LAS" || name == "armar") return Method::ArmarLasso;
    throw ConfigError("unknown method name: " + name);
}

std::size_t required_burn(const EstimatorConfig& cfg) {
    switch (cfg.method) {
        case Method::PlainLasso: return 0;
        case Method::LassoY: return max_lag(cfg.y_lags);
        case Method::GlsLasso: return cfg.gls_ar_cap;
        case Method::ArdlLasso: return std::max(cfg.x_extra_lags, max_lag(cfg.y_lags));
        case Method::FarmSelect: return max_lag(cfg.y_lags);
        case Method::ArmarLasso: return max_lag(cfg.y_lags);
    }
    return 0;
}

ArmarRows armar_residual_rows(const Matrix& x, std::size_t max_p, std::size_t max_q,
                              std::size_t first_sample, unsigned workers,
                              std::size_t last_sample) {
    const std::size_t n = x.rows();
    const std::size_t last = std::min<std::size_t>(last_sample, x.cols());
    ArmarRows out;
    out.u_rows = Matrix(n, last - first_sample);
    out.fits.resize(n);
    out.degraded.assign(n, false);
    parallel_for(n, workers, [&](std::size_t i) {
        const std::vector<double> series = x.row(i);
        try {
            out.fits[i] = select_order_bic(series, max_p, max_q);
        } catch (const Error&) {
            // Fall back to the demeaned series rather than aborting the run.
            out.fits[i] = fit_arma_css(series, ArmaSpec{});
            out.degraded[i] = true;
        }
        const std::vector<double>& u = out.fits[i].residuals;
        for (std::size_t j = first_sample; j < last; ++j)
            out.u_rows(i, j - first_sample) = u[j];
    });
    return out;
}

ArmarDesign build_armar_design(const Matrix& x, const std::vector<double>& lag_source,
                               const EstimatorConfig& cfg, std::size_t first_sample,
                               std::size_t last_sample) {
    const std::size_t n = x.rows();
    const std::size_t last = std::min<std::size_t>(last_sample, x.cols());
    const std::size_t first = std::max(first_sample, max_lag(cfg.y_lags));
    ArmarRows rows = armar_residual_rows(x, cfg.max_p, cfg.max_q, first, cfg.workers, last);

    ArmarDesign out;
    out.first_sample = first;
    out.arma_fits = std::move(rows.fits);
    out.degraded = rows.degraded;
    const std::size_t m = last - first;
    out.w = Matrix(n + cfg.y_lags.size(), m);
    out.row_mean.resize(n + cfg.y_lags.size());
    out.row_sd.resize(n + cfg.y_lags.size());
    for (std::size_t i = 0; i < n; ++i) {
        const StandardizeResult s = standardize(rows.u_rows.row(i));
        out.w.set_row(i, s.values);
        out.row_mean[i] = s.mean;
        out.row_sd[i] = s.sd;
    }
    for (std::size_t k = 0; k < cfg.y_lags.size(); ++k) {
        std::vector<double> lagrow(m);
        for (std::size_t j = 0; j < m; ++j) lagrow[j] = lag_source[first + j - cfg.y_lags[k]];
        const StandardizeResult s = standardize(lagrow);
        out.w.set_row(n + k, s.values);
        out.row_mean[n + k] = s.mean;
        out.row_sd[n + k] = s.sd;
    }
    return out;
}

FitResult fit_estimator(const EstimatorConfig& cfg, const Matrix& x,
                        const std::vector<double>& response,
                        const std::vector<double>& lag_source, std::size_t first_sample,
                        std::size_t last_sample) {
    const std::size_t last = std::min<std::size_t>(last_sample, x.cols());
    if (response.size() != x.cols()) throw Error("fit_estimator: response length mismatch");
    if (lag_source.size() != response.size())
        throw Error("fit_estimator: lag source length mismatch");
    if (first_sample < required_burn(cfg))
        throw InsufficientHistory("fit_estimator: first_sample below the method's lag needs");
    if (last <= first_sample || last - first_sample < 10)
        throw Error("fit_estimator: too few usable samples");

    switch (cfg.method) {
        case Method::PlainLasso:
        case Method::LassoY:
            return fit_plain_or_lassoy(cfg, x, response, lag_source, first_sample, last);
        case Method::GlsLasso:
            return fit_gls(cfg, x, response, lag_source, first_sample, last);
        case Method::ArdlLasso:
            return fit_ardl(cfg, x, response, lag_source, first_sample, last);
        case Method::FarmSelect:
            return fit_farm(cfg, x, response, lag_source, first_sample, last);
        case Method::ArmarLasso:
            return fit_armar(cfg, x, response, lag_source, first_sample, last);
    }
    throw Error("fit_estimator: unhandled method");
}

double forecast_estimator(const FitResult& fit, const Matrix& x,
                          const std::vector<double>& response,
                          const std::vector<double>& lag_source,
                          const std::vector<double>& x_next, double lag_source_next) {
    (void)response;
    const std::size_t n = x.rows();
    const std::size_t n_obs = x.cols();
    if (x_next.size() != n) throw Error("forecast_estimator: predictor vector length mismatch");

    auto lag_value = [&](std::size_t offset) {
        if (offset == 0) {
            if (!std::isfinite(lag_source_next))
                throw InsufficientHistory("forecast_estimator: offset-0 lag value not supplied");
            return lag_source_next;
        }
        if (offset > n_obs) throw InsufficientHistory("forecast_estimator: lag offset too deep");
        return lag_source[n_obs - offset];
    };

    double yhat = fit.intercept;
    switch (fit.method) {
        case Method::PlainLasso:
        case Method::LassoY: {
            for (std::size_t i = 0; i < n; ++i) yhat += fit.alpha_hat[i] * x_next[i];
            for (std::size_t k = 0; k < fit.cfg.y_lags.size(); ++k)
                yhat += fit.lag_coeffs[k] * lag_value(fit.cfg.y_lags[k]);
            return yhat;
        }
        case Method::GlsLasso: {
            const std::size_t p_eps = fit.gls_filter.size();
            for (std::size_t i = 0; i < n; ++i) {
                double xt = x_next[i];
                for (std::size_t l = 0; l < p_eps; ++l) {
                    if (n_obs < l + 1) throw InsufficientHistory("forecast_estimator: GLS lag");
                    xt -= fit.gls_filter[l] * x(i, n_obs - l - 1);
                }
                yhat += fit.alpha_hat[i] * xt;
            }
            for (std::size_t l = 0; l < p_eps; ++l)
                yhat += fit.gls_filter[l] * lag_value(fit.cfg.gls_forecast_base + l);
            return yhat;
        }
        case Method::ArdlLasso: {
            const std::size_t copies = fit.cfg.x_extra_lags + 1;
            for (std::size_t l = 0; l < copies; ++l)
                for (std::size_t i = 0; i < n; ++i) {
                    const double xv = l == 0 ? x_next[i] : x(i, n_obs - l);
                    yhat += fit.solver_coeffs[l * n + i] * xv;
                }
            for (std::size_t k = 0; k < fit.cfg.y_lags.size(); ++k)
                yhat += fit.lag_coeffs[k] * lag_value(fit.cfg.y_lags[k]);
            return yhat;
        }
        case Method::FarmSelect: {
            const std::size_t r = fit.n_factors;
            std::vector<double> z_next(n);
            for (std::size_t i = 0; i < n; ++i)
                z_next[i] = (x_next[i] - fit.farm_x_mean[i]) / fit.farm_x_sd[i];
            std::vector<double> f_next(r, 0.0);
            for (std::size_t k = 0; k < r; ++k)
                for (std::size_t i = 0; i < n; ++i) f_next[k] += fit.farm_dirs(i, k) * z_next[i];
            for (std::size_t k = 0; k < r; ++k) yhat += fit.solver_coeffs[k] * f_next[k];
            for (std::size_t i = 0; i < n; ++i) {
                double common = 0.0;
                for (std::size_t k = 0; k < r; ++k) common += fit.farm_loadings(i, k) * f_next[k];
                yhat += fit.solver_coeffs[r + i] * (z_next[i] - common);
            }
            for (std::size_t k = 0; k < fit.cfg.y_lags.size(); ++k)
                yhat += fit.lag_coeffs[k] * lag_value(fit.cfg.y_lags[k]);
            return yhat;
        }
        case Method::ArmarLasso: {
            for (std::size_t i = 0; i < n; ++i) {
                const double u_next = next_residual(fit.arma_fits[i], x.row(i), x_next[i]);
                yhat += fit.alpha_hat[i] * u_next;
            }
            for (std::size_t k = 0; k < fit.cfg.y_lags.size(); ++k)
                yhat += fit.lag_coeffs[k] * lag_value(fit.cfg.y_lags[k]);
            return yhat;
        }
    }
    throw Error("forecast_estimator: unhandled method");
}

}  // namespace tslab
