#include "tslab/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "tslab/errors.hpp"
#include "tslab/numcore.hpp"

namespace tslab {

namespace {

constexpr double kCoordTol = 1e-7;
constexpr std::size_t kMaxSweeps = 10000;

// Column-major working copy of the problem on the (optionally) standardized
// scale, with the response centered.
struct Workspace {
    std::size_t t = 0, p = 0;
    std::vector<double> cols;       // p contiguous columns of length t
    std::vector<double> y;          // centered response
    std::vector<double> col_mean, col_scale;
    std::vector<double> gram_diag;  // x_j'x_j / T
    std::vector<double> mask;
    std::vector<bool> active;      // false for zero-variance columns
    double y_mean = 0.0;

    const double* col(std::size_t j) const { return cols.data() + j * t; }
};

Workspace prepare(const LassoProblem& problem) {
    Workspace w;
    w.t = problem.design.rows();
    w.p = problem.design.cols();
    if (problem.response.size() != w.t) throw Error("fit_lasso: dimension mismatch");
    if (w.t < 2) throw Error("fit_lasso: need T >= 2");
    if (!problem.penalty_mask.empty() && problem.penalty_mask.size() != w.p)
        throw Error("fit_lasso: penalty mask length mismatch");
    for (double m : problem.penalty_mask)
        if (m < 0.0) throw Error("fit_lasso: negative penalty mask entry");

    w.mask = problem.penalty_mask.empty() ? std::vector<double>(w.p, 1.0) : problem.penalty_mask;
    w.cols.resize(w.p * w.t);
    w.col_mean.assign(w.p, 0.0);
    w.col_scale.assign(w.p, 1.0);
    w.gram_diag.assign(w.p, 0.0);
    w.active.assign(w.p, true);

    w.y_mean = mean_of(problem.response);
    w.y.resize(w.t);
    for (std::size_t r = 0; r < w.t; ++r) w.y[r] = problem.response[r] - w.y_mean;

    for (std::size_t j = 0; j < w.p; ++j) {
        double* cj = w.cols.data() + j * w.t;
        double m = 0.0;
        for (std::size_t r = 0; r < w.t; ++r) m += problem.design(r, j);
        m /= static_cast<double>(w.t);
        w.col_mean[j] = m;
        double ss = 0.0;
        for (std::size_t r = 0; r < w.t; ++r) {
            cj[r] = problem.design(r, j) - m;
            ss += cj[r] * cj[r];
        }
        if (ss <= 0.0) {
            w.active[j] = false;
            continue;
        }
        if (problem.standardize) {
            const double sd = std::sqrt(ss / static_cast<double>(w.t - 1));
            w.col_scale[j] = sd;
            for (std::size_t r = 0; r < w.t; ++r) cj[r] /= sd;
            ss /= sd * sd;
        }
        w.gram_diag[j] = ss / static_cast<double>(w.t);
    }
    return w;
}

double penalized_objective(const Workspace& w, const std::vector<double>& beta,
                           const std::vector<double>& resid, double lambda) {
    double rss = 0.0;
    for (double r : resid) rss += r * r;
    double l1 = 0.0;
    for (std::size_t j = 0; j < w.p; ++j) l1 += w.mask[j] * std::fabs(beta[j]);
    return rss / (2.0 * static_cast<double>(w.t)) + lambda * l1;
}

}  // namespace

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

double lambda_max(const LassoProblem& problem) {
    const Workspace w = prepare(problem);

    // The null model keeps the intercept and every unpenalized column, so the
    // threshold is taken against the residual of that model.
    std::vector<std::size_t> free_cols;
    for (std::size_t j = 0; j < w.p; ++j)
        if (w.active[j] && w.mask[j] <= 0.0) free_cols.push_back(j);
    std::vector<double> resid = w.y;
    if (!free_cols.empty()) {
        Matrix design(w.t, free_cols.size());
        for (std::size_t c = 0; c < free_cols.size(); ++c)
            for (std::size_t r = 0; r < w.t; ++r) design(r, c) = w.col(free_cols[c])[r];
        const std::vector<double> beta = ols(design, w.y);
        for (std::size_t c = 0; c < free_cols.size(); ++c)
            for (std::size_t r = 0; r < w.t; ++r) resid[r] -= design(r, c) * beta[c];
    }

    double lmax = 0.0;
    bool any_penalized = false;
    for (std::size_t j = 0; j < w.p; ++j) {
        if (!w.active[j] || w.mask[j] <= 0.0) continue;
        any_penalized = true;
        double dot = 0.0;
        const double* cj = w.col(j);
        for (std::size_t r = 0; r < w.t; ++r) dot += cj[r] * resid[r];
        lmax = std::max(lmax, std::fabs(dot) / (static_cast<double>(w.t) * w.mask[j]));
    }
    if (!any_penalized) throw AllUnpenalized("lambda_max: no penalized coefficient");
    return lmax;
}

LassoFit fit_lasso(const LassoProblem& problem, double lambda,
                   const std::optional<std::vector<double>>& warm) {
    if (lambda < 0.0) throw Error("fit_lasso: lambda must be >= 0");
    Workspace w = prepare(problem);

    std::vector<double> beta(w.p, 0.0);
    if (warm) {
        if (warm->size() != w.p) throw Error("fit_lasso: warm start length mismatch");
        for (std::size_t j = 0; j < w.p; ++j)
            beta[j] = w.active[j] ? (*warm)[j] * w.col_scale[j] : 0.0;
    } else {
        // Cold start: put the unpenalized block straight at its least-squares
        // value so penalized coordinates see the null-model residual.
        std::vector<std::size_t> free_cols;
        for (std::size_t j = 0; j < w.p; ++j)
            if (w.active[j] && w.mask[j] <= 0.0) free_cols.push_back(j);
        if (!free_cols.empty()) {
            Matrix design(w.t, free_cols.size());
            for (std::size_t c = 0; c < free_cols.size(); ++c)
                for (std::size_t r = 0; r < w.t; ++r) design(r, c) = w.col(free_cols[c])[r];
            const std::vector<double> init = ols(design, w.y);
            for (std::size_t c = 0; c < free_cols.size(); ++c) beta[free_cols[c]] = init[c];
        }
    }

    std::vector<double> resid = w.y;
    for (std::size_t j = 0; j < w.p; ++j) {
        if (beta[j] == 0.0) continue;
        const double* cj = w.col(j);
        for (std::size_t r = 0; r < w.t; ++r) resid[r] -= cj[r] * beta[j];
    }

    LassoFit fit;
    fit.lambda = lambda;
    const double t_dbl = static_cast<double>(w.t);
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < w.p; ++j) {
            if (!w.active[j]) continue;
            const double* cj = w.col(j);
            double dot = 0.0;
            for (std::size_t r = 0; r < w.t; ++r) dot += cj[r] * resid[r];
            const double rho = w.gram_diag[j] * beta[j] + dot / t_dbl;
            const double updated = soft_threshold(rho, lambda * w.mask[j]) / w.gram_diag[j];
            const double delta = updated - beta[j];
            if (delta != 0.0) {
                for (std::size_t r = 0; r < w.t; ++r) resid[r] -= cj[r] * delta;
                beta[j] = updated;
                max_change = std::max(max_change, std::fabs(delta));
            }
        }
        fit.n_sweeps = sweep + 1;
        fit.objective_trace.push_back(penalized_objective(w, beta, resid, lambda));
        if (max_change <= kCoordTol) {
            fit.converged = true;
            break;
        }
    }

    fit.coefficients.assign(w.p, 0.0);
    fit.df = 0;
    double coef_dot_mean = 0.0;
    for (std::size_t j = 0; j < w.p; ++j) {
        if (beta[j] != 0.0) ++fit.df;
        fit.coefficients[j] = w.active[j] ? beta[j] / w.col_scale[j] : 0.0;
        coef_dot_mean += fit.coefficients[j] * w.col_mean[j];
    }
    fit.intercept = w.y_mean - coef_dot_mean;
    fit.rss = 0.0;
    for (double r : resid) fit.rss += r * r;
    fit.bic = t_dbl * std::log(std::max(fit.rss / t_dbl, 1e-300)) +
              static_cast<double>(fit.df) * std::log(t_dbl);
    return fit;
}

std::vector<double> lambda_grid(const LassoProblem& problem, std::size_t n_lambda, double ratio) {
    if (n_lambda < 2) throw Error("lambda_grid: need at least 2 points");
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error("lambda_grid: ratio must be in (0,1)");
    const double lmax = lambda_max(problem);
    std::vector<double> grid(n_lambda);
    const double step = std::log(ratio) / static_cast<double>(n_lambda - 1);
    for (std::size_t k = 0; k < n_lambda; ++k)
        grid[k] = lmax * std::exp(step * static_cast<double>(k));
    return grid;
}

std::vector<double> default_lambda_grid(const LassoProblem& problem) {
    const double ratio = problem.design.rows() > problem.design.cols() ? 1e-4 : 1e-2;
    return lambda_grid(problem, 100, ratio);
}

LassoFit tune_bic(const LassoProblem& problem, const std::vector<double>& grid) {
    if (grid.empty()) throw Error("tune_bic: empty grid");
    const double y_mean = mean_of(problem.response);
    double tss = 0.0;
    for (double y : problem.response) tss += (y - y_mean) * (y - y_mean);

    LassoFit best;
    bool have_best = false;
    std::optional<std::vector<double>> warm;
    double prev_dev_ratio = 0.0;
    bool first_point = true;
    for (double lambda : grid) {
        LassoFit fit = fit_lasso(problem, lambda, warm);
        if (!fit.converged) continue;
        warm = fit.coefficients;
        if (!have_best || fit.bic < best.bic) {  // ties keep the larger lambda
            best = fit;
            have_best = true;
        }
        // Path termination on saturated or stalling explained deviance.
        if (tss > 0.0) {
            const double dev_ratio = 1.0 - fit.rss / tss;
            if (dev_ratio >= 0.999) break;
            if (!first_point && dev_ratio - prev_dev_ratio < 1e-5 * dev_ratio) break;
            prev_dev_ratio = dev_ratio;
            first_point = false;
        }
    }
    if (!have_best) throw NotConverged("tune_bic: no path point converged");
    return best;
}

}  // namespace tslab
