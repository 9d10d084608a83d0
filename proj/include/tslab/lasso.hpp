#pragma once

#include <optional>
#include <vector>

#include "tslab/matrix.hpp"

namespace tslab {

// Penalized least squares instance: (1/2T) ||y - X b||^2 + lambda * sum_j mask_j |b_j|.
// Design is T x p with predictors in columns. A zero mask entry leaves that
// coefficient unpenalized; the intercept is always unpenalized and handled by
// centering.
struct LassoProblem {
    Matrix design;
    std::vector<double> response;
    std::vector<double> penalty_mask;  // empty = all ones
    bool standardize = true;
};

struct LassoFit {
    std::vector<double> coefficients;  // original scale
    double intercept = 0.0;
    double lambda = 0.0;
    std::size_t df = 0;  // nonzero coefficients
    double rss = 0.0;    // original-scale residual sum of squares
    double bic = 0.0;
    std::size_t n_sweeps = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // penalized objective per sweep
};

double soft_threshold(double z, double gamma);

// Cyclical coordinate descent until the largest coefficient change is below
// 1e-7 or 10^4 sweeps. `warm` is an optional original-scale start.
LassoFit fit_lasso(const LassoProblem& problem, double lambda,
                   const std::optional<std::vector<double>>& warm = std::nullopt);

// Smallest lambda that zeroes every penalized coefficient.
double lambda_max(const LassoProblem& problem);

// Geometric grid from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(const LassoProblem& problem, std::size_t n_lambda, double ratio);

// Grid with the default length-100 layout; ratio 1e-3 when T > p, else 1e-2.
std::vector<double> default_lambda_grid(const LassoProblem& problem);

// Fits the full path with warm starts and returns the smallest-BIC fit,
// BIC = T ln(RSS/T) + df ln(T); ties resolve to the larger lambda.
LassoFit tune_bic(const LassoProblem& problem, const std::vector<double>& grid);

}  // namespace tslab
