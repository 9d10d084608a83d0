#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tslab/arma.hpp"
#include "tslab/lasso.hpp"
#include "tslab/matrix.hpp"

namespace tslab {

enum class Method { PlainLasso, LassoY, GlsLasso, ArdlLasso, FarmSelect, ArmarLasso };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Shared knobs for the fit/forecast contract. `y_lags` holds offsets into the
// lag source relative to the sample index: offset o at sample t reads
// lag_source[t - o]. The simulation harness passes the response itself as the
// lag source (offset 1 = previous response); the forecasting pipeline passes
// the in-sample target series (offset 0 = its current value).
struct EstimatorConfig {
    Method method = Method::PlainLasso;
    std::vector<std::size_t> y_lags;
    std::size_t x_extra_lags = 0;   // ARDL: lagged copies added per predictor
    std::size_t max_p = 1;          // ARMA filter order caps
    std::size_t max_q = 0;
    std::size_t gls_ar_cap = 1;     // error-filter AR order cap (BIC-selected)
    std::size_t gls_forecast_base = 1;  // first lag-source offset in the GLS forecast sum
    std::size_t factor_cap = 8;
    bool penalize_y_lags = true;
    std::size_t n_lambda = 100;
    double lambda_ratio = 0.0;  // 0 = 1e-3 when T > p, else 1e-2
    unsigned workers = 1;       // per-series ARMA fits run in parallel
};

// Earliest sample index the method can use, given its lag needs.
std::size_t required_burn(const EstimatorConfig& cfg);

struct FitResult {
    Method method = Method::PlainLasso;
    EstimatorConfig cfg;
    std::vector<double> alpha_hat;  // per original predictor, original scale
    std::vector<double> lag_coeffs;
    std::vector<std::size_t> selected;  // indices of predictors with nonzero alpha_hat
    double intercept = 0.0;
    double lambda = 0.0;
    double insample_rss = 0.0;
    std::size_t fp_denominator = 0;  // count of terms that underwent selection
    double min_eigen = 0.0;          // min eigenvalue of the predictor-block correlation
    bool degraded = false;           // some stage fell back (recorded, not fatal)
    std::size_t first_sample = 0;

    // method state needed to forecast
    std::vector<ArmaFit> arma_fits;          // ArmarLasso
    std::vector<double> gls_filter;          // GlsLasso: error AR coefficients
    std::vector<double> solver_coeffs;       // coefficients in solver row space
    std::vector<double> farm_x_mean, farm_x_sd;
    Matrix farm_dirs;      // n x r principal directions
    Matrix farm_loadings;  // n x r
    std::size_t n_factors = 0;
};

// Residual rows of the ARMA pre-whitening step over [first_sample, N).
struct ArmarRows {
    Matrix u_rows;  // n x (N - first_sample)
    std::vector<ArmaFit> fits;
    std::vector<bool> degraded;
};

ArmarRows armar_residual_rows(const Matrix& x, std::size_t max_p, std::size_t max_q,
                              std::size_t first_sample, unsigned workers = 1,
                              std::size_t last_sample = SIZE_MAX);

// Working design: standardized residual rows on top, standardized lag rows of
// the response underneath, all over the common usable span.
struct ArmarDesign {
    Matrix w;  // (n + #lags) x M, standardized rows
    std::vector<ArmaFit> arma_fits;
    std::vector<double> row_mean, row_sd;
    std::vector<bool> degraded;
    std::size_t first_sample = 0;
};

ArmarDesign build_armar_design(const Matrix& x, const std::vector<double>& lag_source,
                               const EstimatorConfig& cfg, std::size_t first_sample,
                               std::size_t last_sample = SIZE_MAX);

// Fits one of the six pipelines. `lag_source` must be indexed like `response`
// and may alias it. Samples first_sample..last_sample-1 enter the regression;
// indices outside that span are read only for lags and filters (response
// values past last_sample are never touched).
FitResult fit_estimator(const EstimatorConfig& cfg, const Matrix& x,
                        const std::vector<double>& response,
                        const std::vector<double>& lag_source, std::size_t first_sample,
                        std::size_t last_sample = SIZE_MAX);

// One-step forecast at sample index N given the predictor vector there.
// `lag_source_next` supplies the offset-0 lag value and may be NaN when no
// zero offset is configured.
double forecast_estimator(const FitResult& fit, const Matrix& x,
                          const std::vector<double>& response,
                          const std::vector<double>& lag_source,
                          const std::vector<double>& x_next,
                          double lag_source_next = std::numeric_limits<double>::quiet_NaN());

}  // namespace tslab
