#pragma once

#include <cstdint>
#include <vector>

namespace tslab {

// ARMA(p,q) parameterization:
//   x_t = sum_l ar[l] x_{t-l-1} + sum_k ma[k] u_{t-k-1} + u_t,  u_t ~ wn(0, innovation_var).
struct ArmaSpec {
    std::vector<double> ar;
    std::vector<double> ma;
    double innovation_var = 1.0;

    std::size_t p() const { return ar.size(); }
    std::size_t q() const { return ma.size(); }
};

struct ArmaFit {
    ArmaSpec spec;
    std::vector<double> residuals;  // length = sample_size
    double mean = 0.0;              // series mean removed before fitting
    double css = 0.0;               // conditional sum of squared innovations
    double bic = 0.0;
    std::size_t sample_size = 0;
    bool converged = false;
};

// All AR characteristic roots strictly outside the unit circle.
bool is_stationary(const ArmaSpec& spec);
// All MA roots strictly outside the unit circle.
bool is_invertible(const ArmaSpec& spec);

// Reflects unit-circle-violating roots of an AR or MA coefficient block back
// outside the circle and re-expands the polynomial.
std::vector<double> reflect_to_valid(const std::vector<double>& coeffs);

// Simulates T observations after discarding `burnin` initial steps.
// Deterministic for a given seed.
std::vector<double> simulate_arma(const ArmaSpec& spec, std::size_t t_total, std::size_t burnin,
                                  std::uint64_t seed);

// One-step innovations of the centered series under `spec` with pre-sample
// values set to zero. Returns a full-length residual vector.
std::vector<double> arma_filter(const std::vector<double>& centered, const ArmaSpec& spec);

// Two-stage Hannan-Rissanen startup estimate. The returned spec is projected
// into the stationary/invertible region.
ArmaSpec hannan_rissanen(const std::vector<double>& series, std::size_t p, std::size_t q);

// Derivative-free conditional-sum-of-squares refinement from `init`.
// BIC = T ln(css/T) + (p+q) ln(T).
ArmaFit fit_arma_css(const std::vector<double>& series, const ArmaSpec& init);

// Convenience: Hannan-Rissanen followed by CSS refinement for fixed orders.
ArmaFit fit_arma(const std::vector<double>& series, std::size_t p, std::size_t q);

// Fits every (p,q) on the grid [0..p_max] x [0..q_max] and returns the
// smallest-BIC fit; ties broken by smaller p+q, then smaller p.
ArmaFit select_order_bic(const std::vector<double>& series, std::size_t p_max, std::size_t q_max);

const std::vector<double>& arma_residuals(const ArmaFit& fit);

// One-step-ahead innovation for a new observation appended to the series the
// fit was produced on.
double next_residual(const ArmaFit& fit, const std::vector<double>& series, double next_value);

}  // namespace tslab
