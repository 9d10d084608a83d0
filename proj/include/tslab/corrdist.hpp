#pragma once

#include <cstdint>
#include <vector>

namespace tslab {

enum class DensityVariant { Theorem, Lemma };

// Parameter bundle of the sample-correlation density D(r):
//   D(r) = G(k_v) (1-phi_dd) sqrt(xi_v) (1-r^2)^{k_v-1} [2 T_v (1-phi_dd^2)]^{k_v}
//          / [(1-r^2) 2 T_v (1-phi_dd^2) + r^2 xi_v (1-phi_dd)^2]^{k_v+1/2},
// with G(k) = Gamma(k+1/2) / (Gamma(k) sqrt(pi)) and phi_dd = phi_i * phi_j.
struct DensityParams {
    long long t_v = 0;
    double xi_v = 0.0;
    double k_v = 0.0;
    double phi_dd = 0.0;

    bool valid() const {
        return t_v >= 1 && xi_v > 0.0 && k_v > 0.0 && phi_dd > -1.0 && phi_dd < 1.0;
    }
};

// Evaluates the closed-form parameter bundle:
//   T_v  = round(((T-1)(1-phi_i phi_j)^2 - (1-phi_i^2 phi_j^2)) / (1-phi_i phi_j)^2)
//   xi_v = 3 T_v - T_v^2 + 2 sum_{t=1}^{T_v-1} (1 + 2 phi_j^{2t})
//   k_v  = T_v / xi_v   (Theorem variant)  or  T_v^2 / xi_v  (Lemma variant).
// Throws InvalidXi (carrying xi_v) when the scale comes out non-positive,
// which the closed form does for small |phi_j| at moderate T.
DensityParams density_params(std::size_t t_obs, double phi_i, double phi_j,
                             DensityVariant variant);

// Same as density_params but never throws; callers inspect valid().
DensityParams density_params_unchecked(std::size_t t_obs, double phi_i, double phi_j,
                                       DensityVariant variant);

// Moment-matched bundle from the mean and variance of the residual sum
// v = a_jj - a_ji^2 / a_ii: T_v = round(E[v](1-phi_j^2)),
// xi_v = Var[v](1-phi_j^2)^2, k_v = E[v]^2 / Var[v].
DensityParams density_params_from_moments(double v_mean, double v_var, double phi_i,
                                          double phi_j);

double corr_density(double r, const DensityParams& params);

// Two-sided tail mass Pr(|c| >= tau), adaptive quadrature to 1e-8 absolute.
double tail_probability(double tau, const DensityParams& params);

struct McCorrDensity {
    std::vector<double> bin_edges;
    std::vector<double> density;  // histogram density per bin
    std::vector<double> samples;  // raw correlation draws
};

// Sample correlations of `reps` independent AR(1) pairs, length T each.
McCorrDensity mc_corr_density(std::size_t t_obs, double phi_i, double phi_j, std::size_t reps,
                              std::uint64_t seed, const std::vector<double>& bin_edges,
                              unsigned workers = 1);

struct McSlopeStudy {
    std::vector<double> slopes;     // OLS slope b per replication
    std::vector<double> v_values;   // residual sum v per replication
    std::vector<double> nw_values;  // Newey-West variance estimate per replication
};

// Per-replication regression of x_j on x_i for independent AR(1) pairs;
// feeds both the slope-variance comparison and moment fitting of D(r).
McSlopeStudy mc_slope_study(std::size_t t_obs, double phi_i, double phi_j, std::size_t reps,
                            std::uint64_t seed, unsigned workers = 1);

// Moment-matched density parameters estimated from simulation.
DensityParams fit_density_params_mc(std::size_t t_obs, double phi_i, double phi_j,
                                    std::size_t reps, std::uint64_t seed, unsigned workers = 1);

// Closed-form slope variance: (1-phi_i^2 phi_j^2)(1-phi_i^2)
//                            / ((T-1)(1-phi_j^2)(1-phi_i phi_j)^2),
// for the regression of x_j on x_i.
double ols_slope_variance(std::size_t t_obs, double phi_i, double phi_j);

// Newey-West HAC variance of an OLS slope with centered x and e,
// Bartlett weights (m-j)/m. The lag default rule is m = floor(0.75 T^{1/3}).
double newey_west_variance(const std::vector<double>& x, const std::vector<double>& e,
                           std::size_t m);

std::size_t newey_west_default_lag(std::size_t t_obs);

}  // namespace tslab
