#include "tslab/corrdist.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "tslab/arma.hpp"
#include "tslab/errors.hpp"
#include "tslab/numcore.hpp"
#include "tslab/parallel.hpp"
#include "tslab/rng.hpp"

namespace tslab {

namespace {

constexpr double kQuadTol = 1e-8;

void check_phis(double phi_i, double phi_j) {
    if (!(std::fabs(phi_i) < 1.0 && std::fabs(phi_j) < 1.0))
        throw InvalidParams("autoregressive coefficients must satisfy |phi| < 1");
}

DensityParams raw_params(std::size_t t_obs, double phi_i, double phi_j, DensityVariant variant) {
    check_phis(phi_i, phi_j);
    if (t_obs < 4) throw InvalidParams("density_params: need T >= 4");
    DensityParams out;
    out.phi_dd = phi_i * phi_j;
    const double one_minus = 1.0 - out.phi_dd;
    const double t_v_real =
        ((static_cast<double>(t_obs) - 1.0) * one_minus * one_minus -
         (1.0 - out.phi_dd * out.phi_dd)) /
        (one_minus * one_minus);
    out.t_v = std::llround(t_v_real);

    const double t_v = static_cast<double>(out.t_v);
    double tail_sum = 0.0;
    const double phi_j2 = phi_j * phi_j;
    for (long long t = 1; t < out.t_v; ++t)
        tail_sum += 1.0 + 2.0 * std::pow(phi_j2, static_cast<double>(t));
    out.xi_v = 3.0 * t_v - t_v * t_v + 2.0 * tail_sum;
    out.k_v = variant == DensityVariant::Theorem ? t_v / out.xi_v : t_v * t_v / out.xi_v;
    return out;
}

// AR(1) pair replication: simulate, regress x_j on x_i, report the pieces the
// proof works with.
struct PairDraw {
    double corr = 0.0;
    double slope = 0.0;
    double v = 0.0;
    double nw = 0.0;
};

PairDraw pair_draw(std::size_t t_obs, double phi_i, double phi_j, std::uint64_t seed) {
    ArmaSpec spec_i, spec_j;
    if (phi_i != 0.0) spec_i.ar = {phi_i};
    if (phi_j != 0.0) spec_j.ar = {phi_j};
    const std::vector<double> xi = simulate_arma(spec_i, t_obs, 500, derive_seed(seed, 1));
    const std::vector<double> xj = simulate_arma(spec_j, t_obs, 500, derive_seed(seed, 2));

    const double mi = mean_of(xi), mj = mean_of(xj);
    double a_ii = 0.0, a_jj = 0.0, a_ij = 0.0;
    for (std::size_t t = 0; t < t_obs; ++t) {
        const double di = xi[t] - mi, dj = xj[t] - mj;
        a_ii += di * di;
        a_jj += dj * dj;
        a_ij += di * dj;
    }
    PairDraw d;
    d.corr = a_ij / std::sqrt(a_ii * a_jj);
    d.slope = a_ij / a_ii;
    d.v = a_jj - a_ij * a_ij / a_ii;
    std::vector<double> resid(t_obs);
    for (std::size_t t = 0; t < t_obs; ++t) resid[t] = xj[t] - d.slope * xi[t];
    d.nw = newey_west_variance(xi, resid, newey_west_default_lag(t_obs));
    return d;
}

std::vector<PairDraw> run_pairs(std::size_t t_obs, double phi_i, double phi_j, std::size_t reps,
                                std::uint64_t seed, unsigned workers) {
    check_phis(phi_i, phi_j);
    std::vector<PairDraw> draws(reps);
    parallel_for(reps, workers, [&](std::size_t k) {
        draws[k] = pair_draw(t_obs, phi_i, phi_j, derive_seed(seed, k));
    });
    return draws;
}

}  // namespace

DensityParams density_params_unchecked(std::size_t t_obs, double phi_i, double phi_j,
                                       DensityVariant variant) {
    return raw_params(t_obs, phi_i, phi_j, variant);
}

DensityParams density_params(std::size_t t_obs, double phi_i, double phi_j,
                             DensityVariant variant) {
    DensityParams p = raw_params(t_obs, phi_i, phi_j, variant);
    if (p.xi_v <= 0.0)
        throw InvalidXi("density_params: xi_v = " + std::to_string(p.xi_v) +
                            " is not a positive variance scale",
                        p.xi_v);
    if (!p.valid()) throw InvalidParams("density_params: bundle failed the evaluation guard");
    return p;
}

DensityParams density_params_from_moments(double v_mean, double v_var, double phi_i,
                                          double phi_j) {
    check_phis(phi_i, phi_j);
    if (!(v_mean > 0.0 && v_var > 0.0))
        throw InvalidParams("density_params_from_moments: moments must be positive");
    const double c_j = 1.0 - phi_j * phi_j;
    DensityParams out;
    out.phi_dd = phi_i * phi_j;
    out.t_v = std::max<long long>(1, std::llround(v_mean * c_j));
    out.xi_v = v_var * c_j * c_j;
    out.k_v = v_mean * v_mean / v_var;
    return out;
}

double corr_density(double r, const DensityParams& params) {
    if (!params.valid()) throw InvalidParams("corr_density: invalid parameter bundle");
    if (r < -1.0 || r > 1.0) throw InvalidParams("corr_density: r outside [-1, 1]");
    const double k = params.k_v;
    const double t_v = static_cast<double>(params.t_v);
    const double pd = params.phi_dd;
    const double one_m_r2 = std::max(1.0 - r * r, 1e-300);
    const double a = 2.0 * t_v * (1.0 - pd * pd);
    const double b = params.xi_v * (1.0 - pd) * (1.0 - pd);
    // Log-space evaluation; k_v can be large.
    const double log_d = std::lgamma(k + 0.5) - std::lgamma(k) - 0.5 * std::log(std::numbers::pi) +
                         std::log1p(-pd) + 0.5 * std::log(params.xi_v) +
                         (k - 1.0) * std::log(one_m_r2) + k * std::log(a) -
                         (k + 0.5) * std::log(one_m_r2 * a + r * r * b);
    return std::exp(log_d);
}

double tail_probability(double tau, const DensityParams& params) {
    if (!params.valid()) throw InvalidParams("tail_probability: invalid parameter bundle");
    if (!(tau >= 0.0 && tau < 1.0)) throw InvalidParams("tail_probability: tau must be in [0,1)");
    if (tau == 0.0) return 1.0;
    using quad = boost::math::quadrature::gauss_kronrod<double, 15>;
    const auto f = [&](double r) { return corr_density(r, params); };
    const double upper = quad::integrate(f, tau, 1.0, 12, kQuadTol);
    const double lower = quad::integrate(f, -1.0, -tau, 12, kQuadTol);
    return std::clamp(upper + lower, 0.0, 1.0);
}

McCorrDensity mc_corr_density(std::size_t t_obs, double phi_i, double phi_j, std::size_t reps,
                              std::uint64_t seed, const std::vector<double>& bin_edges,
                              unsigned workers) {
    if (reps < 100) throw Error("mc_corr_density: need at least 100 replications");
    const std::vector<PairDraw> draws = run_pairs(t_obs, phi_i, phi_j, reps, seed, workers);
    McCorrDensity out;
    out.bin_edges = bin_edges;
    out.samples.resize(reps);
    for (std::size_t k = 0; k < reps; ++k) out.samples[k] = draws[k].corr;
    if (bin_edges.size() >= 2) {
        out.density.assign(bin_edges.size() - 1, 0.0);
        for (double s : out.samples) {
            const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), s);
            if (it == bin_edges.begin() || it == bin_edges.end()) continue;
            const std::size_t bin = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
            out.density[bin] += 1.0;
        }
        for (std::size_t b = 0; b + 1 < bin_edges.size(); ++b) {
            const double width = bin_edges[b + 1] - bin_edges[b];
            out.density[b] /= static_cast<double>(reps) * width;
        }
    }
    return out;
}

McSlopeStudy mc_slope_study(std::size_t t_obs, double phi_i, double phi_j, std::size_t reps,
                            std::uint64_t seed, unsigned workers) {
    const std::vector<PairDraw> draws = run_pairs(t_obs, phi_i, phi_j, reps, seed, workers);
    McSlopeStudy out;
    out.slopes.resize(reps);
    out.v_values.resize(reps);
    out.nw_values.resize(reps);
    for (std::size_t k = 0; k < reps; ++k) {
        out.slopes[k] = draws[k].slope;
        out.v_values[k] = draws[k].v;
        out.nw_values[k] = draws[k].nw;
    }
    return out;
}

DensityParams fit_density_params_mc(std::size_t t_obs, double phi_i, double phi_j,
                                    std::size_t reps, std::uint64_t seed, unsigned workers) {
    const McSlopeStudy study = mc_slope_study(t_obs, phi_i, phi_j, reps, seed, workers);
    return density_params_from_moments(mean_of(study.v_values), variance_of(study.v_values),
                                       phi_i, phi_j);
}

double ols_slope_variance(std::size_t t_obs, double phi_i, double phi_j) {
    check_phis(phi_i, phi_j);
    if (t_obs < 3) throw Error("ols_slope_variance: need T >= 3");
    const double pd = phi_i * phi_j;
    return (1.0 - pd * pd) * (1.0 - phi_i * phi_i) /
           ((static_cast<double>(t_obs) - 1.0) * (1.0 - phi_j * phi_j) * (1.0 - pd) * (1.0 - pd));
}

std::size_t newey_west_default_lag(std::size_t t_obs) {
    return static_cast<std::size_t>(std::floor(0.75 * std::cbrt(static_cast<double>(t_obs))));
}

double newey_west_variance(const std::vector<double>& x, const std::vector<double>& e,
                           std::size_t m) {
    const std::size_t t_len = x.size();
    if (e.size() != t_len) throw Error("newey_west_variance: length mismatch");
    if (t_len < m + 2 || t_len < 3) throw Error("newey_west_variance: series too short");

    const double x_bar = mean_of(x);
    const double e_bar = mean_of(e);
    double sxx = 0.0;
    std::vector<double> v(t_len);
    double svv = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        const double xc = x[t] - x_bar;
        sxx += xc * xc;
        v[t] = xc * (e[t] - e_bar);
        svv += v[t] * v[t];
    }
    if (sxx <= 0.0) throw DegenerateDenominator("newey_west_variance: constant regressor");
    // The sandwich numerator is the same sum as svv, so a zero here makes the
    // whole estimate zero with no autocorrelation correction to apply.
    if (svv <= 0.0) return 0.0;

    double correction = 1.0;
    for (std::size_t j = 1; j + 1 <= m; ++j) {
        double acc = 0.0;
        for (std::size_t t = j; t < t_len; ++t) acc += v[t] * v[t - j];
        const double rho_j = acc / svv;
        correction += 2.0 * (static_cast<double>(m - j) / static_cast<double>(m)) * rho_j;
    }
    const double t_dbl = static_cast<double>(t_len);
    const double meat = svv / (t_dbl - 2.0);
    const double bread = sxx / t_dbl;
    return (1.0 / t_dbl) * meat / (bread * bread) * correction;
}

}  // namespace tslab
