// Acceptance suite: end-to-end checks of the published quantitative targets
// at desk scale. Each criterion prints one PASS/FAIL line; the binary exits
// nonzero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tslab/cli.hpp"
#include "tslab/corrdist.hpp"
#include "tslab/errors.hpp"
#include "tslab/estimators.hpp"
#include "tslab/forecastlab.hpp"
#include "tslab/lasso.hpp"
#include "tslab/numcore.hpp"
#include "tslab/parallel.hpp"
#include "tslab/rng.hpp"
#include "tslab/simlab.hpp"

using namespace tslab;

namespace {

constexpr std::uint64_t kSeed = 20250810;
unsigned workers() { return default_workers(); }

struct Check {
    std::string label;
    bool pass = false;
    std::string detail;
};

std::vector<Check> g_checks;

void record(const std::string& label, bool pass, const std::string& detail) {
    g_checks.push_back({label, pass, detail});
    std::printf("%s  %s  (%s)\n", pass ? "PASS" : "FAIL", label.c_str(), detail.c_str());
    std::fflush(stdout);
}

bool within(double value, double center, double tol) {
    return value >= center - tol && value <= center + tol;
}

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

const MethodAggregate& find_method(const SimReport& rep, Method m) {
    for (const MethodAggregate& a : rep.methods)
        if (a.method == m) return a;
    throw Error("method missing from report");
}

// --- criterion 1: common-AR(1) scenario table, n=50, T=150 -----------------

void criterion_table1() {
    DgpConfig cfg;
    cfg.kind = DgpKind::A;
    cfg.n = 50;
    cfg.t = 150;
    cfg.snr = 1.0;
    const auto methods =
        default_sim_methods(cfg.kind, {Method::PlainLasso, Method::ArmarLasso});

    cfg.phi = 0.3;
    cfg.seed = derive_seed(kSeed, 1);
    const SimReport low = run_monte_carlo(cfg, methods, 200, workers());
    cfg.phi = 0.9;
    cfg.seed = derive_seed(kSeed, 2);
    const SimReport high = run_monte_carlo(cfg, methods, 200, workers());

    const MethodAggregate& ar_low = find_method(low, Method::ArmarLasso);
    const MethodAggregate& ar_high = find_method(high, Method::ArmarLasso);
    const MethodAggregate& las_high = find_method(high, Method::PlainLasso);

    record("1a: ARMAr relative CoEr at phi=0.3 within 0.96 +/- 0.08",
           within(ar_low.coer_rel, 0.96, 0.08), "coer_rel=" + fmt2(ar_low.coer_rel));
    record("1b: ARMAr relative CoEr at phi=0.9 within 0.45 +/- 0.08",
           within(ar_high.coer_rel, 0.45, 0.08), "coer_rel=" + fmt2(ar_high.coer_rel));
    const double tp_min = std::min(ar_low.tp_pct, ar_high.tp_pct);
    record("1c: ARMAr %TP >= 99", tp_min >= 99.0, "min tp=" + fmt2(tp_min));
    const double fp_max = std::max(ar_low.fp_pct, ar_high.fp_pct);
    record("1d: ARMAr %FP <= 10", fp_max <= 10.0, "max fp=" + fmt2(fp_max));
    record("1e: LAS %FP at phi=0.9 within 39.78 +/- 10",
           within(las_high.fp_pct, 39.78, 10.0), "fp=" + fmt2(las_high.fp_pct));
}

// --- criterion 2: general AR/ARMA scenario, n=50, SNR=10 --------------------

void criterion_table2() {
    DgpConfig cfg;
    cfg.kind = DgpKind::C;
    cfg.n = 50;
    cfg.t = 150;
    cfg.snr = 10.0;
    cfg.seed = derive_seed(kSeed, 3);
    const auto methods =
        default_sim_methods(cfg.kind, {Method::PlainLasso, Method::ArmarLasso});
    const SimReport rep = run_monte_carlo(cfg, methods, 200, workers());
    const MethodAggregate& armar = find_method(rep, Method::ArmarLasso);
    record("2a: ARMAr relative RMSFE within 0.66 +/- 0.08",
           within(armar.rmsfe_rel, 0.66, 0.08), "rmsfe_rel=" + fmt2(armar.rmsfe_rel));
    record("2b: ARMAr relative CoEr within 0.70 +/- 0.10",
           within(armar.coer_rel, 0.70, 0.10), "coer_rel=" + fmt2(armar.coer_rel));
}

// --- criterion 3: large-T selection consistency ------------------------------

void criterion_large_t() {
    DgpConfig cfg;
    cfg.kind = DgpKind::A;
    cfg.n = 50;
    cfg.t = 1500;
    cfg.snr = 10.0;
    cfg.phi = 0.9;
    cfg.seed = derive_seed(kSeed, 4);
    const auto methods =
        default_sim_methods(cfg.kind, {Method::PlainLasso, Method::ArmarLasso});
    const SimReport rep = run_monte_carlo(cfg, methods, 100, workers());
    const MethodAggregate& armar = find_method(rep, Method::ArmarLasso);
    record("3a: ARMAr %TP = 100 at T=1500", armar.tp_pct == 100.0,
           "tp=" + fmt2(armar.tp_pct));
    record("3b: ARMAr %FP <= 1 at T=1500", armar.fp_pct <= 1.0, "fp=" + fmt2(armar.fp_pct));
}

// --- criterion 4: spurious-correlation toy experiment ------------------------

void criterion_toy() {
    const std::vector<double> phis{0.0, 0.3, 0.6, 0.9, 0.95};
    const std::size_t reps = 5000, n = 10, t_len = 50;
    std::vector<double> mean_max(phis.size(), 0.0), mean_eig(phis.size(), 0.0);
    bool inequality_ok = true;

    for (std::size_t pi = 0; pi < phis.size(); ++pi) {
        std::vector<double> maxs(reps), eigs(reps);
        std::vector<char> ok(reps, 1);
        parallel_for(reps, workers(), [&](std::size_t k) {
            Rng rng(derive_seed(derive_seed(kSeed, 5 + pi), k));
            Matrix x(n, t_len);
            for (std::size_t i = 0; i < n; ++i) {
                double prev = 0.0;
                for (int b = 0; b < 300; ++b) prev = phis[pi] * prev + rng.normal();
                for (std::size_t s = 0; s < t_len; ++s) {
                    prev = phis[pi] * prev + rng.normal();
                    x(i, s) = prev;
                }
            }
            const CorrStats st = corr_stats(x);
            maxs[k] = st.max_offdiag_abs;
            eigs[k] = st.min_eigenvalue;
            if (st.min_eigenvalue > 1.0 - st.max_offdiag_abs + 1e-10) ok[k] = 0;
        });
        for (std::size_t k = 0; k < reps; ++k) {
            mean_max[pi] += maxs[k];
            mean_eig[pi] += eigs[k];
            if (!ok[k]) inequality_ok = false;
        }
        mean_max[pi] /= static_cast<double>(reps);
        mean_eig[pi] /= static_cast<double>(reps);
    }
    bool increasing = true, decreasing = true;
    for (std::size_t pi = 1; pi < phis.size(); ++pi) {
        if (mean_max[pi] <= mean_max[pi - 1]) increasing = false;
        if (mean_eig[pi] >= mean_eig[pi - 1]) decreasing = false;
    }
    std::ostringstream det;
    det << "max|c|: ";
    for (double v : mean_max) det << fmt2(v) << ' ';
    det << " min_eig: ";
    for (double v : mean_eig) det << fmt2(v) << ' ';
    record("4a: mean max|c_ij| strictly increasing in phi", increasing, det.str());
    record("4b: mean min eigenvalue strictly decreasing in phi", decreasing, det.str());
    record("4c: eigenvalue bound holds on every replication", inequality_ok,
           inequality_ok ? "no violation in 25000 panels" : "violated");
}

// --- criterion 5: correlation-density properties ------------------------------

double simpson_mass(const DensityParams& p) {
    const std::size_t g = 20001;
    double acc = 0.0;
    double prev_r = -1.0, prev_f = corr_density(-1.0, p);
    for (std::size_t i = 1; i < g; ++i) {
        const double r = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(g - 1);
        const double f = corr_density(r, p);
        const double m = corr_density(0.5 * (prev_r + r), p);
        acc += (r - prev_r) / 6.0 * (prev_f + 4.0 * m + f);
        prev_r = r;
        prev_f = f;
    }
    return acc;
}

void criterion_density() {
    // the literal scale parameter fails its positivity guard at small |phi|
    bool guard_fired = false;
    try {
        density_params(100, 0.0, 0.0, DensityVariant::Theorem);
    } catch (const InvalidXi&) {
        guard_fired = true;
    }
    bool guard_fired_mid = false;
    try {
        density_params(250, 0.6, 0.6, DensityVariant::Lemma);
    } catch (const InvalidXi&) {
        guard_fired_mid = true;
    }
    record("5a: positivity guard fires on the closed-form scale",
           guard_fired && guard_fired_mid, "xi_v <= 0 detected, no density fabricated");

    bool normalized = true, even = true, monotone = true;
    std::string detail;
    for (double phi : {0.3, 0.6, 0.9}) {
        const DensityParams p =
            fit_density_params_mc(250, phi, phi, 3000, derive_seed(kSeed, 20), workers());
        if (!p.valid()) {
            normalized = false;
            continue;
        }
        const double mass = simpson_mass(p);
        if (std::fabs(mass - 1.0) > 1e-6) {
            normalized = false;
            detail += "mass(" + fmt2(phi) + ")=" + fmt2(mass) + " ";
        }
        for (double r : {0.1, 0.35, 0.8})
            if (std::fabs(corr_density(r, p) - corr_density(-r, p)) > 1e-12) even = false;
        double prev = 1.0 + 1e-12;
        for (double tau : {0.0, 0.1, 0.25, 0.4, 0.6, 0.8}) {
            const double tail = tail_probability(tau, p);
            if (tail > prev + 1e-12) monotone = false;
            prev = tail;
        }
    }
    record("5b: valid densities integrate to one within 1e-6", normalized,
           detail.empty() ? "phi in {0.3, 0.6, 0.9}" : detail);
    record("5c: evenness and tail monotonicity", even && monotone, "D(r)=D(-r), tail decreasing");

    const std::size_t reps = 5000;
    McCorrDensity mc =
        mc_corr_density(250, 0.6, 0.6, reps, derive_seed(kSeed, 21), {}, workers());
    const DensityParams fitted =
        fit_density_params_mc(250, 0.6, 0.6, reps, derive_seed(kSeed, 21), workers());
    std::sort(mc.samples.begin(), mc.samples.end());
    // Kolmogorov distance between the fitted density and the raw draws
    const std::size_t g = 4001;
    std::vector<double> grid(g), cdf(g, 0.0);
    for (std::size_t i = 0; i < g; ++i)
        grid[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(g - 1);
    for (std::size_t i = 1; i < g; ++i) {
        const double fa = corr_density(grid[i - 1], fitted);
        const double fb = corr_density(grid[i], fitted);
        const double fm = corr_density(0.5 * (grid[i - 1] + grid[i]), fitted);
        cdf[i] = cdf[i - 1] + (grid[i] - grid[i - 1]) / 6.0 * (fa + 4.0 * fm + fb);
    }
    const double total = cdf.back();
    double ks = 0.0;
    for (std::size_t k = 0; k < mc.samples.size(); ++k) {
        const auto it = std::lower_bound(grid.begin(), grid.end(), mc.samples[k]);
        const std::size_t gi = std::min<std::size_t>(
            static_cast<std::size_t>(it - grid.begin()), g - 1);
        const double f = cdf[gi] / total;
        const double n_dbl = static_cast<double>(mc.samples.size());
        ks = std::max(ks, std::fabs(static_cast<double>(k + 1) / n_dbl - f));
        ks = std::max(ks, std::fabs(static_cast<double>(k) / n_dbl - f));
    }
    record("5d: Kolmogorov distance to the Monte Carlo sample <= 0.05", ks <= 0.05,
           "ks=" + fmt2(ks));
}

// --- criterion 6: solver correctness -----------------------------------------

void criterion_solver() {
    bool kkt_ok = true;
    double worst_kkt = 0.0;
    for (std::size_t c = 0; c < 200; ++c) {
        Rng rng(derive_seed(kSeed, 30 + c));
        const std::size_t t = 40 + c % 120, p = 5 + c % 40;
        LassoProblem prob;
        prob.design = Matrix(t, p);
        prob.response.resize(t);
        for (std::size_t r = 0; r < t; ++r)
            for (std::size_t j = 0; j < p; ++j) prob.design(r, j) = rng.normal();
        for (std::size_t r = 0; r < t; ++r) {
            double y = rng.normal();
            for (std::size_t j = 0; j < std::min<std::size_t>(3, p); ++j)
                y += 1.5 * prob.design(r, j);
            prob.response[r] = y;
        }
        const double lambda = (0.1 + 0.8 * rng.uniform()) * lambda_max(prob);
        const LassoFit fit = fit_lasso(prob, lambda);
        if (!fit.converged) {
            kkt_ok = false;
            continue;
        }
        std::vector<double> resid(t);
        for (std::size_t r = 0; r < t; ++r) {
            double yhat = fit.intercept;
            for (std::size_t j = 0; j < p; ++j) yhat += fit.coefficients[j] * prob.design(r, j);
            resid[r] = prob.response[r] - yhat;
        }
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<double> col(t);
            for (std::size_t r = 0; r < t; ++r) col[r] = prob.design(r, j);
            const StandardizeResult s = standardize(col);
            double grad = 0.0;
            for (std::size_t r = 0; r < t; ++r) grad += s.values[r] * resid[r];
            grad /= static_cast<double>(t);
            const double viol = fit.coefficients[j] != 0.0
                                    ? std::fabs(std::fabs(grad) - lambda)
                                    : std::max(0.0, std::fabs(grad) - lambda);
            worst_kkt = std::max(worst_kkt, viol);
        }
    }
    record("6a: KKT conditions within 1e-5 on 200 random problems",
           kkt_ok && worst_kkt < 1e-5, "worst=" + fmt2(worst_kkt * 1e6) + "e-6");

    // orthonormal closed form
    Rng rng(derive_seed(kSeed, 31));
    const std::size_t t = 96, p = 8, block = t / p;
    LassoProblem prob;
    prob.design = Matrix(t, p);
    prob.standardize = false;
    const double scale = std::sqrt(static_cast<double>(t) / static_cast<double>(block));
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t r = j * block; r < (j + 1) * block; ++r)
            prob.design(r, j) = scale * ((r % 2 == 0) ? 1.0 : -1.0);
    prob.response.resize(t);
    for (std::size_t r = 0; r < t; ++r) prob.response[r] = rng.normal();
    const double ybar = mean_of(prob.response);
    for (double& v : prob.response) v -= ybar;
    const double lambda = 0.07;
    const LassoFit orth = fit_lasso(prob, lambda);
    double worst_orth = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double dot = 0.0;
        for (std::size_t r = 0; r < t; ++r) dot += prob.design(r, j) * prob.response[r];
        worst_orth = std::max(
            worst_orth, std::fabs(orth.coefficients[j] - soft_threshold(dot / t, lambda)));
    }
    record("6b: orthonormal design matches the soft-threshold closed form within 1e-8",
           worst_orth < 1e-8, "worst=" + fmt2(worst_orth * 1e9) + "e-9");

    // lambda = 0 equals least squares
    LassoProblem ls;
    ls.design = Matrix(80, 6);
    ls.response.resize(80);
    Rng rng2(derive_seed(kSeed, 32));
    for (std::size_t r = 0; r < 80; ++r) {
        for (std::size_t j = 0; j < 6; ++j) ls.design(r, j) = rng2.normal();
        ls.response[r] = 2.0 * ls.design(r, 0) - ls.design(r, 3) + 0.5 * rng2.normal();
    }
    const LassoFit zero = fit_lasso(ls, 0.0);
    // normal-equations oracle with intercept
    Matrix design(80, 7);
    for (std::size_t r = 0; r < 80; ++r) {
        design(r, 0) = 1.0;
        for (std::size_t j = 0; j < 6; ++j) design(r, j + 1) = ls.design(r, j);
    }
    const std::vector<double> beta = ols(design, ls.response);
    double worst_ls = std::fabs(zero.intercept - beta[0]);
    for (std::size_t j = 0; j < 6; ++j)
        worst_ls = std::max(worst_ls, std::fabs(zero.coefficients[j] - beta[j + 1]));
    record("6c: lambda = 0 equals least squares within 1e-6", worst_ls < 1e-6,
           "worst=" + fmt2(worst_ls * 1e7) + "e-7");
}

// --- criterion 7: slope variance against the HAC comparator -------------------

void criterion_slope_variance() {
    const McSlopeStudy study =
        mc_slope_study(100, 0.9, 0.9, 5000, derive_seed(kSeed, 40), workers());
    double mean_slope = 0.0;
    for (double b : study.slopes) mean_slope += b;
    mean_slope /= static_cast<double>(study.slopes.size());
    double var_mc = 0.0;
    for (double b : study.slopes) var_mc += (b - mean_slope) * (b - mean_slope);
    var_mc /= static_cast<double>(study.slopes.size() - 1);
    const double closed = ols_slope_variance(100, 0.9, 0.9);
    record("7a: Monte Carlo slope variance within 15% of the closed form",
           std::fabs(var_mc / closed - 1.0) <= 0.15,
           "mc=" + fmt2(var_mc) + " closed=" + fmt2(closed));

    double nw_mean = 0.0;
    for (double v : study.nw_values) nw_mean += v;
    nw_mean /= static_cast<double>(study.nw_values.size());
    record("7b: HAC estimate underestimates the slope variance on average",
           nw_mean < closed, "nw=" + fmt2(nw_mean) + " closed=" + fmt2(closed));
}

// --- criterion 8: DM test size ------------------------------------------------

void criterion_dm_size() {
    const std::size_t sims = 1000, n = 120;
    std::vector<char> reject(sims, 0);
    parallel_for(sims, workers(), [&](std::size_t k) {
        Rng rng(derive_seed(kSeed, 50 + k));
        std::vector<double> a(n), b(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double ea = rng.normal(), eb = rng.normal();
            a[t] = ea * ea;
            b[t] = eb * eb;
        }
        if (diebold_mariano(a, b, 1).p_one_sided < 0.05) reject[k] = 1;
    });
    double rate = 0.0;
    for (char r : reject) rate += r;
    rate /= static_cast<double>(sims);
    record("8: DM empirical size in [3%, 7%] at 5% nominal", rate >= 0.03 && rate <= 0.07,
           "rate=" + fmt2(100.0 * rate) + "%");
}

// --- criterion 9: CLI determinism ----------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    namespace fs = std::filesystem;
    bool identical = true;
    std::string detail = "artifacts byte-identical";

    auto run_pair = [&](cli::RunConfig cfg) {
        fs::create_directories("acc_det_a");
        fs::create_directories("acc_det_b");
        cfg.output_dir = "acc_det_a";
        const auto first = cli::run(cfg);
        cfg.output_dir = "acc_det_b";
        const auto second = cli::run(cfg);
        for (std::size_t i = 0; i + 1 < first.size(); ++i) {  // manifest carries wall time
            if (slurp(first[i]) != slurp(second[i])) {
                identical = false;
                detail = "mismatch in " + first[i];
            }
        }
        fs::remove_all("acc_det_a");
        fs::remove_all("acc_det_b");
    };

    cli::RunConfig mc;
    mc.command = "mc-table";
    mc.seed = kSeed;
    mc.workers = workers();
    mc.params = {{"dgp", "A"},
                 {"n", 20},
                 {"T", 100},
                 {"snr", 1.0},
                 {"phis", nlohmann::json::array({0.3, 0.9})},
                 {"reps", 10},
                 {"methods", nlohmann::json::array({"LAS", "ARMAr-LAS"})}};
    run_pair(mc);

    cli::RunConfig dens;
    dens.command = "density";
    dens.seed = kSeed;
    dens.workers = workers();
    dens.params = {{"T", 250}, {"phi", 0.6}, {"variant", "lemma"}, {"reps", 1000},
                   {"grid_points", 101}};
    run_pair(dens);

    record("9: pipeline reruns are byte-identical", identical, detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite (seed %llu, %u workers)\n",
                static_cast<unsigned long long>(kSeed), workers());
    criterion_table1();
    criterion_table2();
    criterion_large_t();
    criterion_toy();
    criterion_density();
    criterion_solver();
    criterion_slope_variance();
    criterion_dm_size();
    criterion_determinism();

    std::size_t failed = 0;
    for (const Check& c : g_checks)
        if (!c.pass) ++failed;
    std::printf("%zu/%zu acceptance checks passed\n", g_checks.size() - failed,
                g_checks.size());
    return failed == 0 ? 0 : 1;
}
