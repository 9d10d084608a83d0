#include "tslab/simlab.hpp"

#include <algorithm>
#include <cmath>

#include "tslab/errors.hpp"
#include "tslab/numcore.hpp"
#include "tslab/parallel.hpp"
#include "tslab/rng.hpp"

namespace tslab {

namespace {

constexpr std::size_t kBurnin = 500;
constexpr std::size_t kPresampleLength = 100000;
constexpr std::uint64_t kCalibrationSeed = 0x5ca1ab1eULL;

// Stationary variance multiplier of an AR(2) with unit innovation variance.
double ar2_variance(double phi1, double phi2) {
    return (1.0 - phi2) / ((1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1));
}

// Per-predictor recursion coefficients for the general AR/ARMA setting:
// groups 1-4, 5-7, 8-10, and 11..n.
struct GroupSpec {
    double ar1 = 0.0, ar2 = 0.0, ma1 = 0.0;
};

GroupSpec group_spec(std::size_t i) {
    if (i < 4) return {0.8, 0.0, 0.0};
    if (i < 7) return {0.6, 0.3, 0.0};
    if (i < 10) return {0.5, 0.4, 0.3};
    return {0.7, 0.0, 0.4};
}

// Streams the x-process (and factor, where present) one step at a time.
class DgpSimulator {
  public:
    DgpSimulator(const DgpConfig& cfg, double sigma_omega, std::uint64_t seed)
        : cfg_(cfg),
          rng_(seed),
          chol_(cholesky(toeplitz_corr(cfg.effective_rho(), cfg.n))),
          omega_sd_(std::sqrt(sigma_omega)),
          x_prev_(cfg.n, 0.0),
          x_prev2_(cfg.n, 0.0),
          u_prev_(cfg.n, 0.0),
          z_prev_(cfg.n, 0.0),
          z_prev2_(cfg.n, 0.0) {}

    // Advances both the predictor block and the error process by one step.
    void step(std::vector<double>& x_out, double& eps_out) {
        std::vector<double> g(cfg_.n);
        for (double& v : g) v = rng_.normal();
        const std::vector<double> u = chol_.mul(g);

        switch (cfg_.kind) {
            case DgpKind::A: {
                for (std::size_t i = 0; i < cfg_.n; ++i)
                    x_out[i] = cfg_.phi * x_prev_[i] + u[i];
                break;
            }
            case DgpKind::B: {
                const double delta = rng_.normal();
                f_ = cfg_.phi * f_ + delta;
                for (std::size_t i = 0; i < cfg_.n; ++i) {
                    const double z = cfg_.phi * z_prev_[i] + u[i];
                    z_prev2_[i] = z_prev_[i];
                    z_prev_[i] = z;
                    x_out[i] = f_ + z;
                }
                break;
            }
            case DgpKind::C: {
                for (std::size_t i = 0; i < cfg_.n; ++i) {
                    const GroupSpec s = group_spec(i);
                    x_out[i] = s.ar1 * x_prev_[i] + s.ar2 * x_prev2_[i] + u[i] +
                               s.ma1 * u_prev_[i];
                }
                break;
            }
            case DgpKind::D: {
                const double delta = rng_.normal();
                f_ = 0.9 * f_ + delta;
                for (std::size_t i = 0; i < cfg_.n; ++i) {
                    const GroupSpec s = group_spec(i);
                    const double z =
                        s.ar1 * z_prev_[i] + s.ar2 * z_prev2_[i] + u[i] + s.ma1 * u_prev_[i];
                    z_prev2_[i] = z_prev_[i];
                    z_prev_[i] = z;
                    x_out[i] = f_ + z;
                }
                break;
            }
        }
        x_prev2_ = x_prev_;
        x_prev_ = x_out;
        u_prev_ = u;

        const double omega = omega_sd_ * rng_.normal();
        double eps;
        if (cfg_.kind == DgpKind::A || cfg_.kind == DgpKind::B)
            eps = cfg_.phi * eps_prev_ + omega;
        else
            eps = 0.7 * eps_prev_ + 0.2 * eps_prev2_ + omega;
        eps_prev2_ = eps_prev_;
        eps_prev_ = eps;
        eps_out = eps;
    }

  private:
    DgpConfig cfg_;
    Rng rng_;
    Matrix chol_;
    double omega_sd_;
    std::vector<double> x_prev_, x_prev2_, u_prev_;
    std::vector<double> z_prev_, z_prev2_;
    double f_ = 0.0;
    double eps_prev_ = 0.0, eps_prev2_ = 0.0;
};

void validate(const DgpConfig& cfg) {
    if (cfg.n < 1 || cfg.t < 20) throw ConfigError("gen_dgp: need n >= 1 and T >= 20");
    if (cfg.s > cfg.n) throw ConfigError("gen_dgp: s exceeds n");
    if ((cfg.kind == DgpKind::A || cfg.kind == DgpKind::B) && !(std::fabs(cfg.phi) < 1.0))
        throw ConfigError("gen_dgp: |phi| must be < 1");
    if (!(cfg.snr > 0.0)) throw ConfigError("gen_dgp: snr must be > 0");
    if (!(std::fabs(cfg.effective_rho()) < 1.0)) throw ConfigError("gen_dgp: |rho| must be < 1");
}

}  // namespace

DgpKind dgp_from_name(const std::string& name) {
    if (name == "A" || name == "a") return DgpKind::A;
    if (name == "B" || name == "b") return DgpKind::B;
    if (name == "C" || name == "c") return DgpKind::C;
    if (name == "D" || name == "d") return DgpKind::D;
    throw ConfigError("unknown DGP kind: " + name);
}

std::string dgp_name(DgpKind k) {
    switch (k) {
        case DgpKind::A: return "A";
        case DgpKind::B: return "B";
        case DgpKind::C: return "C";
        case DgpKind::D: return "D";
    }
    return "?";
}

double calibrate_sigma_omega(const DgpConfig& config) {
    validate(config);
    double var_signal;
    if (config.kind == DgpKind::A) {
        // Predictors and error share the AR(1) variance multiplier
        // 1/(1 - phi^2), so a per-predictor noise ratio of `snr` pins the
        // error innovation variance at 1/snr for any phi.
        return 1.0 / config.snr;
    } else {
        DgpConfig pre = config;
        pre.sigma_omega = 1.0;  // errors unused here
        DgpSimulator sim(pre, 1.0, kCalibrationSeed);
        std::vector<double> x(config.n);
        double eps = 0.0;
        std::vector<double> signal(kPresampleLength);
        for (std::size_t t = 0; t < kBurnin; ++t) sim.step(x, eps);
        for (std::size_t t = 0; t < kPresampleLength; ++t) {
            sim.step(x, eps);
            double s = 0.0;
            for (std::size_t i = 0; i < config.s; ++i) s += x[i];
            signal[t] = s;
        }
        var_signal = variance_of(signal);
    }
    const double var_eps = var_signal / config.snr;
    if (config.kind == DgpKind::A || config.kind == DgpKind::B)
        return var_eps * (1.0 - config.phi * config.phi);
    return var_eps / ar2_variance(0.7, 0.2);
}

GenData gen_dgp(const DgpConfig& config) {
    validate(config);
    const double sigma_omega =
        config.sigma_omega > 0.0 ? config.sigma_omega : calibrate_sigma_omega(config);

    GenData out;
    out.x = Matrix(config.n, config.t + 1);
    out.y.resize(config.t);
    out.eps.resize(config.t + 1);
    out.alpha_star.assign(config.n, 0.0);
    for (std::size_t i = 0; i < config.s; ++i) out.alpha_star[i] = 1.0;

    DgpSimulator sim(config, sigma_omega, config.seed);
    std::vector<double> x(config.n);
    double eps = 0.0;
    for (std::size_t t = 0; t < kBurnin; ++t) sim.step(x, eps);
    for (std::size_t t = 0; t <= config.t; ++t) {
        sim.step(x, eps);
        for (std::size_t i = 0; i < config.n; ++i) out.x(i, t) = x[i];
        // y associated with column t uses the previous column's predictors;
        // the epsilon drawn here is the one entering that response.
        out.eps[t] = eps;
    }
    // y[t] = alpha' x_col(t) + eps[t] pairs response t with design column t.
    for (std::size_t t = 0; t < config.t; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < config.s; ++i) s += out.x(i, t);
        out.y[t] = s + out.eps[t];
    }
    double s_next = 0.0;
    for (std::size_t i = 0; i < config.s; ++i) s_next += out.x(i, config.t);
    out.y_next = s_next + out.eps[config.t];
    return out;
}

MetricRow compute_metrics(const std::vector<double>& alpha_hat,
                          const std::vector<double>& alpha_star,
                          const std::vector<std::size_t>& selected, std::size_t denom,
                          double fcast, double y_true) {
    if (alpha_hat.size() != alpha_star.size())
        throw Error("compute_metrics: coefficient length mismatch");
    MetricRow row;
    double sq = 0.0;
    std::size_t s = 0;
    for (std::size_t i = 0; i < alpha_hat.size(); ++i) {
        const double d = alpha_hat[i] - alpha_star[i];
        sq += d * d;
        if (alpha_star[i] != 0.0) ++s;
    }
    row.coer = std::sqrt(sq);
    std::size_t tp = 0, fp = 0;
    for (std::size_t idx : selected) {
        if (idx < alpha_star.size() && alpha_star[idx] != 0.0)
            ++tp;
        else
            ++fp;
    }
    if (denom < s) throw Error("compute_metrics: denominator below the relevant count");
    row.tp_pct = s == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(s);
    row.fp_pct = denom == s
                     ? 0.0
                     : 100.0 * static_cast<double>(fp) / static_cast<double>(denom - s);
    row.sq_err = (fcast - y_true) * (fcast - y_true);
    row.n_selected = selected.size();
    return row;
}

std::vector<EstimatorConfig> default_sim_methods(DgpKind kind, const std::vector<Method>& which) {
    const bool general = kind == DgpKind::C || kind == DgpKind::D;
    std::vector<EstimatorConfig> out;
    for (Method m : which) {
        EstimatorConfig cfg;
        cfg.method = m;
        switch (m) {
            case Method::PlainLasso:
                break;
            case Method::LassoY:
            case Method::FarmSelect:
            case Method::ArmarLasso:
                cfg.y_lags = general ? std::vector<std::size_t>{1, 2, 3}
                                     : std::vector<std::size_t>{1};
                break;
            case Method::GlsLasso:
                cfg.gls_ar_cap = general ? 2 : 1;
                break;
            case Method::ArdlLasso:
                cfg.x_extra_lags = general ? 2 : 1;
                cfg.y_lags = general ? std::vector<std::size_t>{1, 2}
                                     : std::vector<std::size_t>{1};
                break;
        }
        if (m == Method::ArmarLasso) {
            cfg.max_p = general ? 2 : 1;
            cfg.max_q = general ? 2 : 0;
        }
        if (m == Method::FarmSelect) cfg.y_lags.clear();  // selection on residuals alone
        out.push_back(cfg);
    }
    return out;
}

SimReport run_monte_carlo(const DgpConfig& config, const std::vector<EstimatorConfig>& methods,
                          std::size_t reps, unsigned workers) {
    if (reps < 1) throw ConfigError("run_monte_carlo: need reps >= 1");
    if (methods.empty()) throw ConfigError("run_monte_carlo: no methods given");

    DgpConfig cfg = config;
    if (cfg.sigma_omega <= 0.0) cfg.sigma_omega = calibrate_sigma_omega(cfg);

    std::size_t first = 0;
    for (const EstimatorConfig& m : methods) first = std::max(first, required_burn(m));

    const std::size_t n_methods = methods.size();
    std::vector<std::vector<MetricRow>> rows(n_methods,
                                             std::vector<MetricRow>(reps));
    std::vector<char> ok(reps, 0);

    parallel_for(reps, workers, [&](std::size_t k) {
        DgpConfig rep_cfg = cfg;
        rep_cfg.seed = derive_seed(config.seed, k);
        try {
            const GenData data = gen_dgp(rep_cfg);
            Matrix x_fit(cfg.n, cfg.t);
            for (std::size_t i = 0; i < cfg.n; ++i)
                for (std::size_t t = 0; t < cfg.t; ++t) x_fit(i, t) = data.x(i, t);
            std::vector<double> x_next(cfg.n);
            for (std::size_t i = 0; i < cfg.n; ++i) x_next[i] = data.x(i, cfg.t);

            for (std::size_t m = 0; m < n_methods; ++m) {
                const FitResult fit =
                    fit_estimator(methods[m], x_fit, data.y, data.y, first);
                const double fcast =
                    forecast_estimator(fit, x_fit, data.y, data.y, x_next);
                MetricRow row = compute_metrics(fit.alpha_hat, data.alpha_star, fit.selected,
                                                fit.fp_denominator, fcast, data.y_next);
                row.min_eigen = fit.min_eigen;
                rows[m][k] = row;
            }
            ok[k] = 1;
        } catch (const Error&) {
            ok[k] = 0;  // recorded and excluded below
        }
    });

    SimReport report;
    report.config = cfg;
    report.reps_requested = reps;
    report.baseline = methods[0].method;
    for (const EstimatorConfig& m : methods)
        if (m.method == Method::PlainLasso) report.baseline = Method::PlainLasso;

    std::size_t used = 0;
    for (std::size_t k = 0; k < reps; ++k)
        if (ok[k]) ++used;
    report.reps_used = used;
    report.failures = reps - used;
    if (report.failures * 10 > reps)
        throw Error("run_monte_carlo: more than 10% of replications failed");

    std::vector<MethodAggregate> agg(n_methods);
    double base_coer = 0.0, base_rmsfe = 0.0;
    for (std::size_t m = 0; m < n_methods; ++m) {
        MethodAggregate a;
        a.method = methods[m].method;
        double coer = 0.0, sq = 0.0, tp = 0.0, fp = 0.0, me = 0.0, sel = 0.0;
        for (std::size_t k = 0; k < reps; ++k) {
            if (!ok[k]) continue;
            const MetricRow& r = rows[m][k];
            coer += r.coer;
            sq += r.sq_err;
            tp += r.tp_pct;
            fp += r.fp_pct;
            me += r.min_eigen;
            sel += static_cast<double>(r.n_selected);
        }
        const double d = static_cast<double>(used);
        a.coer_mean = coer / d;
        a.rmsfe = std::sqrt(sq / d);
        a.tp_pct = tp / d;
        a.fp_pct = fp / d;
        a.min_eigen_mean = me / d;
        a.avg_selected = sel / d;
        if (a.method == report.baseline) {
            base_coer = a.coer_mean;
            base_rmsfe = a.rmsfe;
        }
        agg[m] = a;
    }
    for (MethodAggregate& a : agg) {
        a.coer_rel = base_coer > 0.0 ? a.coer_mean / base_coer : 1.0;
        a.rmsfe_rel = base_rmsfe > 0.0 ? a.rmsfe / base_rmsfe : 1.0;
        if (a.method == report.baseline) {
            a.coer_rel = 1.0;
            a.rmsfe_rel = 1.0;
        }
    }
    report.methods = std::move(agg);
    report.raw = std::move(rows);
    report.rep_ok = std::vector<char>(ok.begin(), ok.end());
    return report;
}

}  // namespace tslab
