#include "tslab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "tslab/corrdist.hpp"
#include "tslab/errors.hpp"
#include "tslab/forecastlab.hpp"
#include "tslab/parallel.hpp"
#include "tslab/rng.hpp"
#include "tslab/simlab.hpp"

namespace tslab::cli {

namespace {

using nlohmann::json;

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("cannot rename " + tmp + " to " + path);
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return "";
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

unsigned effective_workers(const RunConfig& cfg) {
    return cfg.workers == 0 ? default_workers() : cfg.workers;
}

template <typename T>
T param(const json& p, const std::string& key, T fallback) {
    if (!p.contains(key)) return fallback;
    try {
        return p.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("parameter '" + key + "' has the wrong type");
    }
}

std::vector<Method> parse_methods(const json& p) {
    std::vector<Method> out;
    for (const std::string& name : param<std::vector<std::string>>(
             p, "methods", {"LAS", "ARMAr-LAS"}))
        out.push_back(method_from_name(name));
    if (out.empty()) throw ConfigError("empty method list");
    return out;
}

DgpConfig parse_dgp(const json& p, std::uint64_t seed) {
    DgpConfig cfg;
    cfg.kind = dgp_from_name(param<std::string>(p, "dgp", "A"));
    cfg.n = param<std::size_t>(p, "n", 50);
    cfg.t = param<std::size_t>(p, "T", 150);
    cfg.phi = param<double>(p, "phi", 0.9);
    cfg.rho = param<double>(p, "rho", -1.0);
    cfg.snr = param<double>(p, "snr", 1.0);
    cfg.s = param<std::size_t>(p, "s", 10);
    cfg.seed = seed;
    return cfg;
}

json dgp_json(const DgpConfig& cfg) {
    return json{{"dgp", dgp_name(cfg.kind)}, {"n", cfg.n},     {"T", cfg.t},
                {"phi", cfg.phi},            {"rho", cfg.effective_rho()},
                {"snr", cfg.snr},            {"s", cfg.s},     {"seed", cfg.seed},
                {"sigma_omega", cfg.sigma_omega}};
}

struct ArtifactSink {
    const RunConfig& cfg;
    std::vector<std::string> paths;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    std::string out_path(const std::string& name) const { return cfg.output_dir + "/" + name; }

    void add(const std::string& name, const std::string& content) {
        const std::string path = out_path(name);
        atomic_write(path, content);
        paths.push_back(path);
    }

    // Manifest carries everything needed to reproduce the artifacts exactly.
    void finish(const std::string& stem) {
        json manifest;
        manifest["command"] = cfg.command;
        manifest["seed"] = cfg.seed;
        manifest["workers"] = cfg.workers;
        manifest["params"] = cfg.params;
        manifest["config_hash"] = config_hash(
            json{{"command", cfg.command}, {"seed", cfg.seed}, {"params", cfg.params}});
        manifest["version"] = kVersion;
        manifest["outputs"] = paths;
        manifest["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const std::string path = out_path(stem + ".manifest.json");
        atomic_write(path, manifest.dump(2) + "\n");
        paths.push_back(path);
    }
};

// ---- density ---------------------------------------------------------------

std::vector<std::string> run_density(const RunConfig& cfg) {
    const json& p = cfg.params;
    const std::size_t t_obs = param<std::size_t>(p, "T", 250);
    double phi_i = param<double>(p, "phi_i", param<double>(p, "phi", 0.6));
    double phi_j = param<double>(p, "phi_j", param<double>(p, "phi", 0.6));
    const std::string variant_name = param<std::string>(p, "variant", "lemma");
    const DensityVariant variant =
        variant_name == "theorem" ? DensityVariant::Theorem : DensityVariant::Lemma;
    if (variant_name != "theorem" && variant_name != "lemma")
        throw ConfigError("variant must be 'theorem' or 'lemma'");
    const std::size_t reps = param<std::size_t>(p, "reps", 5000);
    const std::size_t grid_points = param<std::size_t>(p, "grid_points", 201);
    if (grid_points < 3) throw ConfigError("grid_points must be >= 3");

    json summary;
    summary["T"] = t_obs;
    summary["phi_i"] = phi_i;
    summary["phi_j"] = phi_j;
    summary["variant"] = variant_name;

    DensityParams closed;
    bool closed_valid = true;
    try {
        closed = density_params(t_obs, phi_i, phi_j, variant);
    } catch (const InvalidXi& e) {
        closed = density_params_unchecked(t_obs, phi_i, phi_j, variant);
        closed_valid = false;
        summary["validity_error"] = e.what();
    }
    summary["closed_form"] = {{"T_v", closed.t_v},
                              {"xi_v", closed.xi_v},
                              {"k_v", closed.k_v},
                              {"phi_dd", closed.phi_dd},
                              {"valid", closed_valid}};

    // Monte Carlo histogram plus the moment-matched bundle as the fallback
    // density whenever the printed scale fails its guard.
    std::vector<double> edges(51);
    for (std::size_t b = 0; b < edges.size(); ++b)
        edges[b] = -1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(edges.size() - 1);
    const McCorrDensity mc =
        mc_corr_density(t_obs, phi_i, phi_j, reps, cfg.seed, edges, effective_workers(cfg));
    const DensityParams fitted =
        fit_density_params_mc(t_obs, phi_i, phi_j, reps, cfg.seed, effective_workers(cfg));
    summary["mc_fitted"] = {{"T_v", fitted.t_v},
                            {"xi_v", fitted.xi_v},
                            {"k_v", fitted.k_v},
                            {"phi_dd", fitted.phi_dd},
                            {"valid", fitted.valid()}};
    json tails;
    for (double tau : {0.1, 0.2, 0.3, 0.5}) {
        json row;
        if (closed_valid) row["closed_form"] = tail_probability(tau, closed);
        row["mc_fitted"] = tail_probability(tau, fitted);
        double hits = 0.0;
        for (double s : mc.samples)
            if (std::fabs(s) >= tau) hits += 1.0;
        row["mc"] = hits / static_cast<double>(mc.samples.size());
        tails[fmt(tau)] = row;
    }
    summary["tail_probability"] = tails;

    std::ostringstream csv;
    csv << "r,closed_form,mc_fitted,mc_histogram\n";
    csv.precision(12);
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double r =
            -1.0 + 2.0 * static_cast<double>(g) / static_cast<double>(grid_points - 1);
        csv << r << ',';
        csv << (closed_valid ? fmt(corr_density(r, closed)) : "") << ',';
        csv << fmt(corr_density(r, fitted)) << ',';
        // histogram bin containing r
        double hist = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
            if (r >= edges[b] && (r < edges[b + 1] || b + 2 == edges.size())) {
                hist = mc.density[b];
                break;
            }
        csv << fmt(hist) << '\n';
    }

    ArtifactSink sink{cfg, {}, std::chrono::steady_clock::now()};
    sink.add("density.csv", csv.str());
    sink.add("density.json", summary.dump(2) + "\n");
    sink.finish("density");
    return sink.paths;
}

// ---- simulate --------------------------------------------------------------

std::vector<std::string> run_simulate(const RunConfig& cfg) {
    const DgpConfig dgp = parse_dgp(cfg.params, cfg.seed);
    const GenData data = gen_dgp(dgp);

    std::ostringstream csv;
    csv.precision(12);
    csv << "t,y";
    for (std::size_t i = 0; i < dgp.n; ++i) csv << ",x" << (i + 1);
    csv << '\n';
    for (std::size_t t = 0; t <= dgp.t; ++t) {
        csv << (t + 1) << ',' << fmt(t < dgp.t ? data.y[t] : data.y_next);
        for (std::size_t i = 0; i < dgp.n; ++i) csv << ',' << data.x(i, t);
        csv << '\n';
    }

    json summary;
    summary["config"] = dgp_json(dgp);
    summary["alpha_star"] = data.alpha_star;
    summary["sigma_omega"] = calibrate_sigma_omega(dgp);

    ArtifactSink sink{cfg, {}, std::chrono::steady_clock::now()};
    sink.add("simulated.csv", csv.str());
    sink.add("simulated.json", summary.dump(2) + "\n");
    sink.finish("simulated");
    return sink.paths;
}

// ---- mc-table --------------------------------------------------------------

std::vector<std::string> run_mc_table(const RunConfig& cfg) {
    const json& p = cfg.params;
    const std::vector<Method> methods = parse_methods(p);
    const std::size_t reps = param<std::size_t>(p, "reps", 200);
    DgpConfig base = parse_dgp(p, cfg.seed);

    std::vector<double> phis;
    if (base.kind == DgpKind::A || base.kind == DgpKind::B)
        phis = param<std::vector<double>>(p, "phis", {base.phi});
    else
        phis = {0.0};  // kinds C/D carry fixed coefficients

    std::ostringstream csv;
    csv << "dgp,n,T,snr,phi,method,metric,value\n";
    csv.precision(10);
    json summary;
    summary["config"] = {{"dgp", dgp_name(base.kind)}, {"n", base.n},   {"T", base.t},
                         {"snr", base.snr},            {"reps", reps},  {"seed", cfg.seed},
                         {"phis", phis}};
    json scenarios = json::array();

    for (std::size_t pi = 0; pi < phis.size(); ++pi) {
        const double phi = phis[pi];
        DgpConfig scenario = base;
        scenario.phi = phi;
        scenario.seed = derive_seed(cfg.seed, pi + 7);
        const std::vector<EstimatorConfig> method_cfgs =
            default_sim_methods(scenario.kind, methods);
        const SimReport report =
            run_monte_carlo(scenario, method_cfgs, reps, effective_workers(cfg));

        json js;
        js["phi"] = phi;
        js["sigma_omega"] = report.config.sigma_omega;
        js["reps_used"] = report.reps_used;
        js["failures"] = report.failures;
        js["baseline"] = method_name(report.baseline);
        json rows = json::array();
        for (const MethodAggregate& a : report.methods) {
            const std::string mname = method_name(a.method);
            auto emit = [&](const std::string& metric, double value) {
                csv << dgp_name(scenario.kind) << ',' << scenario.n << ',' << scenario.t << ','
                    << scenario.snr << ',' << phi << ',' << mname << ',' << metric << ','
                    << fmt(value) << '\n';
            };
            emit("coer_rel", a.coer_rel);
            emit("rmsfe_rel", a.rmsfe_rel);
            emit("tp_pct", a.tp_pct);
            emit("fp_pct", a.fp_pct);
            emit("min_eigen_mean", a.min_eigen_mean);
            emit("avg_selected", a.avg_selected);
            rows.push_back(json{{"method", mname},
                                {"coer_rel", a.coer_rel},
                                {"rmsfe_rel", a.rmsfe_rel},
                                {"coer_mean", a.coer_mean},
                                {"rmsfe", a.rmsfe},
                                {"tp_pct", a.tp_pct},
                                {"fp_pct", a.fp_pct},
                                {"min_eigen_mean", a.min_eigen_mean},
                                {"avg_selected", a.avg_selected}});
        }
        js["methods"] = rows;
        scenarios.push_back(js);
    }
    summary["scenarios"] = scenarios;

    ArtifactSink sink{cfg, {}, std::chrono::steady_clock::now()};
    sink.add("mc_table.csv", csv.str());
    sink.add("mc_table.json", summary.dump(2) + "\n");
    sink.finish("mc_table");
    return sink.paths;
}

// ---- fit / forecast --------------------------------------------------------

EstimatorConfig forecast_method_config(const json& p, Method m, unsigned workers) {
    EstimatorConfig cfg;
    cfg.method = m;
    const std::size_t y_lag_count = param<std::size_t>(p, "y_lag_count", 12);
    for (std::size_t l = 0; l < y_lag_count; ++l) cfg.y_lags.push_back(l);
    cfg.x_extra_lags = param<std::size_t>(p, "ardl_x_lags", 2);
    cfg.max_p = param<std::size_t>(p, "max_p", 12);
    cfg.max_q = param<std::size_t>(p, "max_q", 12);
    cfg.gls_ar_cap = param<std::size_t>(p, "gls_ar_cap", 12);
    cfg.gls_forecast_base = 0;  // the current target value is observed here
    cfg.factor_cap = param<std::size_t>(p, "factor_cap", 8);
    cfg.workers = workers;
    if (m == Method::PlainLasso || m == Method::GlsLasso) cfg.y_lags.clear();
    if (m == Method::FarmSelect && !param<bool>(p, "farm_y_lags", false)) cfg.y_lags.clear();
    return cfg;
}

std::vector<std::string> run_fit(const RunConfig& cfg) {
    const json& p = cfg.params;
    const std::string data_path = param<std::string>(p, "data", "");
    if (data_path.empty()) throw ConfigError("fit: 'data' is required");
    const std::string target = param<std::string>(p, "target", "");
    if (target.empty()) throw ConfigError("fit: 'target' is required");
    const SeriesTable table = read_series_csv(data_path);

    RollingConfig roll;
    roll.target = target;
    roll.horizon = param<std::size_t>(p, "horizon", 12);
    roll.workers = effective_workers(cfg);
    const Method m = method_from_name(param<std::string>(p, "method", "ARMAr-LAS"));
    roll.methods = {forecast_method_config(p, m, roll.workers)};
    roll.single_fit = true;  // longest window, one origin
    roll.ar_benchmark = false;

    RollingOutput out = rolling_forecast(table, roll);
    if (out.records.empty() || out.last_fits.empty())
        throw DataError("fit: no estimable window");
    const ForecastRecord rec = out.records.back();
    const FitResult& fit = out.last_fits.back();

    json summary;
    summary["kind"] = rec.method;
    summary["origin"] = rec.origin_date;
    summary["horizon"] = rec.horizon;
    summary["forecast"] = rec.forecast;
    json sel = json::array();
    for (std::size_t v : rec.selected) sel.push_back(out.predictor_names[v]);
    summary["selected"] = sel;
    json alpha = json::object();
    for (std::size_t v = 0; v < fit.alpha_hat.size(); ++v)
        if (fit.alpha_hat[v] != 0.0) alpha[out.predictor_names[v]] = fit.alpha_hat[v];
    summary["alpha_hat"] = alpha;
    summary["lag_coeffs"] = fit.lag_coeffs;
    summary["diagnostics"] = {{"intercept", fit.intercept},
                              {"lambda", fit.lambda},
                              {"insample_rss", fit.insample_rss},
                              {"min_eigen", fit.min_eigen},
                              {"degraded", fit.degraded},
                              {"n_factors", fit.n_factors},
                              {"fp_denominator", fit.fp_denominator}};

    ArtifactSink sink{cfg, {}, std::chrono::steady_clock::now()};
    sink.add("fit.json", summary.dump(2) + "\n");
    sink.finish("fit");
    return sink.paths;
}

std::vector<std::string> run_forecast(const RunConfig& cfg) {
    const json& p = cfg.params;
    const std::string data_path = param<std::string>(p, "data", "");
    if (data_path.empty()) throw ConfigError("forecast: 'data' is required");
    const std::string target = param<std::string>(p, "target", "");
    if (target.empty()) throw ConfigError("forecast: 'target' is required");
    const SeriesTable table = read_series_csv(data_path);

    RollingConfig roll;
    roll.target = target;
    roll.horizon = param<std::size_t>(p, "horizon", 12);
    roll.window_years = param<std::size_t>(p, "window_years", 7);
    roll.ar_benchmark = param<bool>(p, "ar_benchmark", true);
    roll.ar_max = param<std::size_t>(p, "ar_max", 12);
    roll.workers = effective_workers(cfg);
    for (const std::string& name :
         param<std::vector<std::string>>(p, "methods", {"LAS", "ARMAr-LAS"}))
        roll.methods.push_back(
            forecast_method_config(p, method_from_name(name), 1));

    const RollingOutput out = rolling_forecast(table, roll);
    const AccuracySummary acc = summarize_accuracy(out);
    const SelectionSummary sel = selection_frequency(out);

    std::ostringstream records;
    records.precision(12);
    records << "origin,horizon,method,forecast,realized,n_selected\n";
    for (const ForecastRecord& r : out.records) {
        records << r.origin_date << ',' << r.horizon << ',' << r.method << ','
                << fmt(r.forecast) << ',' << (r.has_realized ? fmt(r.realized) : "") << ','
                << r.selected.size() << '\n';
    }

    json accuracy;
    accuracy["methods"] = acc.methods;
    accuracy["rmsfe"] = acc.rmsfe;
    accuracy["n_evaluated"] = acc.n_evaluated;
    accuracy["failed_origins"] = out.failed_origins;
    json pairs = json::array();
    for (const MethodComparison& c : acc.pairs) {
        json row{{"method_a", c.method_a},
                 {"method_b", c.method_b},
                 {"rmsfe_ratio", c.rmsfe_ratio}};
        if (c.dm_valid) {
            row["dm_stat"] = c.dm_stat;
            row["dm_p_one_sided"] = c.dm_p;
        }
        pairs.push_back(row);
    }
    accuracy["pairs"] = pairs;
    json avg;
    for (std::size_t i = 0; i < sel.methods.size(); ++i) avg[sel.methods[i]] = sel.avg_selected[i];
    accuracy["avg_selected"] = avg;

    std::ostringstream freq;
    freq.precision(10);
    freq << "method,variable,group,frequency\n";
    for (std::size_t mi = 0; mi < sel.methods.size(); ++mi)
        for (std::size_t v = 0; v < sel.variables.size(); ++v)
            freq << sel.methods[mi] << ',' << sel.variables[v] << ',' << out.predictor_groups[v]
                 << ',' << fmt(sel.frequency(mi, v)) << '\n';

    std::ostringstream heat;
    heat << "method,origin,group,count\n";
    for (const GroupCount& g : sel.group_counts)
        heat << g.method << ',' << g.origin_date << ',' << g.group << ',' << g.count << '\n';

    ArtifactSink sink{cfg, {}, std::chrono::steady_clock::now()};
    sink.add("records.csv", records.str());
    sink.add("accuracy.json", accuracy.dump(2) + "\n");
    sink.add("selection_frequency.csv", freq.str());
    sink.add("selection_groups.csv", heat.str());
    sink.finish("forecast");
    return sink.paths;
}

}  // namespace

RunConfig parse_config_json(const json& j) {
    RunConfig cfg;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    cfg.command = param<std::string>(j, "command", "");
    cfg.seed = param<std::uint64_t>(j, "seed", 12345);
    cfg.output_dir = param<std::string>(j, "output_dir", ".");
    cfg.workers = param<unsigned>(j, "workers", 0);
    if (j.contains("params")) {
        if (!j.at("params").is_object()) throw ConfigError("'params' must be an object");
        cfg.params = j.at("params");
    }
    return cfg;
}

std::uint64_t config_hash(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> run(const RunConfig& config) {
    if (!config.output_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(config.output_dir, ec);
        if (ec) throw DataError("cannot create output directory " + config.output_dir);
    }
    if (config.command == "density") return run_density(config);
    if (config.command == "simulate") return run_simulate(config);
    if (config.command == "mc-table") return run_mc_table(config);
    if (config.command == "fit") return run_fit(config);
    if (config.command == "forecast") return run_forecast(config);
    throw ConfigError("unknown command: " + config.command);
}

}  // namespace tslab::cli
