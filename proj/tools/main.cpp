#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "tslab/cli.hpp"
#include "tslab/errors.hpp"

namespace {

using nlohmann::json;

// Loads --config (if any) and lets explicit flags override its entries.
struct CommonOpts {
    std::string config_file;
    std::string output_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned workers = 0;
    bool workers_set = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "JSON config file; flags override its entries");
        app->add_option("--out", output_dir, "output directory (default: . or $TSLAB_OUT)");
        app->add_option("--seed", seed, "master seed")->each([this](const std::string&) {
            seed_set = true;
        });
        app->add_option("--workers", workers, "worker pool size (0 = all cores)")
            ->each([this](const std::string&) { workers_set = true; });
    }

    tslab::cli::RunConfig build(const std::string& command, const json& flag_params) const {
        json merged;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw tslab::ConfigError("cannot open config file " + config_file);
            try {
                in >> merged;
            } catch (const json::exception& e) {
                throw tslab::ConfigError(std::string("config file is not valid JSON: ") +
                                         e.what());
            }
        }
        if (!merged.is_object()) merged = json::object();
        merged["command"] = command;
        if (!merged.contains("params")) merged["params"] = json::object();
        for (const auto& [key, value] : flag_params.items()) merged["params"][key] = value;
        if (seed_set) merged["seed"] = seed;
        if (workers_set) merged["workers"] = workers;
        if (!output_dir.empty())
            merged["output_dir"] = output_dir;
        else if (const char* env = std::getenv("TSLAB_OUT"); env && !merged.contains("output_dir"))
            merged["output_dir"] = env;
        return tslab::cli::parse_config_json(merged);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tslab: sparse time-series regression laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tslab::cli::kVersion);

    CommonOpts common;
    json params;

    auto add_common = [&](CLI::App* sub) {
        common.attach(sub);
        return sub;
    };

    // density
    auto* density = add_common(app.add_subcommand(
        "density", "sample-correlation density: closed form, moment-matched, Monte Carlo"));
    double d_phi = 0.6, d_phi_i = NAN, d_phi_j = NAN;
    std::size_t d_T = 250, d_reps = 5000, d_grid = 201;
    std::string d_variant = "lemma";
    density->add_option("--T", d_T, "sample length");
    density->add_option("--phi", d_phi, "AR coefficient for both series");
    density->add_option("--phi-i", d_phi_i, "AR coefficient of series i");
    density->add_option("--phi-j", d_phi_j, "AR coefficient of series j");
    density->add_option("--variant", d_variant, "'lemma' or 'theorem' shape parameter");
    density->add_option("--reps", d_reps, "Monte Carlo replications");
    density->add_option("--grid-points", d_grid, "evaluation grid size");

    // simulate
    auto* simulate = add_common(
        app.add_subcommand("simulate", "generate one scenario dataset to CSV"));
    std::string s_dgp = "A";
    std::size_t s_n = 50, s_T = 150, s_s = 10;
    double s_phi = 0.9, s_rho = -1.0, s_snr = 1.0;
    simulate->add_option("--dgp", s_dgp, "scenario kind: A, B, C or D");
    simulate->add_option("--n", s_n, "number of predictors");
    simulate->add_option("--T", s_T, "sample length");
    simulate->add_option("--phi", s_phi, "AR coefficient (kinds A/B)");
    simulate->add_option("--rho", s_rho, "innovation cross-correlation (default by kind)");
    simulate->add_option("--snr", s_snr, "signal-to-noise ratio");
    simulate->add_option("--s", s_s, "number of active predictors");

    // mc-table
    auto* mc = add_common(app.add_subcommand(
        "mc-table", "Monte Carlo comparison table across methods and scenarios"));
    std::string m_dgp = "A";
    std::size_t m_n = 50, m_T = 150, m_reps = 200, m_s = 10;
    double m_snr = 1.0, m_rho = -1.0;
    std::vector<double> m_phis{0.9};
    std::vector<std::string> m_methods{"LAS", "ARMAr-LAS"};
    mc->add_option("--dgp", m_dgp, "scenario kind");
    mc->add_option("--n", m_n, "number of predictors");
    mc->add_option("--T", m_T, "sample length");
    mc->add_option("--snr", m_snr, "signal-to-noise ratio");
    mc->add_option("--rho", m_rho, "innovation cross-correlation");
    mc->add_option("--s", m_s, "number of active predictors");
    mc->add_option("--phis", m_phis, "AR coefficients to sweep (kinds A/B)")->delimiter(',');
    mc->add_option("--methods", m_methods, "methods to compare")->delimiter(',');
    mc->add_option("--reps", m_reps, "replications per scenario");

    // fit
    auto* fit = add_common(app.add_subcommand("fit", "fit one method once on a CSV panel"));
    std::string f_data, f_target, f_method = "ARMAr-LAS";
    std::size_t f_h = 12, f_maxp = 12, f_maxq = 12, f_ylags = 12;
    fit->add_option("--data", f_data, "panel CSV path");
    fit->add_option("--target", f_target, "target series name");
    fit->add_option("--method", f_method, "method name");
    fit->add_option("--horizon", f_h, "forecast horizon");
    fit->add_option("--max-p", f_maxp, "ARMA filter AR cap");
    fit->add_option("--max-q", f_maxq, "ARMA filter MA cap");
    fit->add_option("--y-lags", f_ylags, "number of target lags in the design");

    // forecast
    auto* fc = add_common(app.add_subcommand("forecast", "rolling-window forecast evaluation"));
    std::string c_data, c_target;
    std::size_t c_h = 12, c_window = 7, c_maxp = 12, c_maxq = 12, c_ylags = 12, c_armax = 12,
                c_glscap = 12, c_xlags = 2;
    std::vector<std::string> c_methods{"LAS", "ARMAr-LAS"};
    bool c_no_ar = false;
    fc->add_option("--data", c_data, "panel CSV path");
    fc->add_option("--target", c_target, "target series name");
    fc->add_option("--horizon", c_h, "forecast horizon");
    fc->add_option("--window-years", c_window, "rolling window length in years");
    fc->add_option("--methods", c_methods, "methods to run")->delimiter(',');
    fc->add_option("--max-p", c_maxp, "ARMA filter AR cap");
    fc->add_option("--max-q", c_maxq, "ARMA filter MA cap");
    fc->add_option("--y-lags", c_ylags, "number of target lags in the designs");
    fc->add_option("--ar-max", c_armax, "AR benchmark order cap");
    fc->add_option("--gls-ar-cap", c_glscap, "GLS error-filter order cap");
    fc->add_option("--ardl-x-lags", c_xlags, "extra predictor lags for ARDL");
    fc->add_flag("--no-ar-benchmark", c_no_ar, "skip the AR benchmark");

    CLI11_PARSE(app, argc, argv);

    try {
        tslab::cli::RunConfig cfg;
        if (density->parsed()) {
            params["T"] = d_T;
            params["phi"] = d_phi;
            if (!std::isnan(d_phi_i)) params["phi_i"] = d_phi_i;
            if (!std::isnan(d_phi_j)) params["phi_j"] = d_phi_j;
            params["variant"] = d_variant;
            params["reps"] = d_reps;
            params["grid_points"] = d_grid;
            cfg = common.build("density", params);
        } else if (simulate->parsed()) {
            params = {{"dgp", s_dgp}, {"n", s_n},     {"T", s_T}, {"phi", s_phi},
                      {"rho", s_rho}, {"snr", s_snr}, {"s", s_s}};
            cfg = common.build("simulate", params);
        } else if (mc->parsed()) {
            params = {{"dgp", m_dgp},   {"n", m_n},     {"T", m_T},
                      {"snr", m_snr},   {"rho", m_rho}, {"s", m_s},
                      {"phis", m_phis}, {"methods", m_methods}, {"reps", m_reps}};
            cfg = common.build("mc-table", params);
        } else if (fit->parsed()) {
            params = {{"data", f_data},   {"target", f_target},  {"method", f_method},
                      {"horizon", f_h},   {"max_p", f_maxp},     {"max_q", f_maxq},
                      {"y_lag_count", f_ylags}};
            cfg = common.build("fit", params);
        } else if (fc->parsed()) {
            params = {{"data", c_data},        {"target", c_target},
                      {"horizon", c_h},        {"window_years", c_window},
                      {"methods", c_methods},  {"max_p", c_maxp},
                      {"max_q", c_maxq},       {"y_lag_count", c_ylags},
                      {"ar_max", c_armax},     {"gls_ar_cap", c_glscap},
                      {"ardl_x_lags", c_xlags},{"ar_benchmark", !c_no_ar}};
            cfg = common.build("forecast", params);
        }
        const std::vector<std::string> outputs = tslab::cli::run(cfg);
        for (const std::string& path : outputs) std::cout << path << '\n';
        return tslab::cli::kOk;
    } catch (const tslab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return tslab::cli::kConfigError;
    } catch (const tslab::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return tslab::cli::kDataError;
    } catch (const tslab::Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return tslab::cli::kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return tslab::cli::kNumericalError;
    }
}
