#include "tslab/forecastlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tslab/errors.hpp"
#include "tslab/numcore.hpp"
#include "tslab/parallel.hpp"

namespace tslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Direct AR(p) benchmark: regress the h-step response on offsets 0..p-1 of
// the in-sample target series, order by BIC.
struct ArBenchFit {
    std::vector<double> coeffs;  // intercept first
    std::size_t order = 0;
};

ArBenchFit fit_ar_benchmark(const std::vector<double>& resp, const std::vector<double>& lag_source,
                            std::size_t first, std::size_t last, std::size_t p_max) {
    const std::size_t m = last - first;
    ArBenchFit best;
    double best_bic = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p <= p_max; ++p) {
        if (first + 1 < p || m <= p + 2) continue;
        Matrix design(m, p + 1);
        std::vector<double> y(m);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t t = first + j;
            y[j] = resp[t];
            design(j, 0) = 1.0;
            for (std::size_t l = 0; l < p; ++l) design(j, l + 1) = lag_source[t - l];
        }
        std::vector<double> beta;
        try {
            beta = ols(design, y);
        } catch (const Error&) {
            continue;
        }
        double rss = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double fitted = 0.0;
            for (std::size_t c = 0; c <= p; ++c) fitted += beta[c] * design(j, c);
            rss += (y[j] - fitted) * (y[j] - fitted);
        }
        const double bic = static_cast<double>(m) * std::log(std::max(rss / m, 1e-300)) +
                           static_cast<double>(p) * std::log(static_cast<double>(m));
        if (bic < best_bic) {
            best_bic = bic;
            best.coeffs = beta;
            best.order = p;
        }
    }
    if (best.coeffs.empty()) throw Error("fit_ar_benchmark: no candidate order fitted");
    return best;
}

}  // namespace

std::size_t SeriesTable::find(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return j;
    throw DataError("series not found: " + name);
}

SeriesTable read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    SeriesTable table;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw DataError(std::string("missing ") + what + " row");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return split_csv_line(line);
    };

    std::vector<std::string> header = next_line("header");
    if (header.size() < 2)
        throw DataError("line 1: header must list a date column and at least one series");
    table.names.assign(header.begin() + 1, header.end());
    const std::size_t n = table.names.size();

    std::vector<std::string> group_row = next_line("group");
    if (group_row.size() != n + 1)
        throw DataError("line 2: group row has " + std::to_string(group_row.size() - 1) +
                        " entries, expected " + std::to_string(n));
    table.groups.assign(group_row.begin() + 1, group_row.end());

    std::vector<std::string> tcode_row = next_line("tcode");
    if (tcode_row.size() != n + 1)
        throw DataError("line 3: tcode row has " + std::to_string(tcode_row.size() - 1) +
                        " entries, expected " + std::to_string(n));
    table.tcodes.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        int code = 0;
        try {
            code = std::stoi(tcode_row[j + 1]);
        } catch (const std::exception&) {
            throw DataError("line 3: tcode for series '" + table.names[j] + "' is not an integer");
        }
        if (code < 1 || code > 7)
            throw DataError("line 3: tcode " + std::to_string(code) + " for series '" +
                            table.names[j] + "' outside 1..7");
        table.tcodes[j] = code;
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != n + 1)
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n + 1) + " cells, got " + std::to_string(cells.size()));
        if (!table.dates.empty() && cells[0] <= table.dates.back())
            throw DataError("line " + std::to_string(line_no) + ": dates must be increasing");
        table.dates.push_back(cells[0]);
        std::vector<double> row(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (cells[j + 1].empty())
                throw DataError("line " + std::to_string(line_no) + ": missing value for '" +
                                table.names[j] + "'");
            try {
                row[j] = std::stod(cells[j + 1]);
            } catch (const std::exception&) {
                throw DataError("line " + std::to_string(line_no) + ": bad number '" +
                                cells[j + 1] + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 3) throw DataError("need at least 3 data rows");
    table.values = Matrix(rows.size(), n);
    for (std::size_t t = 0; t < rows.size(); ++t) table.values.set_row(t, rows[t]);
    return table;
}

void write_series_csv(const SeriesTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "date";
    for (const std::string& s : table.names) out << ',' << s;
    out << "\ngroup";
    for (const std::string& s : table.groups) out << ',' << s;
    out << "\ntcode";
    for (int c : table.tcodes) out << ',' << c;
    out << '\n';
    out.precision(12);
    for (std::size_t t = 0; t < table.dates.size(); ++t) {
        out << table.dates[t];
        for (std::size_t j = 0; j < table.names.size(); ++j) out << ',' << table.values(t, j);
        out << '\n';
    }
}

std::size_t tcode_drop(int tcode) {
    switch (tcode) {
        case 1:
        case 4: return 0;
        case 2:
        case 5: return 1;
        case 3:
        case 6: return 2;
        case 7: return 2;
        default: throw DataError("tcode outside 1..7");
    }
}

std::vector<double> apply_tcode(const std::vector<double>& series, int tcode) {
    const std::size_t drop = tcode_drop(tcode);
    if (series.size() <= drop) throw DataError("apply_tcode: series too short");
    const bool needs_log = tcode >= 4 && tcode <= 6;
    const bool needs_positive = needs_log || tcode == 7;
    if (needs_positive)
        for (double v : series)
            if (v <= 0.0) throw NonPositiveForLog("apply_tcode: non-positive value");

    std::vector<double> base = series;
    if (needs_log)
        for (double& v : base) v = std::log(v);

    std::vector<double> out;
    switch (tcode) {
        case 1:
        case 4:
            out = base;
            break;
        case 2:
        case 5:
            out.resize(base.size() - 1);
            for (std::size_t t = 1; t < base.size(); ++t) out[t - 1] = base[t] - base[t - 1];
            break;
        case 3:
        case 6:
            out.resize(base.size() - 2);
            for (std::size_t t = 2; t < base.size(); ++t)
                out[t - 2] = base[t] - 2.0 * base[t - 1] + base[t - 2];
            break;
        case 7: {
            std::vector<double> ratio(base.size() - 1);
            for (std::size_t t = 1; t < base.size(); ++t)
                ratio[t - 1] = base[t] / base[t - 1] - 1.0;
            out.resize(ratio.size() - 1);
            for (std::size_t t = 1; t < ratio.size(); ++t) out[t - 1] = ratio[t] - ratio[t - 1];
            break;
        }
        default:
            throw DataError("tcode outside 1..7");
    }
    return out;
}

TargetSeries make_target(const std::vector<double>& cpi, std::size_t horizon) {
    if (horizon < 1) throw ConfigError("make_target: horizon must be >= 1");
    if (cpi.size() <= horizon + 2) throw DataError("make_target: series too short");
    for (double v : cpi)
        if (v <= 0.0) throw NonPositiveForLog("make_target: non-positive level");

    TargetSeries out;
    const std::size_t n = cpi.size();
    out.insample.resize(n - 2);
    for (std::size_t t = 2; t < n; ++t)
        out.insample[t - 2] =
            1200.0 * std::log(cpi[t] / cpi[t - 1]) - 1200.0 * std::log(cpi[t - 1] / cpi[t - 2]);
    out.target.resize(n - 1 - horizon);
    const double scale = 1200.0 / static_cast<double>(horizon);
    for (std::size_t t = 1; t + horizon < n; ++t)
        out.target[t - 1] = scale * std::log(cpi[t + horizon] / cpi[t]) -
                            1200.0 * std::log(cpi[t] / cpi[t - 1]);
    return out;
}

RollingOutput rolling_forecast(const SeriesTable& table, const RollingConfig& cfg) {
    const std::size_t n_series = table.names.size();
    const std::size_t n_time = table.dates.size();
    const std::size_t target_col = table.find(cfg.target);
    const std::size_t h = cfg.horizon;
    std::size_t window = 12 * cfg.window_years;
    if (!cfg.single_fit && window < 24) throw ConfigError("rolling_forecast: window too short");

    RollingOutput out;
    for (std::size_t j = 0; j < n_series; ++j) {
        if (j == target_col) continue;
        out.predictor_names.push_back(table.names[j]);
        out.predictor_groups.push_back(table.groups[j]);
    }
    const std::size_t n_pred = out.predictor_names.size();

    // Transform predictors once (differencing commutes with windowing) and
    // align everything on raw time.
    std::vector<std::vector<double>> transformed(n_pred);
    std::vector<std::size_t> offsets(n_pred);
    {
        std::size_t k = 0;
        for (std::size_t j = 0; j < n_series; ++j) {
            if (j == target_col) continue;
            std::vector<double> raw(n_time);
            for (std::size_t t = 0; t < n_time; ++t) raw[t] = table.values(t, j);
            transformed[k] = apply_tcode(raw, table.tcodes[j]);
            offsets[k] = tcode_drop(table.tcodes[j]);
            ++k;
        }
    }
    std::vector<double> cpi(n_time);
    for (std::size_t t = 0; t < n_time; ++t) cpi[t] = table.values(t, target_col);
    const TargetSeries target = make_target(cpi, h);

    std::size_t t0 = target.insample_offset;  // raw-time start of the aligned frame
    for (std::size_t k = 0; k < n_pred; ++k) t0 = std::max(t0, offsets[k]);
    t0 = std::max(t0, target.target_offset);

    std::size_t burn = 0;
    for (const EstimatorConfig& m : cfg.methods) burn = std::max(burn, required_burn(m));
    if (cfg.ar_benchmark) burn = std::max(burn, cfg.ar_max);

    // Aligned arrays indexed by frame j <-> raw time t0 + j. Response values
    // outside the estimation span are poisoned with NaN so that any
    // look-ahead would surface immediately.
    const std::size_t frame_len = n_time - t0;
    auto frame_x = [&](std::size_t k, std::size_t j) {
        return transformed[k][t0 + j - offsets[k]];
    };
    auto frame_resp = [&](std::size_t j) {  // response for info time t0 + j
        const std::size_t t = t0 + j;
        return t >= target.target_offset && t - target.target_offset < target.target.size()
                   ? target.target[t - target.target_offset]
                   : kNaN;
    };
    auto frame_ins = [&](std::size_t j) {
        return target.insample[t0 + j - target.insample_offset];
    };

    if (cfg.single_fit) {
        if (frame_len < h + burn + 12)
            throw DataError("rolling_forecast: panel too short for a single fit");
        window = frame_len - h - burn;  // collapses the loop to one origin
    }
    const std::size_t first_origin_frame = burn + window - 1 + h;
    // Rolling evaluation stops at the final origin whose target is realized;
    // a single fit may forecast past the sample end instead.
    const std::size_t last_origin_frame = cfg.single_fit ? frame_len - 1 : frame_len - 1 - h;
    if (first_origin_frame > last_origin_frame)
        throw DataError("rolling_forecast: not enough observations for the first window");

    std::vector<std::string> method_names;
    for (const EstimatorConfig& m : cfg.methods) method_names.push_back(method_name(m.method));
    if (cfg.ar_benchmark) method_names.push_back("AR");
    out.method_names = method_names;

    struct OriginResult {
        std::vector<ForecastRecord> records;
        std::vector<FitResult> fits;
        bool failed = false;
    };
    const std::size_t n_origins = last_origin_frame - first_origin_frame + 1;
    std::vector<OriginResult> per_origin(n_origins);

    parallel_for(n_origins, cfg.workers, [&](std::size_t oi) {
        const std::size_t origin_frame = first_origin_frame + oi;
        const std::size_t t_raw = t0 + origin_frame;
        // Arrays end at the origin's info time minus one; the origin's own
        // predictor values travel as x_next.
        const std::size_t arr_len = origin_frame;  // frames 0..origin_frame-1
        const std::size_t reg_last = origin_frame - h + 1;   // exclusive
        const std::size_t reg_first = reg_last - window;

        Matrix x(n_pred, arr_len);
        std::vector<double> resp(arr_len, kNaN), ins(arr_len, kNaN);
        for (std::size_t j = 0; j < arr_len; ++j) {
            for (std::size_t k = 0; k < n_pred; ++k) x(k, j) = frame_x(k, j);
            ins[j] = frame_ins(j);
            // Targets realized by the origin stay visible (error filters may
            // reach before the window); anything later stays poisoned.
            if (j < reg_last) resp[j] = frame_resp(j);
        }
        std::vector<double> x_next(n_pred);
        for (std::size_t k = 0; k < n_pred; ++k) x_next[k] = frame_x(k, origin_frame);
        const double ins_next = frame_ins(origin_frame);

        const double realized_value = frame_resp(origin_frame);
        const bool has_realized = std::isfinite(realized_value);

        OriginResult res;
        auto emit = [&](const std::string& name, double fc,
                        const std::vector<std::size_t>& selected) {
            ForecastRecord rec;
            rec.origin_index = t_raw;
            rec.origin_date = table.dates[t_raw];
            rec.horizon = h;
            rec.method = name;
            rec.forecast = fc;
            rec.realized = has_realized ? realized_value : kNaN;
            rec.has_realized = has_realized;
            rec.selected = selected;
            res.records.push_back(std::move(rec));
        };

        try {
            for (const EstimatorConfig& mcfg : cfg.methods) {
                FitResult fit = fit_estimator(mcfg, x, resp, ins, reg_first, reg_last);
                const double fc = forecast_estimator(fit, x, resp, ins, x_next, ins_next);
                emit(method_name(mcfg.method), fc, fit.selected);
                if (cfg.single_fit) res.fits.push_back(std::move(fit));
            }
            if (cfg.ar_benchmark) {
                const ArBenchFit ar = fit_ar_benchmark(resp, ins, reg_first, reg_last, cfg.ar_max);
                double fc = ar.coeffs[0];
                for (std::size_t l = 0; l < ar.order; ++l)
                    fc += ar.coeffs[l + 1] * (l == 0 ? ins_next : ins[arr_len - l]);
                emit("AR", fc, {});
            }
        } catch (const Error&) {
            res.failed = true;
            res.records.clear();
        }
        per_origin[oi] = std::move(res);
    });

    for (OriginResult& r : per_origin) {
        if (r.failed) {
            ++out.failed_origins;
            continue;
        }
        for (ForecastRecord& rec : r.records) out.records.push_back(std::move(rec));
        for (FitResult& fit : r.fits) out.last_fits.push_back(std::move(fit));
    }
    return out;
}

DmResult diebold_mariano(const std::vector<double>& loss_a, const std::vector<double>& loss_b,
                         std::size_t horizon) {
    const std::size_t n = loss_a.size();
    if (loss_b.size() != n) throw Error("diebold_mariano: length mismatch");
    if (n < 10) throw Error("diebold_mariano: need at least 10 losses");
    if (horizon < 1) throw ConfigError("diebold_mariano: horizon must be >= 1");

    std::vector<double> d(n);
    for (std::size_t t = 0; t < n; ++t) d[t] = loss_a[t] - loss_b[t];
    const double dbar = mean_of(d);
    const double nd = static_cast<double>(n);

    double lrv = 0.0;
    for (std::size_t j = 0; j < horizon; ++j) {
        double gamma = 0.0;
        for (std::size_t t = j; t < n; ++t) gamma += (d[t] - dbar) * (d[t - j] - dbar);
        gamma /= nd;
        if (j == 0)
            lrv += gamma;
        else
            lrv += 2.0 * (1.0 - static_cast<double>(j) / static_cast<double>(horizon)) * gamma;
    }
    if (lrv <= 0.0) throw ZeroVariance("diebold_mariano: degenerate loss differential");

    DmResult out;
    out.stat = dbar / std::sqrt(lrv / nd);
    out.p_one_sided = normal_cdf(out.stat);  // small when the first method wins
    return out;
}

AccuracySummary summarize_accuracy(const RollingOutput& out) {
    AccuracySummary sum;
    sum.methods = out.method_names;
    const std::size_t n_m = sum.methods.size();

    // Losses per method over the common evaluated origins, in origin order.
    std::map<std::string, std::vector<double>> losses;
    for (const std::string& m : sum.methods) losses[m] = {};
    for (const ForecastRecord& rec : out.records) {
        if (!rec.has_realized) continue;
        const double e = rec.forecast - rec.realized;
        losses[rec.method].push_back(e * e);
    }
    sum.rmsfe.resize(n_m, 0.0);
    for (std::size_t i = 0; i < n_m; ++i) {
        const std::vector<double>& l = losses[sum.methods[i]];
        if (l.empty()) continue;
        sum.rmsfe[i] = std::sqrt(mean_of(l));
        sum.n_evaluated = l.size();
    }
    std::size_t horizon = 1;
    if (!out.records.empty()) horizon = out.records.front().horizon;
    for (std::size_t i = 0; i < n_m; ++i) {
        for (std::size_t j = 0; j < n_m; ++j) {
            if (i == j) continue;
            MethodComparison cmp;
            cmp.method_a = sum.methods[i];
            cmp.method_b = sum.methods[j];
            cmp.rmsfe_ratio = sum.rmsfe[j] > 0.0 ? sum.rmsfe[i] / sum.rmsfe[j] : 0.0;
            try {
                const DmResult dm =
                    diebold_mariano(losses[sum.methods[i]], losses[sum.methods[j]], horizon);
                cmp.dm_stat = dm.stat;
                cmp.dm_p = dm.p_one_sided;
                cmp.dm_valid = true;
            } catch (const Error&) {
                cmp.dm_valid = false;
            }
            sum.pairs.push_back(cmp);
        }
    }
    return sum;
}

SelectionSummary selection_frequency(const RollingOutput& out) {
    if (out.records.empty()) throw Error("selection_frequency: no records");
    SelectionSummary sum;
    sum.methods = out.method_names;
    sum.variables = out.predictor_names;
    const std::size_t n_m = sum.methods.size();
    const std::size_t n_v = sum.variables.size();
    sum.frequency = Matrix(n_m, n_v);
    sum.avg_selected.assign(n_m, 0.0);

    std::vector<std::size_t> counts(n_m, 0);
    auto midx = [&](const std::string& name) {
        for (std::size_t i = 0; i < n_m; ++i)
            if (sum.methods[i] == name) return i;
        throw Error("selection_frequency: unknown method " + name);
    };

    for (const ForecastRecord& rec : out.records) {
        const std::size_t mi = midx(rec.method);
        ++counts[mi];
        std::map<std::string, std::size_t> by_group;
        for (std::size_t v : rec.selected) {
            sum.frequency(mi, v) += 1.0;
            ++by_group[out.predictor_groups[v]];
        }
        sum.avg_selected[mi] += static_cast<double>(rec.selected.size());
        for (const auto& [group, count] : by_group)
            sum.group_counts.push_back({rec.method, rec.origin_date, group, count});
    }
    for (std::size_t mi = 0; mi < n_m; ++mi) {
        if (counts[mi] == 0) continue;
        const double c = static_cast<double>(counts[mi]);
        for (std::size_t v = 0; v < n_v; ++v) sum.frequency(mi, v) /= c;
        sum.avg_selected[mi] /= c;
    }
    return sum;
}

}  // namespace tslab
