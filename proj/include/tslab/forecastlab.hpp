#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tslab/estimators.hpp"
#include "tslab/matrix.hpp"

namespace tslab {

// Ingested panel. Column j of `values` is series j over the dates.
struct SeriesTable {
    std::vector<std::string> names;
    std::vector<std::string> groups;
    std::vector<int> tcodes;  // 1..7
    std::vector<std::string> dates;
    Matrix values;  // T_raw x n_series

    std::size_t find(const std::string& name) const;
};

// CSV layout: header row "date,<names...>", then "group,...", then
// "tcode,...", then one date-indexed row per period. Missing or malformed
// cells raise DataError with the offending line number.
SeriesTable read_series_csv(const std::string& path);
void write_series_csv(const SeriesTable& table, const std::string& path);

// Leading observations consumed by a transformation code.
std::size_t tcode_drop(int tcode);

// 1: x, 2: diff, 3: diff^2, 4: log, 5: dlog, 6: d2log, 7: diff(x_t/x_{t-1}-1).
std::vector<double> apply_tcode(const std::vector<double>& series, int tcode);

struct TargetSeries {
    std::vector<double> insample;   // value k corresponds to raw time k + 2
    std::vector<double> target;     // value k = response for info time k + 1
    std::size_t insample_offset = 2;
    std::size_t target_offset = 1;
};

// Twice-differenced log target: the regression response
// (1200/h) log(c_{t+h}/c_t) - 1200 log(c_t/c_{t-1}) aligned to info time t,
// plus the in-sample series 1200 log(c_t/c_{t-1}) - 1200 log(c_{t-1}/c_{t-2}).
TargetSeries make_target(const std::vector<double>& cpi, std::size_t horizon);

struct ForecastRecord {
    std::size_t origin_index = 0;  // raw time index of the information set
    std::string origin_date;
    std::size_t horizon = 0;
    std::string method;
    double forecast = 0.0;
    double realized = 0.0;
    bool has_realized = false;
    std::vector<std::size_t> selected;  // indices into predictor_names
};

struct RollingConfig {
    std::string target;
    std::size_t horizon = 12;
    std::size_t window_years = 7;
    std::vector<EstimatorConfig> methods;
    bool ar_benchmark = true;
    std::size_t ar_max = 12;
    bool single_fit = false;  // one origin at the end, window = all usable data
    unsigned workers = 1;
};

struct RollingOutput {
    std::vector<ForecastRecord> records;
    std::vector<std::string> predictor_names;
    std::vector<std::string> predictor_groups;
    std::vector<std::string> method_names;
    std::size_t failed_origins = 0;
    std::vector<FitResult> last_fits;  // populated in single_fit mode only
};

// Re-estimates every method on a 12*window_years-observation window at each
// origin and emits the h-step-ahead forecast. Everything used at origin t is
// computable from data dated <= t.
RollingOutput rolling_forecast(const SeriesTable& table, const RollingConfig& cfg);

struct DmResult {
    double stat = 0.0;
    double p_one_sided = 0.0;  // small when the first loss series wins
};

// Diebold-Mariano test on squared-error losses with a Bartlett long-run
// variance truncated at h-1 lags.
DmResult diebold_mariano(const std::vector<double>& loss_a, const std::vector<double>& loss_b,
                         std::size_t horizon);

struct MethodComparison {
    std::string method_a, method_b;
    double rmsfe_ratio = 0.0;  // a / b
    double dm_stat = 0.0;
    double dm_p = 0.0;
    bool dm_valid = false;
};

// RMSFE per method and all pairwise ratios with DM p-values.
struct AccuracySummary {
    std::vector<std::string> methods;
    std::vector<double> rmsfe;
    std::vector<MethodComparison> pairs;
    std::size_t n_evaluated = 0;
};

AccuracySummary summarize_accuracy(const RollingOutput& out);

struct GroupCount {
    std::string method;
    std::string origin_date;
    std::string group;
    std::size_t count = 0;
};

struct SelectionSummary {
    std::vector<std::string> methods;
    std::vector<std::string> variables;
    Matrix frequency;                  // methods x variables, in [0, 1]
    std::vector<double> avg_selected;  // per method
    std::vector<GroupCount> group_counts;
};

SelectionSummary selection_frequency(const RollingOutput& out);

}  // namespace tslab
