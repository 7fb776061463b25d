#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vflux/flicker.hpp"
#include "vflux/recreate.hpp"
#include "vflux/waveform.hpp"

namespace vflux {

/// One (reference, recreated) severity pair.
struct EvalRow {
    std::string signal_id;
    double t_w = 0.0;
    Method method = Method::M1;
    double p_st = 0.0;  ///< severity of the original waveform
    double p_stc = 0.0; ///< severity of the recreated waveform
};

/// Regression summary for one (t_w, method) cell. a_free is the
/// free-intercept slope, kept as a diagnostic next to the through-origin
/// a_pst. Degenerate cells keep n and carry a flag instead of statistics.
struct CoeffCell {
    std::size_t n = 0;
    double a_pst = std::numeric_limits<double>::quiet_NaN();
    double r_pst = std::numeric_limits<double>::quiet_NaN();
    double a_free = std::numeric_limits<double>::quiet_NaN();
    std::string flag;
};

/// Rows keyed by (t_w, method).
using CoefficientTable = std::map<std::pair<double, Method>, CoeffCell>;

/// Zero-intercept least-squares slope sum(x*y)/sum(x^2).
double slope_a_pst(std::span<const std::pair<double, double>> pairs);

/// Ordinary least-squares slope with free intercept (diagnostic).
double slope_free_intercept(std::span<const std::pair<double, double>> pairs);

/// Pearson product-moment correlation.
double pearson_r_pst(std::span<const std::pair<double, double>> pairs);

/// Build a table from rows; cells that cannot support a statistic are flagged
/// rather than dropped.
CoefficientTable assemble_table(std::span<const EvalRow> rows);

struct DatasetEntry {
    std::string id;
    std::function<SampledWaveform()> load;
};

struct SignalFailure {
    std::string id;
    std::string error;
};

struct EvalOutcome {
    std::vector<EvalRow> rows;           ///< sorted by (signal_id, t_w, method)
    CoefficientTable all;                ///< every signal
    CoefficientTable low;                ///< signals with p_st < split threshold
    CoefficientTable high;               ///< signals with p_st >= split threshold
    std::vector<SignalFailure> failures; ///< signals skipped with their errors
};

struct EvalConfig {
    std::vector<double> t_w_list;
    std::vector<Method> methods;
    std::uint64_t master_seed = 0;
    int threads = 1;
    double split_threshold = 2.0;
    double sr_threshold_rel = 0.01;
    double min_duration_s = 600.0; ///< signals below this are recorded as failures
    RecreationParams base_params;  ///< method/seed fields are overridden per task
};

/// Full pipeline for one signal: reference severity, per-window recreation per
/// (t_w, method) with independently derived seeds, severity of each recreated
/// waveform.
std::vector<EvalRow> evaluate_signal(const std::string& id, const SampledWaveform& w,
                                     const EvalConfig& cfg);

/// Batch driver. Signals are processed in parallel (cfg.threads); per-signal
/// failures are recorded and the batch continues. Output is deterministic for
/// a fixed (dataset, master_seed) regardless of thread count.
EvalOutcome run_evaluation(const std::vector<DatasetEntry>& dataset, const EvalConfig& cfg);

/// Stream key for (master_seed, signal, t_w, method, window).
std::uint64_t recreation_stream_key(std::uint64_t master_seed, const std::string& signal_id,
                                    double t_w, Method method, std::size_t window_index);

void write_pairs_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);
void write_table_csv(const std::filesystem::path& path, const CoefficientTable& table);

} // namespace vflux
