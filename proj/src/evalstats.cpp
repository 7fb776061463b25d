#include "vflux/evalstats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>
#include <tuple>

#include "vflux/rng.hpp"

namespace vflux {

double slope_a_pst(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw StatisticsError("slope: need at least 2 pairs");
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pairs) {
        sxy += x * y;
        sxx += x * x;
    }
    if (sxx == 0.0) throw StatisticsError("slope: all reference values are zero");
    return sxy / sxx;
}

double slope_free_intercept(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw StatisticsError("slope: need at least 2 pairs");
    const auto n = static_cast<double>(pairs.size());
    double sx = 0.0, sy = 0.0, sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pairs) {
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw StatisticsError("slope: zero variance in reference values");
    return (n * sxy - sx * sy) / den;
}

double pearson_r_pst(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw StatisticsError("pearson: need at least 2 pairs");
    const auto n = static_cast<double>(pairs.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : pairs) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto& [x, y] : pairs) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw StatisticsError("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

CoefficientTable assemble_table(std::span<const EvalRow> rows) {
    std::map<std::pair<double, Method>, std::vector<std::pair<double, double>>> groups;
    for (const auto& r : rows) {
        groups[{r.t_w, r.method}].push_back({r.p_st, r.p_stc});
    }
    CoefficientTable table;
    for (const auto& [key, pairs] : groups) {
        CoeffCell cell;
        cell.n = pairs.size();
        try {
            cell.a_pst = slope_a_pst(pairs);
            cell.r_pst = pearson_r_pst(pairs);
            cell.a_free = slope_free_intercept(pairs);
        } catch (const StatisticsError& e) {
            cell.flag = std::string("insufficient data: ") + e.what();
        }
        table[key] = cell;
    }
    return table;
}

std::uint64_t recreation_stream_key(std::uint64_t master_seed, const std::string& signal_id,
                                    double t_w, Method method, std::size_t window_index) {
    const std::uint64_t id_hash = fnv1a64(signal_id.data(), signal_id.size());
    const auto tw_ms = static_cast<std::uint64_t>(std::llround(t_w * 1000.0));
    return CounterRng::derive_key(
        master_seed,
        {id_hash, tw_ms, static_cast<std::uint64_t>(method), window_index});
}

namespace {

SampledWaveform recreate_full(const std::string& id, const SampledWaveform& w,
                              const std::vector<VfiRecord>& records, double t_w, Method method,
                              const EvalConfig& cfg) {
    RecreationParams params = cfg.base_params;
    params.method = method;
    params.u_nominal = w.u_nominal;
    params.rms_dt = 1.0 / (2.0 * w.carrier_hz);

    SampledWaveform out;
    out.rate = w.rate;
    out.u_nominal = w.u_nominal;
    out.carrier_hz = w.carrier_hz;
    out.samples.reserve(records.size() *
                        static_cast<std::size_t>(std::llround(t_w * w.rate)));
    for (const auto& rec : records) {
        params.seed = recreation_stream_key(cfg.master_seed, id, t_w, method, rec.window_index);
        const TrajectoryBuild build = build_trajectory(rec, params);
        const double offset = static_cast<double>(rec.window_index) * t_w;
        SampledWaveform win = synthesize_from_trajectory(build.trajectory, w.carrier_hz, w.rate,
                                                         w.u_nominal, offset);
        out.samples.insert(out.samples.end(), win.samples.begin(), win.samples.end());
    }
    return out;
}

} // namespace

std::vector<EvalRow> evaluate_signal(const std::string& id, const SampledWaveform& w,
                                     const EvalConfig& cfg) {
    w.validate();
    if (w.duration_s() + 1e-9 < cfg.min_duration_s) {
        throw ParameterError(id + ": waveform covers " +
                             detail::format_double(w.duration_s()) +
                             " s, need at least " + detail::format_double(cfg.min_duration_s));
    }
    const FlickerResult ref = compute_pst(compute_pinst(w));
    const RmsSeries rms = compute_rms_series(w);
    const std::vector<ChangeEvent> events =
        detect_changes(rms, w.u_nominal, cfg.sr_threshold_rel);

    std::vector<EvalRow> rows;
    for (double t_w : cfg.t_w_list) {
        const std::vector<VfiRecord> records = aggregate_vfi(rms, events, t_w);
        for (Method method : cfg.methods) {
            const SampledWaveform rec = recreate_full(id, w, records, t_w, method, cfg);
            const FlickerResult rc = compute_pst(compute_pinst(rec));
            rows.push_back({id, t_w, method, ref.p_st, rc.p_st});
        }
    }
    return rows;
}

EvalOutcome run_evaluation(const std::vector<DatasetEntry>& dataset, const EvalConfig& cfg) {
    if (cfg.t_w_list.empty()) throw ParameterError("run_evaluation: t_w list is empty");
    if (cfg.methods.empty()) throw ParameterError("run_evaluation: method list is empty");

    struct Slot {
        std::vector<EvalRow> rows;
        std::optional<SignalFailure> failure;
    };
    std::vector<Slot> slots(dataset.size());

    const int threads = std::max(1, cfg.threads);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= dataset.size()) return;
            try {
                const SampledWaveform w = dataset[i].load();
                slots[i].rows = evaluate_signal(dataset[i].id, w, cfg);
            } catch (const std::exception& e) {
                slots[i].failure = SignalFailure{dataset[i].id, e.what()};
            }
        }
    };
    if (threads == 1 || dataset.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int n_threads = std::min<int>(threads, static_cast<int>(dataset.size()));
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EvalOutcome out;
    for (auto& slot : slots) {
        if (slot.failure) out.failures.push_back(*slot.failure);
        for (auto& row : slot.rows) out.rows.push_back(std::move(row));
    }
    std::sort(out.rows.begin(), out.rows.end(), [](const EvalRow& a, const EvalRow& b) {
        return std::tie(a.signal_id, a.t_w, a.method) < std::tie(b.signal_id, b.t_w, b.method);
    });

    std::vector<EvalRow> low, high;
    for (const auto& r : out.rows) {
        (r.p_st < cfg.split_threshold ? low : high).push_back(r);
    }
    out.all = assemble_table(out.rows);
    out.low = assemble_table(low);
    out.high = assemble_table(high);
    return out;
}

void write_pairs_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << "signal_id,t_w,method,p_st,p_stc\n";
    for (const auto& r : rows) {
        out << r.signal_id << ',' << detail::format_double(r.t_w) << ',' << method_name(r.method)
            << ',' << detail::format_double(r.p_st) << ',' << detail::format_double(r.p_stc)
            << "\n";
    }
    if (!out) throw FormatError(path.string() + ": write failed");
}

void write_table_csv(const std::filesystem::path& path, const CoefficientTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << "t_w,method,n,a_pst,r_pst,a_free,flag\n";
    for (const auto& [key, cell] : table) {
        out << detail::format_double(key.first) << ',' << method_name(key.second) << ','
            << cell.n << ',' << detail::format_double(cell.a_pst) << ','
            << detail::format_double(cell.r_pst) << ',' << detail::format_double(cell.a_free)
            << ',' << cell.flag << "\n";
    }
    if (!out) throw FormatError(path.string() + ": write failed");
}

} // namespace vflux
