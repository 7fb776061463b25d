#include "vflux/vfi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace vflux {

RmsSeries compute_rms_series(const SampledWaveform& w) {
    w.validate();
    const double spp = w.rate / (2.0 * w.carrier_hz); // samples per half cycle
    const std::size_t n = w.samples.size();
    const auto n_win = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) / spp + 1e-9));
    if (n_win == 0) throw ParameterError("waveform shorter than one half carrier cycle");

    RmsSeries out;
    out.dt = 1.0 / (2.0 * w.carrier_hz);
    out.t0 = 0.5 * out.dt;
    out.values.resize(n_win);
    for (std::size_t k = 0; k < n_win; ++k) {
        const auto lo = static_cast<std::size_t>(std::llround(static_cast<double>(k) * spp));
        auto hi = static_cast<std::size_t>(std::llround(static_cast<double>(k + 1) * spp));
        hi = std::min(hi, n);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += w.samples[i] * w.samples[i];
        out.values[k] = std::sqrt(acc / static_cast<double>(hi - lo));
    }
    return out;
}

std::vector<ChangeEvent> detect_changes(const RmsSeries& rms, double u_nominal,
                                        double sr_threshold_rel, double hysteresis_rel) {
    if (!(rms.dt > 0.0)) throw ParameterError("rms series dt must be positive");
    if (!(u_nominal > 0.0)) throw ParameterError("u_nominal must be positive");
    if (!(sr_threshold_rel > 0.0)) throw ParameterError("sr_threshold_rel must be positive");
    for (double v : rms.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ParameterError("rms values must be finite and non-negative");
        }
    }

    const std::size_t n = rms.values.size();
    std::vector<ChangeEvent> events;
    if (n < 2) return events;

    const double hyst = hysteresis_rel * u_nominal;
    const double sr_min = sr_threshold_rel * u_nominal;
    const auto& v = rms.values;

    auto emit = [&](std::size_t a, std::size_t e) {
        if (e <= a) return;
        const double dv = v[e] - v[a];
        if (dv == 0.0) return;
        const double amp = std::fabs(dv);
        const double dur = static_cast<double>(e - a) * rms.dt;
        const double speed = amp / dur;
        if (speed < sr_min) return;
        events.push_back(ChangeEvent{rms.time_at(a), rms.time_at(e), v[a], v[e], amp, speed,
                                     dv > 0.0 ? 1 : -1});
    };

    // Walk the series tracking the running extremum of the current monotonic
    // run. The extremum only advances on strict improvement, so a run ending
    // into a flat top keeps its true endpoint. Counter-direction excursions
    // below `hyst` are jitter and absorbed. Plateaus of three or more samples
    // equal up to a quantization tolerance close the run and re-anchor at the
    // plateau's last sample, so quiet stretches never dilute a change's mean
    // speed.
    const double quant = 1e-7 * u_nominal;
    std::size_t anchor = 0; // run start
    std::size_t extremum = 0;
    int dir = 0;
    std::size_t plateau_len = 1;

    for (std::size_t i = 1; i < n; ++i) {
        plateau_len = (std::fabs(v[i] - v[i - 1]) <= quant) ? plateau_len + 1 : 1;
        if (plateau_len >= 3) {
            if (plateau_len == 3 && dir != 0) emit(anchor, extremum);
            anchor = i;
            extremum = i;
            dir = 0;
            continue;
        }

        if (dir == 0) {
            if (std::fabs(v[i] - v[anchor]) < hyst) continue; // undirected jitter
            dir = v[i] > v[anchor] ? 1 : -1;
            extremum = i;
            continue;
        }

        const bool improves = (dir > 0) ? (v[i] > v[extremum]) : (v[i] < v[extremum]);
        if (improves) {
            extremum = i;
            continue;
        }
        const double depth = std::fabs(v[i] - v[extremum]);
        if (depth < hyst) continue; // micro-reversal, absorbed
        // Genuine reversal: close the run at its extremum, start the next one.
        emit(anchor, extremum);
        anchor = extremum;
        extremum = i;
        dir = -dir;
    }
    if (dir != 0) emit(anchor, extremum);

    return events;
}

int subrange_bin(double ratio) {
    // Boundaries per the subrange definition; the tiny guard keeps ratios that
    // are equal to a boundary up to rounding on the inclusive side.
    static constexpr double bounds[6] = {0.9, 0.8, 0.7, 0.5, 0.3, 0.1};
    constexpr double guard = 1e-9;
    for (int b = 0; b < 6; ++b) {
        if (ratio >= bounds[b] - guard) return b;
    }
    return 6;
}

std::vector<VfiRecord> aggregate_vfi(const RmsSeries& rms,
                                     const std::vector<ChangeEvent>& events, double t_w) {
    if (!(t_w > 0.0)) throw ParameterError("t_w must be positive");
    const double duration = rms.duration_s();
    const auto n_win = static_cast<std::size_t>(std::floor(duration / t_w + 1e-9));
    if (n_win == 0) throw ParameterError("t_w larger than the analyzed duration");

    std::vector<VfiRecord> records(n_win);
    for (std::size_t wdx = 0; wdx < n_win; ++wdx) {
        records[wdx].window_index = wdx;
        records[wdx].t_w = t_w;
        records[wdx].u_min = std::numeric_limits<double>::infinity();
        records[wdx].u_max = -std::numeric_limits<double>::infinity();
    }

    const double horizon = static_cast<double>(n_win) * t_w;

    std::vector<double> sums(n_win, 0.0);
    std::vector<std::size_t> counts_rms(n_win, 0);
    for (std::size_t k = 0; k < rms.values.size(); ++k) {
        const double t = rms.time_at(k);
        if (t >= horizon) break;
        const auto wdx = static_cast<std::size_t>(t / t_w);
        auto& r = records[wdx];
        r.u_min = std::min(r.u_min, rms.values[k]);
        r.u_max = std::max(r.u_max, rms.values[k]);
        sums[wdx] += rms.values[k];
        ++counts_rms[wdx];
    }
    for (std::size_t wdx = 0; wdx < n_win; ++wdx) {
        if (counts_rms[wdx] == 0) {
            throw ParameterError("window without rms samples; t_w finer than rms cadence");
        }
        records[wdx].u_avg = sums[wdx] / static_cast<double>(counts_rms[wdx]);
    }

    // delta_u first (max amplitude per window), then bin ratios against it.
    // An event straddling a boundary is assigned whole by t_start; the window
    // extrema are widened to its endpoints so delta_u <= u_max - u_min holds.
    std::vector<std::vector<const ChangeEvent*>> per_window(n_win);
    for (const auto& ev : events) {
        if (ev.t_start >= horizon) continue;
        const auto wdx = static_cast<std::size_t>(ev.t_start / t_w);
        per_window[wdx].push_back(&ev);
        auto& r = records[wdx];
        r.delta_u = std::max(r.delta_u, ev.amplitude);
        r.u_min = std::min({r.u_min, ev.v_start, ev.v_end});
        r.u_max = std::max({r.u_max, ev.v_start, ev.v_end});
    }
    for (std::size_t wdx = 0; wdx < n_win; ++wdx) {
        auto& r = records[wdx];
        for (const ChangeEvent* ev : per_window[wdx]) {
            const double ratio = std::min(ev->amplitude / r.delta_u, 1.0);
            ++r.counts[static_cast<std::size_t>(subrange_bin(ratio))];
        }
    }
    return records;
}

namespace {
constexpr const char* kVfiHeader =
    "window_index,t_w,u_min,u_max,u_avg,delta_u,f10_09,f09_08,f08_07,f07_05,f05_03,f03_01,f01_00";
}

void write_vfi_csv(const std::filesystem::path& path, const std::vector<VfiRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << kVfiHeader << "\n";
    for (const auto& r : records) {
        out << r.window_index << ',' << detail::format_double(r.t_w) << ','
            << detail::format_double(r.u_min) << ',' << detail::format_double(r.u_max) << ','
            << detail::format_double(r.u_avg) << ',' << detail::format_double(r.delta_u);
        for (auto c : r.counts) out << ',' << c;
        out << "\n";
    }
    if (!out) throw FormatError(path.string() + ": write failed");
}

std::vector<VfiRecord> read_vfi_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    };
    if (strip(line) != kVfiHeader) {
        throw FormatError(path.string() + ": unexpected header (want '" + std::string(kVfiHeader) + "')");
    }
    std::vector<VfiRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = strip(line);
        if (line.empty()) continue;
        ++row;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 6 + kSubrangeCount) {
            throw FormatError(path.string() + ": row " + std::to_string(row) + ": expected " +
                              std::to_string(6 + kSubrangeCount) + " fields");
        }
        try {
            VfiRecord r;
            r.window_index = static_cast<std::size_t>(detail::parse_double(fields[0]));
            r.t_w = detail::parse_double(fields[1]);
            r.u_min = detail::parse_double(fields[2]);
            r.u_max = detail::parse_double(fields[3]);
            r.u_avg = detail::parse_double(fields[4]);
            r.delta_u = detail::parse_double(fields[5]);
            for (int b = 0; b < kSubrangeCount; ++b) {
                const double c = detail::parse_double(fields[static_cast<std::size_t>(6 + b)]);
                if (c < 0.0 || c != std::floor(c)) {
                    throw FormatError("counts must be non-negative integers");
                }
                r.counts[static_cast<std::size_t>(b)] = static_cast<std::uint32_t>(c);
            }
            records.push_back(r);
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ": row " + std::to_string(row) + ": " + e.what());
        }
    }
    return records;
}

} // namespace vflux
