#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "vflux/waveform.hpp"

namespace vflux {

/// Half-cycle rms values at fixed cadence. Timestamps are window centers:
/// t(k) = t0 + k*dt with t0 = dt/2 relative to the waveform start.
struct RmsSeries {
    std::vector<double> values; ///< rms voltage [V]
    double dt = 0.0;            ///< seconds between values (= half carrier period)
    double t0 = 0.0;            ///< offset of first value [s]

    double time_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double duration_s() const { return static_cast<double>(values.size()) * dt; }
};

/// One detected monotonic change in the rms series.
struct ChangeEvent {
    double t_start = 0.0;
    double t_end = 0.0;
    double v_start = 0.0;
    double v_end = 0.0;
    double amplitude = 0.0; ///< |v_end - v_start| [V]
    double speed = 0.0;     ///< amplitude / (t_end - t_start) [V/s]
    int sign = 0;           ///< sgn(v_end - v_start)
};

constexpr int kSubrangeCount = 7;

/// Per-window aggregate: extrema, the dominant amplitude delta_u, and the
/// change counts per delta_v/delta_u subrange
/// [1.0,0.9], (0.9,0.8], (0.8,0.7], (0.7,0.5], (0.5,0.3], (0.3,0.1], (0.1,0.0).
struct VfiRecord {
    std::size_t window_index = 0;
    double t_w = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
    double u_avg = 0.0;
    double delta_u = 0.0;
    std::array<std::uint32_t, kSubrangeCount> counts{};

    std::uint32_t total_count() const {
        std::uint32_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }

    /// Subrange count expressed as a per-minute rate.
    double rate_per_minute(int bin) const {
        return static_cast<double>(counts[static_cast<std::size_t>(bin)]) * 60.0 / t_w;
    }
};

/// Non-overlapping rms over each half carrier cycle; dt = 1/(2*carrier_hz).
RmsSeries compute_rms_series(const SampledWaveform& w);

/// Segment the rms series into maximal monotonic runs (plateaus longer than
/// two samples split runs; reversals below hysteresis_rel*u_nominal are
/// absorbed as jitter) and keep runs whose mean speed reaches
/// sr_threshold_rel*u_nominal volts per second.
std::vector<ChangeEvent> detect_changes(const RmsSeries& rms, double u_nominal,
                                        double sr_threshold_rel = 0.01,
                                        double hysteresis_rel = 1e-4);

/// Aggregate events into one record per full window of t_w seconds; events are
/// assigned by t_start and the trailing partial window is dropped.
std::vector<VfiRecord> aggregate_vfi(const RmsSeries& rms,
                                     const std::vector<ChangeEvent>& events, double t_w);

/// Subrange index (0-based) for a ratio delta_v/delta_u in (0, 1].
int subrange_bin(double ratio);

void write_vfi_csv(const std::filesystem::path& path, const std::vector<VfiRecord>& records);
std::vector<VfiRecord> read_vfi_csv(const std::filesystem::path& path);

} // namespace vflux
