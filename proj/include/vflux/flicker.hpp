#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "vflux/waveform.hpp"

namespace vflux {

/// Instantaneous flicker sensation sampled every dt seconds; 1.0 is the
/// perceptibility threshold. The first settle_skip seconds carry filter
/// transients and are excluded from statistics.
struct PinstSeries {
    std::vector<double> values;
    double dt = 0.02;
    double settle_skip = 20.0;

    std::size_t settle_count() const {
        return static_cast<std::size_t>(settle_skip / dt + 0.5);
    }
    double max_after_settling() const;
};

/// Short-term severity plus the exceedance percentiles it was derived from.
struct FlickerResult {
    double p_st = 0.0;
    std::map<double, double> percentiles; ///< percent exceeded -> P_inst level
};

struct FlickerOptions {
    /// Evaluation window after settling, seconds; 0 uses everything available.
    double window_s = 0.0;
};

/// Percentiles used by the severity formula.
extern const double kPstPercentiles[15];

/// Lamp-eye-brain weighted demodulation chain (230 V / 50 Hz weighting):
/// running-rms normalization, squaring demodulator, 0.05 Hz high-pass,
/// 6th-order 35 Hz Butterworth low-pass, weighting filter, squaring and
/// 300 ms first-order smoothing. Internally resampled to 2 kHz; output
/// decimated to 20 ms.
PinstSeries compute_pinst(const SampledWaveform& w);

/// Exceedance percentiles by exact sorting, the standard smoothing, and
/// P_st = sqrt(0.0314 P0.1 + 0.0525 P1s + 0.0657 P3s + 0.28 P10s + 0.08 P50s).
FlickerResult compute_pst(const PinstSeries& p, const FlickerOptions& opt = {});

/// Level exceeded pct% of the time in sorted_ascending (linear interpolation
/// between order statistics).
double exceedance_level(const std::vector<double>& sorted_ascending, double pct);

} // namespace vflux
