#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vflux/errors.hpp"

namespace vflux {

/// Raw voltage samples plus the metadata needed to interpret them.
/// Immutable by convention once constructed; safe to share across threads.
struct SampledWaveform {
    std::vector<double> samples; ///< instantaneous voltage [V]
    double rate = 0.0;           ///< samples per second [Hz]
    double u_nominal = 0.0;      ///< nominal rms voltage U_N [V]
    double carrier_hz = 0.0;     ///< nominal power frequency [Hz]

    double duration_s() const {
        return rate > 0.0 ? static_cast<double>(samples.size()) / rate : 0.0;
    }

    /// Throws ParameterError if any structural invariant is broken.
    void validate() const;
};

enum class ModulationKind { rectangular, sinusoidal, ramp, none };

/// Test-signal modulation. rel_amplitude is the peak-to-peak envelope swing
/// relative to the nominal rms level (the usual dV/V convention).
struct ModulationSpec {
    ModulationKind kind = ModulationKind::none;
    double rel_amplitude = 0.0; ///< dV/V, dimensionless
    double rate_cpm = 0.0;      ///< changes per minute (rectangular) or Hz (sinusoidal)
    double duration_s = 0.0;    ///< seconds
};

/// Amplitude-modulated sine u(t) = sqrt(2)*U_N*(1 + m(t))*sin(2*pi*f*t).
/// Rectangular modulation uses 50% duty with transitions snapped to carrier
/// zero crossings; the ramp kind sweeps m linearly from -a/2 to +a/2 over the
/// full duration.
SampledWaveform synthesize_am(double u_nominal, double carrier_hz, double rate,
                              const ModulationSpec& mod);

enum class WaveFormat { csv, raw_f64 };

/// Guess the on-disk format from the file extension (.csv -> csv, else raw_f64).
WaveFormat guess_format(const std::filesystem::path& path);

/// Load a waveform. CSV carries a `# rate=... u_nominal=... carrier=...`
/// header line; raw_f64 is little-endian doubles next to `<file>.meta.json`.
SampledWaveform load_waveform(const std::filesystem::path& path, WaveFormat format);

void save_waveform(const SampledWaveform& w, const std::filesystem::path& path,
                   WaveFormat format);

namespace detail {
std::string format_double(double v);       // shortest round-trip decimal
double parse_double(const std::string& s); // strict, full-token
} // namespace detail

} // namespace vflux
