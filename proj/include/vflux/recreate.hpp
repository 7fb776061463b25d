#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vflux/vfi.hpp"
#include "vflux/waveform.hpp"

namespace vflux {

enum class Method { M1, M2, M3 };

const char* method_name(Method m);
Method parse_method(const std::string& s); // throws ParameterError

/// Knobs for trajectory recreation. sr_const_rel is the M2 ramp speed in
/// units of delta_u per second (3.0 means any change completes within 1/3 s);
/// gamma draws for M3 are in percent of delta_u per second. The speed floor
/// keeps every recreated change fast enough to re-qualify under the detection
/// threshold, and rms_dt is the refresh interval used as the M1 step width.
struct RecreationParams {
    Method method = Method::M1;
    std::uint64_t seed = 0;
    double sr_const_rel = 3.0;
    double gamma_shape = 1.0;
    double gamma_scale = 300.0;
    double min_speed_rel_un = 0.01;
    double u_nominal = 230.0;
    double rms_dt = 0.01;
};

/// Piecewise-linear rms level over one window [0, t_w].
struct LevelTrajectory {
    struct Breakpoint {
        double t = 0.0;
        double level = 0.0;
    };
    std::vector<Breakpoint> breakpoints;

    double span() const { return breakpoints.empty() ? 0.0 : breakpoints.back().t; }
    double level_at(double t) const;
};

/// A change whose magnitude had to be reduced to stay within [u_min, u_max].
struct ClampWarning {
    std::size_t window_index = 0;
    std::size_t ordinal = 0; ///< 1-based change index within the window
    double requested = 0.0;  ///< representative amplitude [V]
    double applied = 0.0;    ///< magnitude actually used [V]
    std::string reason;
};

struct TrajectoryBuild {
    LevelTrajectory trajectory;
    std::vector<ClampWarning> warnings;
};

/// One amplitude per counted change, from the subrange representative ratios
/// 1.00 / 0.85 / 0.75 / {0.69,0.60,0.50} / {0.49,0.40,0.30} / {0.29,0.20,0.10}
/// / {0.09,0.05,0.01} of delta_u. Three-way subranges split their count into
/// equal thirds with the remainder on the central value.
std::vector<double> representative_amplitudes(const VfiRecord& v);

/// Recreate the level trajectory for one record. Changes are centered on
/// evenly spaced slots in random (seeded) order; each moves the level toward
/// or across u_avg, falling back to the opposite sign and finally clamping
/// when the bounds leave no room.
TrajectoryBuild build_trajectory(const VfiRecord& v, const RecreationParams& p);

/// u(t) = sqrt(2)*L(t)*sin(2*pi*carrier*(t + t_offset)); t_offset keeps the
/// carrier phase continuous when window trajectories are concatenated.
SampledWaveform synthesize_from_trajectory(const LevelTrajectory& traj, double carrier_hz,
                                           double rate, double u_nominal,
                                           double t_offset = 0.0);

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<std::pair<double, double>>& points);
void write_warnings_csv(const std::filesystem::path& path,
                        const std::vector<ClampWarning>& warnings);

} // namespace vflux
