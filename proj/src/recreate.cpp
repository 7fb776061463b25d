#include "vflux/recreate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vflux/rng.hpp"

namespace vflux {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
} // namespace

const char* method_name(Method m) {
    switch (m) {
    case Method::M1: return "M1";
    case Method::M2: return "M2";
    case Method::M3: return "M3";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "M1" || s == "m1") return Method::M1;
    if (s == "M2" || s == "m2") return Method::M2;
    if (s == "M3" || s == "m3") return Method::M3;
    throw ParameterError("unknown method '" + s + "' (expected M1, M2 or M3)");
}

double LevelTrajectory::level_at(double t) const {
    if (breakpoints.empty()) return 0.0;
    if (t <= breakpoints.front().t) return breakpoints.front().level;
    if (t >= breakpoints.back().t) return breakpoints.back().level;
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t,
                               [](double x, const Breakpoint& b) { return x < b.t; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double f = (t - lo.t) / (hi.t - lo.t);
    return lo.level + f * (hi.level - lo.level);
}

std::vector<double> representative_amplitudes(const VfiRecord& v) {
    // Central ratio per subrange; three-way subranges also carry edge ratios.
    static constexpr double singles[3] = {1.00, 0.85, 0.75};
    static constexpr double triples[4][3] = {
        {0.69, 0.60, 0.50}, {0.49, 0.40, 0.30}, {0.29, 0.20, 0.10}, {0.09, 0.05, 0.01}};

    std::vector<double> amps;
    amps.reserve(v.total_count());
    for (int b = 0; b < 3; ++b) {
        for (std::uint32_t c = 0; c < v.counts[static_cast<std::size_t>(b)]; ++c) {
            amps.push_back(singles[b] * v.delta_u);
        }
    }
    for (int b = 3; b < kSubrangeCount; ++b) {
        const std::uint32_t n = v.counts[static_cast<std::size_t>(b)];
        const std::uint32_t third = n / 3;
        const std::uint32_t rest = n % 3; // remainder on the central value
        const auto& r = triples[b - 3];
        for (std::uint32_t c = 0; c < third; ++c) amps.push_back(r[0] * v.delta_u);
        for (std::uint32_t c = 0; c < third + rest; ++c) amps.push_back(r[1] * v.delta_u);
        for (std::uint32_t c = 0; c < third; ++c) amps.push_back(r[2] * v.delta_u);
    }
    return amps;
}

namespace {

void validate_record(const VfiRecord& v) {
    if (!(v.t_w > 0.0)) throw ValidationError("record: t_w must be positive");
    if (!(v.u_min <= v.u_avg && v.u_avg <= v.u_max)) {
        throw ValidationError("record " + std::to_string(v.window_index) +
                              ": requires u_min <= u_avg <= u_max");
    }
    const double tol = 1e-9 * std::max(1.0, v.u_max);
    if (v.delta_u > v.u_max - v.u_min + tol) {
        throw ValidationError("record " + std::to_string(v.window_index) +
                              ": delta_u exceeds u_max - u_min (infeasible)");
    }
    if (v.delta_u < 0.0) throw ValidationError("record: delta_u must be >= 0");
    const bool has_changes = v.total_count() > 0;
    if (has_changes != (v.delta_u > 0.0)) {
        throw ValidationError("record " + std::to_string(v.window_index) +
                              ": delta_u and counts disagree");
    }
}

} // namespace

TrajectoryBuild build_trajectory(const VfiRecord& v, const RecreationParams& p) {
    validate_record(v);
    if (!(p.sr_const_rel > 0.0) || !(p.gamma_shape > 0.0) || !(p.gamma_scale > 0.0)) {
        throw ParameterError("recreation params must be positive");
    }

    TrajectoryBuild out;
    auto& bps = out.trajectory.breakpoints;
    const std::size_t n = v.total_count();
    bps.push_back({0.0, v.u_avg});
    if (n == 0) {
        bps.push_back({v.t_w, v.u_avg});
        return out;
    }

    std::vector<double> amps = representative_amplitudes(v);
    CounterRng rng(p.seed);
    // Fisher-Yates with the stream's uniform draws.
    for (std::size_t i = amps.size() - 1; i > 0; --i) {
        const std::size_t j = rng.next_below(i + 1);
        std::swap(amps[i], amps[j]);
    }

    const double slot = v.t_w / static_cast<double>(n);
    const double bound_tol = 1e-9 * std::max(1.0, v.u_max);
    double level = v.u_avg;

    auto push = [&bps](double t, double lv) {
        if (!bps.empty() && t <= bps.back().t) {
            if (std::fabs(lv - bps.back().level) <= 1e-12 * std::max(1.0, std::fabs(lv))) return;
            t = std::nextafter(bps.back().t, t + 1.0);
        }
        bps.push_back({t, lv});
    };

    for (std::size_t i = 1; i <= n; ++i) {
        const double center = (static_cast<double>(i) - 0.5) * slot;
        const double requested = amps[i - 1];

        int sign;
        if (level > v.u_avg) sign = -1;
        else if (level < v.u_avg) sign = 1;
        else sign = rng.next_unit() < 0.5 ? 1 : -1;

        auto feasible = [&](double x) {
            return x >= v.u_min - bound_tol && x <= v.u_max + bound_tol;
        };

        double applied = requested;
        if (!feasible(level + sign * requested)) {
            if (feasible(level - sign * requested)) {
                sign = -sign;
            } else {
                const double up = v.u_max - level;
                const double down = level - v.u_min;
                if (up > down) sign = 1;
                else if (down > up) sign = -1;
                const double room = std::max(sign > 0 ? up : down, 0.0);
                applied = std::min(requested, room);
                out.warnings.push_back({v.window_index, i, requested, applied,
                                        "bounds leave no room for the full amplitude"});
            }
        }
        if (applied <= 0.0) continue; // clamped to nothing; warned above

        double duration;
        switch (p.method) {
        case Method::M1:
            duration = std::min(p.rms_dt, slot);
            break;
        case Method::M2:
            duration = std::min(applied / (p.sr_const_rel * v.delta_u), slot);
            break;
        case Method::M3: {
            double pct_per_s = rng.next_gamma(p.gamma_shape, p.gamma_scale);
            const double floor_pct = 100.0 * p.min_speed_rel_un * p.u_nominal / v.delta_u;
            pct_per_s = std::max(pct_per_s, floor_pct);
            duration = std::min(100.0 * applied / (pct_per_s * v.delta_u), slot);
            break;
        }
        default:
            throw ParameterError("unknown method");
        }
        duration = std::max(duration, 1e-9);

        const double next_level =
            std::clamp(level + sign * applied, v.u_min, v.u_max);
        push(center - 0.5 * duration, level);
        push(center + 0.5 * duration, next_level);
        level = next_level;
    }
    push(v.t_w, level);
    return out;
}

SampledWaveform synthesize_from_trajectory(const LevelTrajectory& traj, double carrier_hz,
                                           double rate, double u_nominal, double t_offset) {
    if (traj.breakpoints.size() < 2) throw ParameterError("trajectory needs >= 2 breakpoints");
    for (std::size_t i = 1; i < traj.breakpoints.size(); ++i) {
        if (!(traj.breakpoints[i].t > traj.breakpoints[i - 1].t)) {
            throw ParameterError("trajectory breakpoints must be strictly increasing in t");
        }
    }
    if (!(carrier_hz > 0.0) || !(rate > 0.0) || !(u_nominal > 0.0)) {
        throw ParameterError("carrier, rate and u_nominal must be positive");
    }
    if (rate < 40.0 * carrier_hz) {
        throw ParameterError("rate too low for carrier: need rate >= 40*carrier_hz");
    }

    const double span = traj.span();
    const auto n = static_cast<std::size_t>(std::llround(span * rate));
    if (n == 0) throw ParameterError("trajectory span too short for sampling rate");

    SampledWaveform w;
    w.rate = rate;
    w.u_nominal = u_nominal;
    w.carrier_hz = carrier_hz;
    w.samples.resize(n);

    std::size_t seg = 0; // walking pointer into breakpoints
    const auto& bp = traj.breakpoints;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        while (seg + 2 < bp.size() && t >= bp[seg + 1].t) ++seg;
        double lv;
        if (t <= bp[seg].t) {
            lv = bp[seg].level;
        } else if (t >= bp[seg + 1].t) {
            lv = bp[seg + 1].level;
        } else {
            const double f = (t - bp[seg].t) / (bp[seg + 1].t - bp[seg].t);
            lv = bp[seg].level + f * (bp[seg + 1].level - bp[seg].level);
        }
        w.samples[i] = kSqrt2 * lv * std::sin(2.0 * kPi * carrier_hz * (t + t_offset));
    }
    return w;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<std::pair<double, double>>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << "t_s,level_v\n";
    for (const auto& [t, lv] : points) {
        out << detail::format_double(t) << ',' << detail::format_double(lv) << "\n";
    }
    if (!out) throw FormatError(path.string() + ": write failed");
}

void write_warnings_csv(const std::filesystem::path& path,
                        const std::vector<ClampWarning>& warnings) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << "window_index,ordinal,requested_v,applied_v,reason\n";
    for (const auto& wn : warnings) {
        out << wn.window_index << ',' << wn.ordinal << ',' << detail::format_double(wn.requested)
            << ',' << detail::format_double(wn.applied) << ',' << wn.reason << "\n";
    }
    if (!out) throw FormatError(path.string() + ": write failed");
}

} // namespace vflux
