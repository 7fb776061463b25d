#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "vflux/recreate.hpp"
#include "vflux/rng.hpp"

using namespace vflux;

namespace {

VfiRecord make_record(double t_w, double u_min, double u_max, double u_avg, double delta_u,
                      std::array<std::uint32_t, 7> counts, std::size_t window_index = 0) {
    VfiRecord r;
    r.window_index = window_index;
    r.t_w = t_w;
    r.u_min = u_min;
    r.u_max = u_max;
    r.u_avg = u_avg;
    r.delta_u = delta_u;
    r.counts = counts;
    return r;
}

std::size_t count_level_changes(const LevelTrajectory& traj) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < traj.breakpoints.size(); ++i) {
        if (traj.breakpoints[i].level != traj.breakpoints[i - 1].level) ++n;
    }
    return n;
}

} // namespace

TEST_CASE("representative amplitudes: single change in the second subrange") {
    const auto r = make_record(10.0, 228.0, 232.0, 230.0, 2.0, {0, 1, 0, 0, 0, 0, 0});
    const auto amps = representative_amplitudes(r);
    REQUIRE(amps.size() == 1);
    CHECK(amps[0] == doctest::Approx(1.70)); // 0.85 * delta_u
}

TEST_CASE("representative amplitudes: three-way split with remainder on the center") {
    const auto r = make_record(10.0, 229.0, 231.0, 230.0, 1.0, {0, 0, 0, 7, 0, 0, 0});
    auto amps = representative_amplitudes(r);
    REQUIRE(amps.size() == 7);
    std::map<double, int> hist;
    for (double a : amps) ++hist[a];
    CHECK(hist[0.69] == 2);
    CHECK(hist[0.60] == 3);
    CHECK(hist[0.50] == 2);
}

TEST_CASE("representative amplitudes: all-zero counts give an empty list") {
    const auto r = make_record(10.0, 230.0, 230.0, 230.0, 0.0, {});
    CHECK(representative_amplitudes(r).empty());
}

TEST_CASE("representative amplitudes map back into their source subrange") {
    const auto r = make_record(60.0, 200.0, 260.0, 230.0, 7.0, {2, 3, 4, 7, 8, 6, 5});
    const auto amps = representative_amplitudes(r);
    REQUIRE(amps.size() == r.total_count());
    std::array<std::uint32_t, 7> rebinned{};
    for (double a : amps) ++rebinned[static_cast<std::size_t>(subrange_bin(a / r.delta_u))];
    CHECK(rebinned == r.counts);
}

TEST_CASE("no changes recreate the constant average level") {
    const auto r = make_record(10.0, 229.5, 230.5, 230.0, 0.0, {});
    RecreationParams p;
    const auto build = build_trajectory(r, p);
    CHECK(build.warnings.empty());
    REQUIRE(build.trajectory.breakpoints.size() == 2);
    CHECK(build.trajectory.breakpoints.front().level == doctest::Approx(230.0));
    CHECK(build.trajectory.breakpoints.back().level == doctest::Approx(230.0));
    CHECK(build.trajectory.span() == doctest::Approx(10.0));
}

TEST_CASE("both directions infeasible: magnitude clamps to the available room") {
    const auto r = make_record(10.0, 229.0, 231.0, 230.0, 2.0, {1, 0, 0, 0, 0, 0, 0});
    RecreationParams p;
    p.method = Method::M1;
    p.seed = 7;
    const auto build = build_trajectory(r, p);
    REQUIRE(build.warnings.size() == 1);
    CHECK(build.warnings[0].requested == doctest::Approx(2.0));
    CHECK(build.warnings[0].applied == doctest::Approx(1.0));
    std::size_t changes = count_level_changes(build.trajectory);
    CHECK(changes == 1);
    for (const auto& bp : build.trajectory.breakpoints) {
        CHECK(bp.level >= 229.0 - 1e-9);
        CHECK(bp.level <= 231.0 + 1e-9);
    }
}

TEST_CASE("M2 ramp lasts delta_v over 3*delta_u seconds") {
    const auto r = make_record(10.0, 227.0, 232.0, 229.4, 1.2, {1, 0, 0, 0, 0, 0, 0});
    RecreationParams p;
    p.method = Method::M2;
    const auto build = build_trajectory(r, p);
    CHECK(build.warnings.empty());
    // one ramp: find the two breakpoints with differing levels
    const auto& bps = build.trajectory.breakpoints;
    double ramp_duration = -1.0;
    for (std::size_t i = 1; i < bps.size(); ++i) {
        if (bps[i].level != bps[i - 1].level) {
            ramp_duration = bps[i].t - bps[i - 1].t;
        }
    }
    CHECK(ramp_duration == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("trajectories are deterministic in the seed") {
    const auto r = make_record(30.0, 220.0, 240.0, 230.0, 5.0, {1, 2, 0, 4, 3, 2, 1});
    RecreationParams p;
    p.method = Method::M3;
    p.seed = 1234;
    const auto a = build_trajectory(r, p);
    const auto b = build_trajectory(r, p);
    REQUIRE(a.trajectory.breakpoints.size() == b.trajectory.breakpoints.size());
    for (std::size_t i = 0; i < a.trajectory.breakpoints.size(); ++i) {
        CHECK(a.trajectory.breakpoints[i].t == b.trajectory.breakpoints[i].t);
        CHECK(a.trajectory.breakpoints[i].level == b.trajectory.breakpoints[i].level);
    }
    p.seed = 1235;
    const auto c = build_trajectory(r, p);
    bool same = a.trajectory.breakpoints.size() == c.trajectory.breakpoints.size();
    if (same) {
        for (std::size_t i = 0; i < a.trajectory.breakpoints.size(); ++i) {
            same = same && a.trajectory.breakpoints[i].level == c.trajectory.breakpoints[i].level;
        }
    }
    CHECK_FALSE(same);
}

TEST_CASE("every level stays within the record bounds and starts at u_avg") {
    CounterRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<std::uint32_t, 7> counts{};
        for (auto& c : counts) c = static_cast<std::uint32_t>(rng.next_below(4));
        const double delta_u = 1.0 + rng.next_unit() * 6.0;
        const double u_avg = 230.0 + (rng.next_unit() - 0.5) * 4.0;
        const double u_min = u_avg - delta_u * (0.6 + rng.next_unit());
        const double u_max = u_avg + delta_u * (0.6 + rng.next_unit());
        auto rec = make_record(20.0, u_min, u_max, u_avg, delta_u, counts);
        if (rec.total_count() == 0) rec.delta_u = 0.0;
        for (auto method : {Method::M1, Method::M2, Method::M3}) {
            RecreationParams p;
            p.method = method;
            p.seed = rng.next_u64();
            const auto build = build_trajectory(rec, p);
            REQUIRE(!build.trajectory.breakpoints.empty());
            CHECK(build.trajectory.breakpoints.front().level == doctest::Approx(u_avg));
            double prev_t = -1.0;
            for (const auto& bp : build.trajectory.breakpoints) {
                CHECK(bp.t > prev_t);
                prev_t = bp.t;
                CHECK(bp.level >= u_min - 1e-9);
                CHECK(bp.level <= u_max + 1e-9);
            }
            const std::size_t expected =
                rec.total_count() -
                static_cast<std::size_t>(std::count_if(
                    build.warnings.begin(), build.warnings.end(),
                    [](const ClampWarning& w) { return w.applied <= 0.0; }));
            CHECK(count_level_changes(build.trajectory) == expected);
        }
    }
}

TEST_CASE("M3 ramp speeds respect the re-detectability floor") {
    const auto r = make_record(60.0, 210.0, 250.0, 230.0, 4.0, {2, 2, 2, 6, 6, 6, 6});
    RecreationParams p;
    p.method = Method::M3;
    p.seed = 31337;
    p.u_nominal = 230.0;
    const auto build = build_trajectory(r, p);
    const auto& bps = build.trajectory.breakpoints;
    for (std::size_t i = 1; i < bps.size(); ++i) {
        const double dv = std::fabs(bps[i].level - bps[i - 1].level);
        if (dv == 0.0) continue;
        const double speed = dv / (bps[i].t - bps[i - 1].t);
        CHECK(speed >= p.min_speed_rel_un * p.u_nominal - 1e-9);
    }
}

TEST_CASE("synthesis from a constant trajectory is a clean sine") {
    LevelTrajectory traj;
    traj.breakpoints = {{0.0, 230.0}, {2.0, 230.0}};
    const SampledWaveform w = synthesize_from_trajectory(traj, 50.0, 20000.0, 230.0);
    const RmsSeries rms = compute_rms_series(w);
    for (double v : rms.values) CHECK(v == doctest::Approx(230.0).epsilon(1e-6));
}

TEST_CASE("a single M1 step appears as one rms step of the commanded size") {
    const auto r = make_record(4.0, 229.0, 233.0, 230.0, 2.0, {1, 0, 0, 0, 0, 0, 0});
    RecreationParams p;
    p.method = Method::M1;
    p.seed = 5;
    const auto build = build_trajectory(r, p);
    CHECK(build.warnings.empty());
    const SampledWaveform w = synthesize_from_trajectory(build.trajectory, 50.0, 20000.0, 230.0);
    const RmsSeries rms = compute_rms_series(w);
    const double lo = *std::min_element(rms.values.begin(), rms.values.end());
    const double hi = *std::max_element(rms.values.begin(), rms.values.end());
    CHECK(hi - lo == doctest::Approx(2.0).epsilon(1e-6));
    const auto events = detect_changes(rms, 230.0);
    REQUIRE(events.size() == 1);
    CHECK(events[0].amplitude == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("an M2 ramp is re-detected near the commanded speed") {
    const auto r = make_record(4.0, 227.0, 233.0, 230.0, 1.2, {1, 0, 0, 0, 0, 0, 0});
    RecreationParams p;
    p.method = Method::M2;
    p.seed = 5;
    const auto build = build_trajectory(r, p);
    CHECK(build.warnings.empty());
    const SampledWaveform w = synthesize_from_trajectory(build.trajectory, 50.0, 20000.0, 230.0);
    const auto events = detect_changes(compute_rms_series(w), 230.0);
    REQUIRE(events.size() == 1);
    const double commanded = 3.0 * 1.2; // sr_const_rel * delta_u, V/s
    CHECK(events[0].speed == doctest::Approx(commanded).epsilon(0.05));
}

TEST_CASE("infeasible records are rejected") {
    // delta_u exceeds the level range
    auto bad = make_record(10.0, 229.0, 230.0, 229.5, 2.0, {1, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(build_trajectory(bad, RecreationParams{}), ValidationError);
    // u_avg outside [u_min, u_max]
    auto bad2 = make_record(10.0, 229.0, 231.0, 228.0, 1.0, {1, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(build_trajectory(bad2, RecreationParams{}), ValidationError);
    // counts without delta_u
    auto bad3 = make_record(10.0, 229.0, 231.0, 230.0, 0.0, {1, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(build_trajectory(bad3, RecreationParams{}), ValidationError);
}

TEST_CASE("round trip: M1 recreation reproduces delta_u and the bin counts") {
    // Square-AM style synthetic windows; measure, recreate with M1, re-measure.
    // The first three steps pin the level range to [un-A, un+A] so the window
    // spans twice the dominant amplitude and recreation never needs to clamp.
    CounterRng rng(777);
    const double t_w = 6.0, un = 230.0, fc = 50.0, rate = 4000.0;
    int windows_checked = 0, windows_exact = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const int n_changes = 5 + static_cast<int>(rng.next_below(6));
        const double amp = 6.0 + rng.next_unit() * 3.0;
        LevelTrajectory steps;
        double level = un;
        steps.breakpoints.push_back({0.0, level});
        for (int i = 0; i < n_changes; ++i) {
            const double t = (i + 0.5) * t_w / n_changes;
            double dv;
            if (i == 0) dv = amp;                // un -> un + A
            else if (i == 1) dv = -amp;          // back to un
            else if (i == 2) dv = -amp;          // un -> un - A
            else {
                double frac = 0.04 + 0.92 * rng.next_unit();
                dv = frac * amp * ((level > un) ? -1.0 : 1.0);
            }
            steps.breakpoints.push_back({t, level});
            level += dv;
            steps.breakpoints.push_back({t + 0.01, level});
        }
        steps.breakpoints.push_back({t_w, level});
        const SampledWaveform w = synthesize_from_trajectory(steps, fc, rate, un);

        const RmsSeries rms = compute_rms_series(w);
        const auto events = detect_changes(rms, un);
        const auto records = aggregate_vfi(rms, events, t_w);
        REQUIRE(records.size() == 1);
        const VfiRecord& rec = records[0];
        if (rec.total_count() == 0) continue;

        RecreationParams p;
        p.method = Method::M1;
        p.seed = rng.next_u64();
        p.u_nominal = un;
        p.rms_dt = 1.0 / (2.0 * fc);
        const auto build = build_trajectory(rec, p);
        if (!build.warnings.empty()) continue; // excluded and reported per contract
        const SampledWaveform rw = synthesize_from_trajectory(build.trajectory, fc, rate, un);
        const RmsSeries rrms = compute_rms_series(rw);
        const auto rrecords = aggregate_vfi(rrms, detect_changes(rrms, un), t_w);
        REQUIRE(rrecords.size() == 1);
        ++windows_checked;
        const bool delta_ok =
            std::fabs(rrecords[0].delta_u - rec.delta_u) <= 0.02 * rec.delta_u;
        const bool counts_ok = rrecords[0].counts == rec.counts;
        if (delta_ok && counts_ok) ++windows_exact;
    }
    REQUIRE(windows_checked >= 20);
    CHECK(windows_exact == windows_checked);
}
