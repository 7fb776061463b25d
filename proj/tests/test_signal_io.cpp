#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "vflux/waveform.hpp"

using namespace vflux;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "vflux_io_test";
    fs::create_directories(dir);
    return dir;
}

// Independent per-half-cycle rms, directly off the samples.
double half_cycle_rms(const SampledWaveform& w, std::size_t k) {
    const auto spp = static_cast<std::size_t>(std::llround(w.rate / (2.0 * w.carrier_hz)));
    double acc = 0.0;
    for (std::size_t i = k * spp; i < (k + 1) * spp; ++i) acc += w.samples[i] * w.samples[i];
    return std::sqrt(acc / static_cast<double>(spp));
}

} // namespace

TEST_CASE("unmodulated carrier has constant cycle rms") {
    const SampledWaveform w =
        synthesize_am(230.0, 50.0, 20000.0, {ModulationKind::none, 0.0, 0.0, 1.0});
    CHECK(w.samples.size() == 20000);
    for (std::size_t k = 0; k < 100; ++k) {
        CHECK(half_cycle_rms(w, k) == doctest::Approx(230.0).epsilon(1e-9));
    }
}

TEST_CASE("ten minutes at 20 kSa/s is twelve million samples") {
    const SampledWaveform w =
        synthesize_am(230.0, 50.0, 20000.0, {ModulationKind::none, 0.0, 0.0, 600.0});
    CHECK(w.samples.size() == 12000000);
}

TEST_CASE("rectangular modulation alternates between two rms plateaus") {
    // 39 changes per minute, 1% relative amplitude: plateau rms differ by 2.3 V.
    const SampledWaveform w =
        synthesize_am(230.0, 50.0, 20000.0, {ModulationKind::rectangular, 0.01, 39.0, 10.0});
    double lo = 1e9, hi = 0.0;
    for (std::size_t k = 0; k < 990; ++k) {
        const double r = half_cycle_rms(w, k);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(lo == doctest::Approx(230.0 * 0.995).epsilon(1e-9));
    CHECK(hi == doctest::Approx(230.0 * 1.005).epsilon(1e-9));
    CHECK(hi - lo == doctest::Approx(2.3).epsilon(1e-9));
}

TEST_CASE("rectangular-AM energy matches the analytic value") {
    const double un = 230.0, fc = 50.0, rate = 20000.0, amp = 0.02, cpm = 39.0, dur = 10.0;
    const SampledWaveform w =
        synthesize_am(un, fc, rate, {ModulationKind::rectangular, amp, cpm, dur});

    // Mirror the synthesis switching grid: nominal switch times snapped to the
    // carrier half-cycle; each plateau spans whole half cycles, so its energy
    // is U^2*(1+m)^2 * length.
    const double half_cycle = 1.0 / (2.0 * fc);
    std::vector<double> switches;
    for (std::size_t k = 1;; ++k) {
        const double snapped = std::round(k * (60.0 / cpm) / half_cycle) * half_cycle;
        if (snapped >= dur) break;
        if (switches.empty() || snapped > switches.back()) switches.push_back(snapped);
    }
    double expected = 0.0;
    double prev = 0.0, m = 0.5 * amp;
    for (double t : switches) {
        expected += un * un * (1.0 + m) * (1.0 + m) * (t - prev);
        prev = t;
        m = -m;
    }
    expected += un * un * (1.0 + m) * (1.0 + m) * (dur - prev);

    double energy = 0.0;
    for (double s : w.samples) energy += s * s;
    energy /= rate;
    CHECK(energy == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("synthesize rejects a rate too low for the carrier") {
    CHECK_THROWS_AS(synthesize_am(230.0, 50.0, 1000.0, {ModulationKind::none, 0.0, 0.0, 1.0}),
                    ParameterError);
}

TEST_CASE("csv round trip preserves samples") {
    const SampledWaveform w =
        synthesize_am(230.0, 50.0, 4000.0, {ModulationKind::sinusoidal, 0.02, 8.8, 2.0});
    const auto path = temp_dir() / "roundtrip.csv";
    save_waveform(w, path, WaveFormat::csv);
    const SampledWaveform r = load_waveform(path, WaveFormat::csv);
    REQUIRE(r.samples.size() == w.samples.size());
    CHECK(r.rate == w.rate);
    CHECK(r.u_nominal == w.u_nominal);
    CHECK(r.carrier_hz == w.carrier_hz);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        // shortest round-trip formatting reproduces doubles exactly
        CHECK(r.samples[i] == w.samples[i]);
    }
}

TEST_CASE("raw round trip is bit exact") {
    const SampledWaveform w =
        synthesize_am(230.0, 50.0, 4000.0, {ModulationKind::rectangular, 0.03, 120.0, 2.0});
    const auto path = temp_dir() / "roundtrip.raw";
    save_waveform(w, path, WaveFormat::raw_f64);
    const SampledWaveform r = load_waveform(path, WaveFormat::raw_f64);
    REQUIRE(r.samples.size() == w.samples.size());
    CHECK(std::memcmp(r.samples.data(), w.samples.data(),
                      w.samples.size() * sizeof(double)) == 0);
}

TEST_CASE("empty file is a format error") {
    const auto path = temp_dir() / "empty.csv";
    std::ofstream(path).close();
    CHECK_THROWS_AS(load_waveform(path, WaveFormat::csv), FormatError);
}

TEST_CASE("missing file is a format error") {
    CHECK_THROWS_AS(load_waveform(temp_dir() / "nope.csv", WaveFormat::csv), FormatError);
}

TEST_CASE("nan sample is a data error naming the index") {
    const auto path = temp_dir() / "nan.csv";
    {
        std::ofstream out(path);
        out << "# rate=4000 u_nominal=230 carrier=50\n";
        for (int i = 0; i < 200; ++i) {
            if (i == 7) out << "nan\n";
            else out << "1.0\n";
        }
    }
    try {
        load_waveform(path, WaveFormat::csv);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("index 7") != std::string::npos);
    }
}

TEST_CASE("header without metadata is a format error") {
    const auto path = temp_dir() / "nohdr.csv";
    {
        std::ofstream out(path);
        out << "1.0\n2.0\n";
    }
    CHECK_THROWS_AS(load_waveform(path, WaveFormat::csv), FormatError);
}

TEST_CASE("raw without sidecar is a format error") {
    const auto path = temp_dir() / "orphan.raw";
    {
        std::ofstream out(path, std::ios::binary);
        const double v = 1.0;
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    CHECK_THROWS_AS(load_waveform(path, WaveFormat::raw_f64), FormatError);
}
