#include "vflux/waveform.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vflux {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSqrt2 = 1.414213562373095048801688724209698079;

static_assert(std::endian::native == std::endian::little,
              "raw_f64 i/o assumes a little-endian host");

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError(std::string(name) + " must be positive and finite");
    }
}

} // namespace

void SampledWaveform::validate() const {
    check_positive(rate, "rate");
    check_positive(carrier_hz, "carrier_hz");
    check_positive(u_nominal, "u_nominal");
    if (rate < 40.0 * carrier_hz) {
        throw ParameterError("rate must be at least 40x the carrier frequency");
    }
    if (static_cast<double>(samples.size()) < rate / carrier_hz) {
        throw ParameterError("waveform must cover at least one full carrier cycle");
    }
}

SampledWaveform synthesize_am(double u_nominal, double carrier_hz, double rate,
                              const ModulationSpec& mod) {
    check_positive(u_nominal, "u_nominal");
    check_positive(carrier_hz, "carrier_hz");
    check_positive(rate, "rate");
    check_positive(mod.duration_s, "duration_s");
    if (mod.rel_amplitude < 0.0) throw ParameterError("rel_amplitude must be >= 0");
    if (mod.rate_cpm < 0.0) throw ParameterError("rate_cpm must be >= 0");
    if (rate < 40.0 * carrier_hz) {
        throw ParameterError("rate too low for carrier: need rate >= 40*carrier_hz");
    }

    const std::size_t n = static_cast<std::size_t>(std::llround(mod.duration_s * rate));
    if (n == 0) throw ParameterError("duration too short for sampling rate");

    SampledWaveform w;
    w.rate = rate;
    w.u_nominal = u_nominal;
    w.carrier_hz = carrier_hz;
    w.samples.resize(n);

    const double a = mod.rel_amplitude;
    const double half_cycle = 1.0 / (2.0 * carrier_hz);

    switch (mod.kind) {
    case ModulationKind::none: {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate;
            w.samples[i] = kSqrt2 * u_nominal * std::sin(2.0 * kPi * carrier_hz * t);
        }
        break;
    }
    case ModulationKind::sinusoidal: {
        const double fm = mod.rate_cpm; // Hz for this kind
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate;
            const double m = 0.5 * a * std::sin(2.0 * kPi * fm * t);
            w.samples[i] = kSqrt2 * u_nominal * (1.0 + m) * std::sin(2.0 * kPi * carrier_hz * t);
        }
        break;
    }
    case ModulationKind::ramp: {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate;
            const double m = a * (t / mod.duration_s - 0.5);
            w.samples[i] = kSqrt2 * u_nominal * (1.0 + m) * std::sin(2.0 * kPi * carrier_hz * t);
        }
        break;
    }
    case ModulationKind::rectangular: {
        // Level toggles every 60/rate_cpm seconds, each transition snapped to
        // the nearest carrier zero crossing.
        if (mod.rate_cpm == 0.0 || a == 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / rate;
                w.samples[i] = kSqrt2 * u_nominal * (1.0 + 0.5 * a) *
                               std::sin(2.0 * kPi * carrier_hz * t);
            }
            break;
        }
        const double t_half = 60.0 / mod.rate_cpm;
        std::vector<double> switches;
        for (std::size_t k = 1;; ++k) {
            const double nominal = static_cast<double>(k) * t_half;
            const double snapped = std::round(nominal / half_cycle) * half_cycle;
            if (snapped >= mod.duration_s) break;
            if (switches.empty() || snapped > switches.back()) switches.push_back(snapped);
        }
        std::size_t next_switch = 0;
        double m = 0.5 * a; // upper level first
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate;
            while (next_switch < switches.size() && t >= switches[next_switch] - 1e-12 / rate) {
                m = -m;
                ++next_switch;
            }
            w.samples[i] = kSqrt2 * u_nominal * (1.0 + m) * std::sin(2.0 * kPi * carrier_hz * t);
        }
        break;
    }
    }

    w.validate();
    return w;
}

namespace detail {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc()) throw FormatError("not a number: '" + s + "'");
    for (const char* p = res.ptr; p < last; ++p) {
        if (*p != ' ' && *p != '\t' && *p != '\r') {
            throw FormatError("trailing garbage after number: '" + s + "'");
        }
    }
    return v;
}

} // namespace detail

WaveFormat guess_format(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? WaveFormat::csv : WaveFormat::raw_f64;
}

namespace {

// Header: "# rate=<Hz> u_nominal=<V> carrier=<Hz>"
void parse_csv_header(const std::string& line, SampledWaveform& w, const std::string& path) {
    if (line.empty() || line[0] != '#') {
        throw FormatError(path + ": missing metadata header line ('# rate=... u_nominal=... carrier=...')");
    }
    std::istringstream iss(line.substr(1));
    std::string tok;
    bool have_rate = false, have_un = false, have_carrier = false;
    while (iss >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        try {
            if (key == "rate") {
                w.rate = detail::parse_double(val);
                have_rate = true;
            } else if (key == "u_nominal") {
                w.u_nominal = detail::parse_double(val);
                have_un = true;
            } else if (key == "carrier") {
                w.carrier_hz = detail::parse_double(val);
                have_carrier = true;
            }
        } catch (const FormatError&) {
            throw FormatError(path + ": invalid value for '" + key + "' in header");
        }
    }
    if (!have_rate || !have_un || !have_carrier) {
        throw FormatError(path + ": header must declare rate, u_nominal and carrier");
    }
}

SampledWaveform load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.empty()) throw FormatError(path.string() + ": empty file");

    SampledWaveform w;
    std::size_t pos = content.find('\n');
    if (pos == std::string::npos) pos = content.size();
    parse_csv_header(content.substr(0, pos), w, path.string());

    const char* p = content.data() + std::min(pos + 1, content.size());
    const char* end = content.data() + content.size();
    std::size_t index = 0;
    while (p < end) {
        const char* line_end = static_cast<const char*>(std::memchr(p, '\n', end - p));
        if (!line_end) line_end = end;
        const char* q = line_end;
        while (q > p && (q[-1] == '\r' || q[-1] == ' ')) --q;
        if (q > p) {
            double v = 0.0;
            auto res = std::from_chars(p, q, v);
            if (res.ec != std::errc() || res.ptr != q) {
                throw FormatError(path.string() + ": bad sample at index " + std::to_string(index));
            }
            if (!std::isfinite(v)) {
                throw DataError(path.string() + ": non-finite sample at index " + std::to_string(index));
            }
            w.samples.push_back(v);
            ++index;
        }
        p = line_end + 1;
    }
    if (w.samples.empty()) throw FormatError(path.string() + ": no samples");
    w.validate();
    return w;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p += ".meta.json";
    return p;
}

SampledWaveform load_raw(const std::filesystem::path& path) {
    std::ifstream meta_in(sidecar_path(path));
    if (!meta_in) {
        throw FormatError(path.string() + ": missing sidecar metadata file " + sidecar_path(path).string());
    }
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(sidecar_path(path).string() + ": invalid JSON: " + e.what());
    }
    SampledWaveform w;
    try {
        w.rate = meta.at("rate").get<double>();
        w.u_nominal = meta.at("u_nominal").get<double>();
        w.carrier_hz = meta.at("carrier_hz").get<double>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(sidecar_path(path).string() + ": sidecar must carry rate, u_nominal, carrier_hz");
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    in.seekg(0, std::ios::end);
    const std::streamoff bytes = in.tellg();
    in.seekg(0);
    if (bytes <= 0) throw FormatError(path.string() + ": empty file");
    if (bytes % static_cast<std::streamoff>(sizeof(double)) != 0) {
        throw FormatError(path.string() + ": size is not a multiple of 8 bytes");
    }
    w.samples.resize(static_cast<std::size_t>(bytes) / sizeof(double));
    in.read(reinterpret_cast<char*>(w.samples.data()), bytes);
    if (!in) throw FormatError(path.string() + ": truncated read");
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        if (!std::isfinite(w.samples[i])) {
            throw DataError(path.string() + ": non-finite sample at index " + std::to_string(i));
        }
    }
    w.validate();
    return w;
}

} // namespace

SampledWaveform load_waveform(const std::filesystem::path& path, WaveFormat format) {
    if (!std::filesystem::exists(path)) {
        throw FormatError(path.string() + ": file does not exist");
    }
    return format == WaveFormat::csv ? load_csv(path) : load_raw(path);
}

void save_waveform(const SampledWaveform& w, const std::filesystem::path& path,
                   WaveFormat format) {
    w.validate();
    if (format == WaveFormat::csv) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw FormatError(path.string() + ": cannot open for writing");
        out << "# rate=" << detail::format_double(w.rate)
            << " u_nominal=" << detail::format_double(w.u_nominal)
            << " carrier=" << detail::format_double(w.carrier_hz) << "\n";
        std::string buf;
        buf.reserve(1 << 20);
        for (double v : w.samples) {
            buf += detail::format_double(v);
            buf += '\n';
            if (buf.size() > (1 << 20) - 64) {
                out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
                buf.clear();
            }
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw FormatError(path.string() + ": write failed");
    } else {
        nlohmann::json meta{
            {"rate", w.rate}, {"u_nominal", w.u_nominal}, {"carrier_hz", w.carrier_hz}};
        std::ofstream meta_out(sidecar_path(path), std::ios::binary);
        if (!meta_out) throw FormatError(sidecar_path(path).string() + ": cannot open for writing");
        meta_out << meta.dump(2) << "\n";

        std::ofstream out(path, std::ios::binary);
        if (!out) throw FormatError(path.string() + ": cannot open for writing");
        out.write(reinterpret_cast<const char*>(w.samples.data()),
                  static_cast<std::streamsize>(w.samples.size() * sizeof(double)));
        if (!out) throw FormatError(path.string() + ": write failed");
    }
}

} // namespace vflux
