#include "vflux/flicker.hpp"

#include <algorithm>
#include <cmath>

#include "vflux/iir.hpp"
#include "vflux/vfi.hpp"

namespace vflux {

const double kPstPercentiles[15] = {0.1, 0.7, 1.0, 1.5, 2.2, 3.0, 4.0, 6.0,
                                    8.0, 10.0, 13.0, 17.0, 30.0, 50.0, 80.0};

namespace {

constexpr double kInternalRate = 2000.0; // Hz, demodulated-chain processing rate
constexpr double kAdaptorTau = 27.3;     // s, running-rms normalization
constexpr double kOutputDt = 0.02;       // s, P_inst cadence
constexpr double kSettleSkip = 20.0;     // s

// Overall gain making P_inst = 1.00 at the perceptibility threshold
// (0.25% peak-to-peak sinusoidal modulation at 8.8 Hz on a 230 V / 50 Hz
// carrier). Frozen from that calibration point.
constexpr double kPinstScale = 3.114633959e+05;

// 230 V / 50 Hz lamp-eye-brain weighting:
// F(s) = k*w1*s/(s^2 + 2*lambda*s + w1^2) * (1 + s/w2)/((1 + s/w3)(1 + s/w4))
struct WeightingParams {
    double k = 1.74802;
    double lambda = 2.0 * M_PI * 4.05981;
    double w1 = 2.0 * M_PI * 9.15494;
    double w2 = 2.0 * M_PI * 2.27979;
    double w3 = 2.0 * M_PI * 1.22535;
    double w4 = 2.0 * M_PI * 21.9;
};

BiquadCascade make_band_chain(double fs) {
    BiquadCascade chain;
    chain.add(first_order_highpass(0.05, fs));
    for (const auto& b : butterworth_lowpass(6, 35.0, fs)) chain.add(b);

    const WeightingParams p;
    AnalogBiquad sel; // selective band-pass part
    sel.b1 = p.k * p.w1;
    sel.a2 = 1.0;
    sel.a1 = 2.0 * p.lambda;
    sel.a0 = p.w1 * p.w1;
    chain.add(Biquad::bilinear(sel, fs));

    AnalogBiquad lead; // (1 + s/w2) / ((1 + s/w3)(1 + s/w4))
    lead.b1 = 1.0 / p.w2;
    lead.b0 = 1.0;
    lead.a2 = 1.0 / (p.w3 * p.w4);
    lead.a1 = 1.0 / p.w3 + 1.0 / p.w4;
    lead.a0 = 1.0;
    chain.add(Biquad::bilinear(lead, fs));
    return chain;
}

// Causal moving average over `width` samples with a small ring buffer.
class Boxcar {
public:
    explicit Boxcar(std::size_t width) : ring_(width, 0.0) {}

    double step(double x) {
        sum_ += x - ring_[pos_];
        ring_[pos_] = x;
        pos_ = (pos_ + 1) % ring_.size();
        if (filled_ < ring_.size()) ++filled_;
        return sum_ / static_cast<double>(filled_);
    }

    void prefill(double x) {
        std::fill(ring_.begin(), ring_.end(), x);
        sum_ = x * static_cast<double>(ring_.size());
        filled_ = ring_.size();
        pos_ = 0;
    }

private:
    std::vector<double> ring_;
    double sum_ = 0.0;
    std::size_t pos_ = 0;
    std::size_t filled_ = 0;
};

} // namespace

double PinstSeries::max_after_settling() const {
    double m = 0.0;
    for (std::size_t i = settle_count(); i < values.size(); ++i) m = std::max(m, values[i]);
    return m;
}

PinstSeries compute_pinst(const SampledWaveform& w) {
    w.validate();
    if (w.duration_s() < 30.0) {
        throw ParameterError("compute_pinst: waveform shorter than 30 s cannot settle");
    }

    // Block 1: slow running-rms level for scale normalization.
    const RmsSeries rms = compute_rms_series(w);
    std::vector<double> level(rms.values.size());
    const double alpha = 1.0 - std::exp(-rms.dt / kAdaptorTau);
    double acc = rms.values.front();
    for (std::size_t k = 0; k < rms.values.size(); ++k) {
        acc += alpha * (rms.values[k] - acc);
        level[k] = acc;
    }
    const double level_floor = 1e-9 * w.u_nominal;

    const std::size_t n = w.samples.size();
    const double spp = w.rate / (2.0 * w.carrier_hz); // samples per rms window
    auto window_of = [&](std::size_t i) {
        auto k = static_cast<std::size_t>(static_cast<double>(i) / spp);
        return std::min(k, level.size() - 1);
    };
    auto squared_norm = [&](std::size_t i) {
        const double lv = level[window_of(i)];
        if (lv < level_floor) return 0.0;
        const double x = w.samples[i] / lv;
        return x * x;
    };

    // Steady DC level of the demodulated signal, for transient-free filter
    // start-up: mean square over the first carrier cycle.
    const auto first_cycle = static_cast<std::size_t>(std::llround(w.rate / w.carrier_hz));
    double x0 = 0.0;
    for (std::size_t i = 0; i < first_cycle; ++i) x0 += squared_norm(i);
    x0 /= static_cast<double>(first_cycle);

    // Blocks 3-4 run at the internal rate; the squared signal is smoothed by a
    // double boxcar before linear-interpolation resampling.
    const auto box_width = static_cast<std::size_t>(
        std::max(1.0, std::floor(w.rate / kInternalRate + 0.5)));
    Boxcar box1(box_width), box2(box_width);
    box1.prefill(x0);
    box2.prefill(x0);

    BiquadCascade band = make_band_chain(kInternalRate);
    band.init_steady_state(x0);
    Biquad smooth = first_order_lowpass_tc(0.3, kInternalRate);
    smooth.init_steady_state(0.0); // band chain output is 0 for constant input

    const double step = w.rate / kInternalRate;       // input samples per output sample
    const double delay = static_cast<double>(box_width - 1); // two half-width group delays
    double next_pos = delay;
    double prev_f = x0;

    const auto bin = static_cast<std::size_t>(std::llround(kInternalRate * kOutputDt));
    PinstSeries out;
    out.dt = kOutputDt;
    out.settle_skip = kSettleSkip;
    out.values.reserve(static_cast<std::size_t>(w.duration_s() / kOutputDt) + 1);
    double bin_acc = 0.0;
    std::size_t bin_count = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const double f = box2.step(box1.step(squared_norm(i)));
        const double fi = static_cast<double>(i);
        while (next_pos <= fi) {
            const double frac = next_pos - (fi - 1.0);
            const double x = (i == 0) ? f : prev_f + frac * (f - prev_f);
            const double weighted = band.step(x);
            const double p = smooth.step(weighted * weighted) * kPinstScale;
            bin_acc += p;
            if (++bin_count == bin) {
                out.values.push_back(bin_acc / static_cast<double>(bin));
                bin_acc = 0.0;
                bin_count = 0;
            }
            next_pos += step;
        }
        prev_f = f;
    }
    return out;
}

double exceedance_level(const std::vector<double>& sorted_ascending, double pct) {
    const std::size_t n = sorted_ascending.size();
    if (n == 0) throw ParameterError("exceedance_level: empty sample");
    if (n == 1) return sorted_ascending[0];
    const double q = 1.0 - pct / 100.0;
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return sorted_ascending[n - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted_ascending[lo] + frac * (sorted_ascending[lo + 1] - sorted_ascending[lo]);
}

FlickerResult compute_pst(const PinstSeries& p, const FlickerOptions& opt) {
    if (!(p.dt > 0.0)) throw ParameterError("compute_pst: dt must be positive");
    const std::size_t skip = std::min(p.settle_count(), p.values.size());
    const std::size_t avail = p.values.size() - skip;

    std::size_t take;
    if (opt.window_s > 0.0) {
        take = static_cast<std::size_t>(std::llround(opt.window_s / p.dt));
        if (take > avail) {
            throw ParameterError("compute_pst: series covers less than the requested window");
        }
    } else {
        take = avail;
        if (static_cast<double>(take) * p.dt < 60.0) {
            throw ParameterError("compute_pst: series too short after settling exclusion");
        }
    }

    std::vector<double> sorted(p.values.begin() + static_cast<std::ptrdiff_t>(skip),
                               p.values.begin() + static_cast<std::ptrdiff_t>(skip + take));
    std::sort(sorted.begin(), sorted.end());

    FlickerResult res;
    for (double pct : kPstPercentiles) {
        res.percentiles[pct] = exceedance_level(sorted, pct);
    }
    const auto& P = res.percentiles;
    const double p50s = (P.at(30.0) + P.at(50.0) + P.at(80.0)) / 3.0;
    const double p10s = (P.at(6.0) + P.at(8.0) + P.at(10.0) + P.at(13.0) + P.at(17.0)) / 5.0;
    const double p3s = (P.at(2.2) + P.at(3.0) + P.at(4.0)) / 3.0;
    const double p1s = (P.at(0.7) + P.at(1.0) + P.at(1.5)) / 3.0;
    res.p_st = std::sqrt(0.0314 * P.at(0.1) + 0.0525 * p1s + 0.0657 * p3s + 0.28 * p10s +
                         0.08 * p50s);
    return res;
}

} // namespace vflux
