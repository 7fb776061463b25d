#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace vflux {

/// Second-order analog section b2*s^2 + b1*s + b0 over a2*s^2 + a1*s + a0.
struct AnalogBiquad {
    double b2 = 0.0, b1 = 0.0, b0 = 0.0;
    double a2 = 0.0, a1 = 0.0, a0 = 1.0;
};

/// Digital biquad, transposed direct form II.
class Biquad {
public:
    Biquad() = default;
    Biquad(double b0, double b1, double b2, double a1, double a2)
        : b0_(b0), b1_(b1), b2_(b2), a1_(a1), a2_(a2) {}

    /// Bilinear transform of an analog section at sample rate fs.
    static Biquad bilinear(const AnalogBiquad& a, double fs) {
        const double k = 2.0 * fs;
        const double k2 = k * k;
        double B0 = a.b2 * k2 + a.b1 * k + a.b0;
        double B1 = 2.0 * (a.b0 - a.b2 * k2);
        double B2 = a.b2 * k2 - a.b1 * k + a.b0;
        double A0 = a.a2 * k2 + a.a1 * k + a.a0;
        double A1 = 2.0 * (a.a0 - a.a2 * k2);
        double A2 = a.a2 * k2 - a.a1 * k + a.a0;
        return Biquad(B0 / A0, B1 / A0, B2 / A0, A1 / A0, A2 / A0);
    }

    double step(double x) {
        double y = b0_ * x + s1_;
        s1_ = b1_ * x - a1_ * y + s2_;
        s2_ = b2_ * x - a2_ * y;
        return y;
    }

    /// Set the internal state to the fixed point reached under constant input x0,
    /// so a constant signal passes through with no transient.
    void init_steady_state(double x0) {
        const double den = 1.0 + a1_ + a2_;
        const double y0 = den != 0.0 ? (b0_ + b1_ + b2_) / den * x0 : 0.0;
        s2_ = b2_ * x0 - a2_ * y0;
        s1_ = y0 - b0_ * x0;
    }

    void reset() { s1_ = s2_ = 0.0; }

    double dc_gain() const {
        return (b0_ + b1_ + b2_) / (1.0 + a1_ + a2_);
    }

private:
    double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0;
    double a1_ = 0.0, a2_ = 0.0;
    double s1_ = 0.0, s2_ = 0.0;
};

/// Cascade of biquads processed in sequence.
class BiquadCascade {
public:
    void add(const Biquad& b) { sections_.push_back(b); }

    double step(double x) {
        for (auto& s : sections_) x = s.step(x);
        return x;
    }

    void process(std::span<double> data) {
        for (double& x : data) x = step(x);
    }

    /// Steady-state initialization for constant input x0, propagating each
    /// section's DC output into the next section's input.
    void init_steady_state(double x0) {
        double x = x0;
        for (auto& s : sections_) {
            s.init_steady_state(x);
            x *= s.dc_gain();
        }
    }

    std::size_t size() const { return sections_.size(); }

private:
    std::vector<Biquad> sections_;
};

/// First-order high-pass s / (s + 2*pi*fc), bilinear at fs.
inline Biquad first_order_highpass(double fc, double fs) {
    AnalogBiquad a;
    a.b1 = 1.0;
    a.a1 = 1.0;
    a.a0 = 2.0 * M_PI * fc;
    return Biquad::bilinear(a, fs);
}

/// First-order low-pass 1 / (tau*s + 1), bilinear at fs.
inline Biquad first_order_lowpass_tc(double tau, double fs) {
    AnalogBiquad a;
    a.b0 = 1.0;
    a.a1 = tau;
    a.a0 = 1.0;
    return Biquad::bilinear(a, fs);
}

/// Butterworth low-pass of even order as a cascade of biquads.
inline std::vector<Biquad> butterworth_lowpass(int order, double fc, double fs) {
    std::vector<Biquad> out;
    const double wc = 2.0 * M_PI * fc;
    for (int k = 0; k < order / 2; ++k) {
        const double alpha = (2.0 * k + 1.0) * M_PI / (2.0 * order);
        AnalogBiquad a;
        a.b0 = wc * wc;
        a.a2 = 1.0;
        a.a1 = 2.0 * wc * std::cos(alpha);
        a.a0 = wc * wc;
        out.push_back(Biquad::bilinear(a, fs));
    }
    return out;
}

} // namespace vflux
