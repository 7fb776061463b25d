#include "vflux/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "vflux/errors.hpp"

namespace vflux {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 60.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string num_tick(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

double nice_step(double range) {
    if (range <= 0.0) return 1.0;
    const double raw = range / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    if (r < 1.5) return mag;
    if (r < 3.5) return 2.0 * mag;
    if (r < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

} // namespace

void write_scatter_svg(const std::filesystem::path& path, const ScatterPlot& plot) {
    double hi = 1.0;
    for (const auto& [x, y] : plot.points) hi = std::max({hi, x, y});
    hi *= 1.05;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + x / hi * pw; };
    auto sy = [&](double y) { return kHeight - kBottom - y / hi * ph; };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (int)kWidth << "\" height=\""
        << (int)kHeight << "\" viewBox=\"0 0 " << (int)kWidth << " " << (int)kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << plot.title << "</text>\n";

    const double step = nice_step(hi);
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double v = 0.0; v <= hi + 1e-12; v += step) {
        out << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(kHeight - kBottom) << "\" x2=\""
            << num(sx(v)) << "\" y2=\"" << num(kHeight - kBottom + 4) << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(kHeight - kBottom + 16)
            << "\" text-anchor=\"middle\">" << num_tick(v) << "</text>\n";
        out << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(sy(v)) << "\" x2=\""
            << num(kLeft) << "\" y2=\"" << num(sy(v)) << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << num(kLeft - 7) << "\" y=\"" << num(sy(v) + 4)
            << "\" text-anchor=\"end\">" << num_tick(v) << "</text>\n";
    }
    out << "</g>\n";

    out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
        << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";

    if (plot.unit_guides && hi >= 1.0) {
        out << "<line x1=\"" << num(sx(1.0)) << "\" y1=\"" << num(sy(0.0)) << "\" x2=\""
            << num(sx(1.0)) << "\" y2=\"" << num(sy(hi)) << "\" stroke=\"#c0c0c0\" "
            << "stroke-dasharray=\"3,3\"/>\n";
        out << "<line x1=\"" << num(sx(0.0)) << "\" y1=\"" << num(sy(1.0)) << "\" x2=\""
            << num(sx(hi)) << "\" y2=\"" << num(sy(1.0)) << "\" stroke=\"#c0c0c0\" "
            << "stroke-dasharray=\"3,3\"/>\n";
    }
    if (plot.identity_line) {
        out << "<line x1=\"" << num(sx(0.0)) << "\" y1=\"" << num(sy(0.0)) << "\" x2=\""
            << num(sx(hi)) << "\" y2=\"" << num(sy(hi)) << "\" stroke=\"#d62728\"/>\n";
    }

    out << "<g fill=\"#1f77b4\" fill-opacity=\"0.7\">\n";
    for (const auto& [x, y] : plot.points) {
        out << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"2.5\"/>\n";
    }
    out << "</g>\n";

    out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << plot.x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << num(kTop + ph / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << num(kTop + ph / 2) << ")\">" << plot.y_label
        << "</text>\n";
    out << "</svg>\n";
    if (!out) throw FormatError(path.string() + ": write failed");
}

} // namespace vflux
