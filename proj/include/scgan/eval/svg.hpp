#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "scgan/error.hpp"
#include "scgan/eval/report.hpp"

namespace scgan::eval {

struct Curve {
    std::string label;
    std::string color;
    std::vector<double> x, y;
    bool step = false;
};

struct PlotAxes {
    std::string title, x_label, y_label;
    bool log_x = false, log_y = false;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

} // namespace detail

/// Minimal SVG line chart with axes, min/max tick labels and a legend.
inline std::string line_plot_svg(const std::vector<Curve>& curves, const PlotAxes& axes) {
    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    auto tx = [&](double v) { return axes.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return axes.log_y ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if ((axes.log_x && !(c.x[i] > 0)) || (axes.log_y && !(c.y[i] > 0)) || !std::isfinite(c.y[i])) continue;
            x0 = std::min(x0, tx(c.x[i]));
            x1 = std::max(x1, tx(c.x[i]));
            y0 = std::min(y0, ty(c.y[i]));
            y1 = std::max(y1, ty(c.y[i]));
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
    auto tick = [](double v, bool log) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", log ? std::pow(10.0, v) : v);
        return std::string(buf);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << detail::escape(axes.title) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"11\">" << tick(x0, axes.log_x) << "</text>\n";
    os << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" font-size=\"11\" text-anchor=\"end\">" << tick(x1, axes.log_x) << "</text>\n";
    os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"11\" text-anchor=\"end\">" << tick(y0, axes.log_y) << "</text>\n";
    os << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" font-size=\"11\" text-anchor=\"end\">" << tick(y1, axes.log_y) << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << detail::escape(axes.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 " << H / 2 << ")\" text-anchor=\"middle\">"
       << detail::escape(axes.y_label) << "</text>\n";
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const auto& c = curves[ci];
        os << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.5\" points=\"";
        double prev_y = 0;
        bool first = true;
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if ((axes.log_x && !(c.x[i] > 0)) || (axes.log_y && !(c.y[i] > 0)) || !std::isfinite(c.y[i])) continue;
            if (c.step && !first) os << detail::num(px(c.x[i])) << ',' << detail::num(prev_y) << ' ';
            prev_y = py(c.y[i]);
            os << detail::num(px(c.x[i])) << ',' << detail::num(prev_y) << ' ';
            first = false;
        }
        os << "\"/>\n";
        const double ly = T + 14 + 18.0 * static_cast<double>(ci);
        os << "<line x1=\"" << W - R - 140 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R - 115 << "\" y2=\"" << ly - 4
           << "\" stroke=\"" << c.color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R - 110 << "\" y=\"" << ly << "\" font-size=\"12\">" << detail::escape(c.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Heatmap of a square matrix with values in [-1, 1] (blue negative, red positive).
inline std::string heatmap_svg(const CorrelationMatrix& m, const std::string& title) {
    const double cell = std::max(8.0, 360.0 / static_cast<double>(std::max<std::size_t>(m.n, 1)));
    const double W = cell * static_cast<double>(m.n) + 40, H = cell * static_cast<double>(m.n) + 60;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(title) << "</text>\n";
    for (std::size_t i = 0; i < m.n; ++i) {
        for (std::size_t j = 0; j < m.n; ++j) {
            const double v = m(i, j);
            std::string fill = "#cccccc";
            if (std::isfinite(v)) {
                const int k = static_cast<int>(std::lround(255.0 * (1.0 - std::min(1.0, std::abs(v)))));
                char buf[16];
                if (v >= 0) std::snprintf(buf, sizeof buf, "#ff%02x%02x", k, k);
                else std::snprintf(buf, sizeof buf, "#%02x%02xff", k, k);
                fill = buf;
            }
            os << "<rect x=\"" << 20 + cell * static_cast<double>(j) << "\" y=\"" << 40 + cell * static_cast<double>(i)
               << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

/// ACF overlay, CDF overlay, log-log PSD and correlation heatmaps for the available metrics.
inline std::vector<std::filesystem::path> write_plots(const EvalReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    auto save = [&](const std::string& name, const std::string& svg) {
        files.push_back(dir / name);
        std::ofstream out(files.back());
        if (!out) throw Error("cannot write " + files.back().string());
        out << svg;
    };
    const std::string real_c = "#1f77b4", gen_c = "#d62728";
    if (r.acf.ok()) {
        std::vector<double> lags(r.acf.value->real.size());
        for (std::size_t k = 0; k < lags.size(); ++k) lags[k] = static_cast<double>(k);
        save("acf.svg", line_plot_svg({{"real", real_c, lags, r.acf.value->real}, {"generated", gen_c, lags, r.acf.value->gen}},
                                      {"Autocorrelation", "lag (steps)", "R(lag)"}));
    }
    if (r.ks.ok()) {
        save("cdf.svg", line_plot_svg({{"real", real_c, r.ks.value->real.x, r.ks.value->real.f, true},
                                       {"generated", gen_c, r.ks.value->gen.x, r.ks.value->gen.f, true}},
                                      {"Marginal CDF", "power (MW)", "F"}));
    }
    if (r.psd.ok()) {
        save("psd.svg", line_plot_svg({{"real", real_c, r.psd.value->real.frequency, r.psd.value->real.power},
                                       {"generated", gen_c, r.psd.value->gen.frequency, r.psd.value->gen.power}},
                                      {"Power spectral density", "frequency (1/h)", "PSD", true, true}));
    }
    if (r.spatial.ok()) {
        save("spatial_real.svg", heatmap_svg(r.spatial.value->real, "Spatial correlation (real)"));
        save("spatial_gen.svg", heatmap_svg(r.spatial.value->gen, "Spatial correlation (generated)"));
    }
    return files;
}

} // namespace scgan::eval
