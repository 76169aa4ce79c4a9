#pragma once

// Minimal line-plot SVG: one frame, shared x axis, one polyline per series.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace fwdre::xp {

struct Series {
    std::string name;
    std::vector<double> y;
};

inline void write_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
                      const std::vector<double>& x, const std::vector<Series>& series) {
    constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                   "#7f7f7f", "#bcbd22"};
    double x0 = x.empty() ? 0 : *std::min_element(x.begin(), x.end());
    double x1 = x.empty() ? 1 : *std::max_element(x.begin(), x.end());
    double y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    if (x1 - x0 < 1e-12) x1 = x0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad, y1 += pad;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

    char buf[160];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  L, T, W - L - R, H - T - B);
    os << buf;
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n", px(xv),
                      H - B + 16, xv);
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", L - 6,
                      py(yv) + 4, yv);
        os << buf;
    }
    os << "<text x=\"" << L + (W - L - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel
       << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* col = colors[s % 9];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < x.size() && i < series[s].y.size(); ++i) {
            if (!std::isfinite(series[s].y[i])) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x[i]), py(series[s].y[i]));
            os << buf;
        }
        os << "\"/>\n";
        const double ly = T + 14 + 16.0 * double(s);
        std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                      W - R + 10, ly - 4, W - R + 30, ly - 4, col);
        os << buf;
        os << "<text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">" << series[s].name << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace fwdre::xp
