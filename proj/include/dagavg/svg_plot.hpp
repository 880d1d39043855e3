#ifndef DAGAVG_SVG_PLOT_HPP
#define DAGAVG_SVG_PLOT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace dagavg {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

namespace detail {

inline std::string fmt_num(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace detail

/// Minimal line chart: frame, ticks at the data x values and at whole/half
/// units on y, one polyline with point markers per series, legend top-right.
/// Non-finite points are skipped.
inline void write_line_plot(std::ostream& out, const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<PlotSeries>& series) {
    constexpr double width = 640.0;
    constexpr double height = 420.0;
    constexpr double left = 70.0;
    constexpr double right = 170.0;
    constexpr double top = 40.0;
    constexpr double bottom = 55.0;
    static const char* const palette[] = {"#000000", "#e66101", "#5e3c99", "#1b7837", "#b2182b", "#2166ac"};

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    std::vector<double> xticks;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                continue;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
            xticks.push_back(s.x[i]);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    }
    if (xmax == xmin) {
        xmin -= 0.5, xmax += 0.5;
    }
    ymin = std::floor(ymin * 2.0) / 2.0;
    ymax = std::ceil(ymax * 2.0) / 2.0;
    if (ymax == ymin) {
        ymin -= 0.5, ymax += 0.5;
    }
    std::sort(xticks.begin(), xticks.end());
    xticks.erase(std::unique(xticks.begin(), xticks.end()), xticks.end());

    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto sx = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double v) { return top + (ymax - v) / (ymax - ymin) * ph; };
    using detail::fmt_num;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << detail::xml_escape(title) << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : xticks) {
        const double px = sx(t);
        out << "<line x1=\"" << fmt_num(px) << "\" y1=\"" << top + ph << "\" x2=\"" << fmt_num(px) << "\" y2=\""
            << top + ph + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt_num(px) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
            << fmt_num(t) << "</text>\n";
    }
    const double ystep = (ymax - ymin) > 4.0 ? 1.0 : 0.5;
    for (double t = ymin; t <= ymax + 1e-9; t += ystep) {
        const double py = sy(t);
        out << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt_num(py) << "\" x2=\"" << left << "\" y2=\""
            << fmt_num(py) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << fmt_num(py + 4) << "\" text-anchor=\"end\">"
            << fmt_num(t, "%.1f") << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
        << detail::xml_escape(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << top + ph / 2 << ")\">" << detail::xml_escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % (sizeof palette / sizeof palette[0])];
        std::string points;
        std::string markers;
        for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
            if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) {
                continue;
            }
            const auto px = fmt_num(sx(series[s].x[i]));
            const auto py = fmt_num(sy(series[s].y[i]));
            points += (points.empty() ? "" : " ") + px + "," + py;
            markers += "<circle cx=\"" + px + "\" cy=\"" + py + "\" r=\"3\" fill=\"" + color + "\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
            << "\"/>\n"
            << markers;
        const double ly = top + 10 + 18.0 * static_cast<double>(s);
        const double lx = left + pw + 12;
        out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 4 << "\">" << detail::xml_escape(series[s].label)
            << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace dagavg

#endif  // DAGAVG_SVG_PLOT_HPP
