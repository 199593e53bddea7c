#include "labyrinth/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace labyrinth::svg {

namespace {

const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    if (v != 0.0 && (std::abs(v) >= 1e5 || std::abs(v) < 1e-3)) std::snprintf(buf, sizeof buf, "%.0e", v);
    else std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '"') out += "&quot;";
        else out += c;
    }
    return out;
}

std::vector<double> nice_ticks(double lo, double hi) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;
    double map(double v) const {
        const double a = log ? std::log10(v) : v;
        return (a - lo) / (hi - lo);
    }
    std::vector<std::pair<double, std::string>> ticks() const {
        std::vector<std::pair<double, std::string>> out;
        if (log) {
            for (double d = std::ceil(lo); d <= hi + 1e-9; d += std::max(1.0, std::floor((hi - lo) / 8.0)))
                out.emplace_back((d - lo) / (hi - lo), "1e" + std::to_string(static_cast<int>(d)));
        } else {
            for (double v : nice_ticks(lo, hi)) out.emplace_back((v - lo) / (hi - lo), label(v));
        }
        return out;
    }
};

Axis make_axis(std::vector<double> values, bool log) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && !(v > 0.0))) continue;
        const double t = log ? std::log10(v) : v;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = log ? 0.05 * (hi - lo) : 0.04 * (hi - lo);
    a.lo = lo - pad;
    a.hi = hi + pad;
    return a;
}

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

void header(std::ostringstream& os, int w, int h) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
       << ' ' << h << "\" font-family=\"sans-serif\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

// viridis control points
void colormap(double t, int& r, int& g, int& b) {
    static const double c[9][3] = {{68, 1, 84},    {71, 44, 122},  {59, 81, 139},   {44, 113, 142}, {33, 144, 141},
                                   {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 8.0;
    const int i = std::min(7, static_cast<int>(t));
    const double f = t - i;
    r = static_cast<int>(std::lround(c[i][0] + f * (c[i + 1][0] - c[i][0])));
    g = static_cast<int>(std::lround(c[i][1] + f * (c[i + 1][1] - c[i][1])));
    b = static_cast<int>(std::lround(c[i][2] + f * (c[i + 1][2] - c[i][2])));
}

}  // namespace

std::string render(const Plot& plot) {
    std::vector<double> xs, ys;
    for (const auto& s : plot.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.x[i], plot.logx) || !usable(s.y[i], plot.logy)) continue;
            xs.push_back(s.x[i]);
            ys.push_back(s.y[i]);
            if (i < s.yerr.size()) {
                ys.push_back(s.y[i] + s.yerr[i]);
                if (!plot.logy || s.y[i] - s.yerr[i] > 0.0) ys.push_back(s.y[i] - s.yerr[i]);
            }
        }
    }
    Axis ax = make_axis(xs, plot.logx), ay = make_axis(ys, plot.logy);
    const double left = 80, right = 20, top = plot.subtitle.empty() ? 40 : 56, bottom = 60;
    double pw = plot.width - left - right, ph = plot.height - top - bottom;
    if (plot.equal_aspect && !plot.logx && !plot.logy) {
        // widen the tighter axis so one unit has the same length on both
        const double sx = (ax.hi - ax.lo) / pw, sy = (ay.hi - ay.lo) / ph;
        if (sx > sy) {
            const double mid = 0.5 * (ay.lo + ay.hi);
            ay.lo = mid - 0.5 * sx * ph;
            ay.hi = mid + 0.5 * sx * ph;
        } else {
            const double mid = 0.5 * (ax.lo + ax.hi);
            ax.lo = mid - 0.5 * sy * pw;
            ax.hi = mid + 0.5 * sy * pw;
        }
    }
    auto px = [&](double v) { return left + ax.map(v) * pw; };
    auto py = [&](double v) { return top + (1.0 - ay.map(v)) * ph; };

    std::ostringstream os;
    header(os, plot.width, plot.height);
    os << "<text x=\"" << plot.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">" << escape(plot.title)
       << "</text>\n";
    if (!plot.subtitle.empty())
        os << "<text x=\"" << plot.width / 2 << "\" y=\"40\" text-anchor=\"middle\" font-size=\"10\" fill=\"#666\">"
           << escape(plot.subtitle) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const auto& [f, text] : ax.ticks()) {
        const double x = left + f * pw;
        os << "<line x1=\"" << num(x) << "\" y1=\"" << top + ph << "\" x2=\"" << num(x) << "\" y2=\"" << top + ph + 5
           << "\" stroke=\"black\"/><text x=\"" << num(x) << "\" y=\"" << top + ph + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << text << "</text>\n";
    }
    for (const auto& [f, text] : ay.ticks()) {
        const double y = top + (1.0 - f) * ph;
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << num(y) << "\" x2=\"" << left << "\" y2=\"" << num(y)
           << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << num(y + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << text << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << plot.height - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
       << escape(plot.xlabel) << "</text>\n";
    os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">"
       << escape(plot.ylabel) << "</text>\n";
    os << "<clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\"/></clipPath>\n<g clip-path=\"url(#plot)\">\n";

    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const std::string color = s.color.empty() ? palette[k % 8] : s.color;
        if (s.style != Style::markers) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
                if (usable(s.x[i], plot.logx) && usable(s.y[i], plot.logy)) os << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
            os << "\"/>\n";
        }
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.x[i], plot.logx) || !usable(s.y[i], plot.logy)) continue;
            if (i < s.yerr.size() && s.yerr[i] > 0.0) {
                const double lo = plot.logy ? std::max(s.y[i] - s.yerr[i], s.y[i] * 1e-3) : s.y[i] - s.yerr[i];
                os << "<line x1=\"" << num(px(s.x[i])) << "\" y1=\"" << num(py(lo)) << "\" x2=\"" << num(px(s.x[i]))
                   << "\" y2=\"" << num(py(s.y[i] + s.yerr[i])) << "\" stroke=\"" << color << "\"/>\n";
            }
            if (s.style != Style::line)
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << color
                   << "\"/>\n";
        }
    }
    os << "</g>\n";
    double ly = top + 16;
    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        if (plot.series[k].name.empty()) continue;
        const std::string color = plot.series[k].color.empty() ? palette[k % 8] : plot.series[k].color;
        os << "<rect x=\"" << left + pw - 170 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << color
           << "\"/><text x=\"" << left + pw - 155 << "\" y=\"" << ly << "\" font-size=\"11\">"
           << escape(plot.series[k].name) << "</text>\n";
        ly += 16;
    }
    os << "</svg>\n";
    return os.str();
}

std::string render(const Heatmap& map) {
    const double left = 70, top = map.subtitle.empty() ? 40 : 56, bar = 80;
    const double side = map.size;
    const int width = static_cast<int>(left + side + bar + 20), height = static_cast<int>(top + side + 50);
    double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
    for (double v : map.values)
        if (std::isfinite(v)) vmax = std::max(vmax, v), vmin = std::min(vmin, v);
    if (!std::isfinite(vmin)) vmin = 0.0;
    const double span = vmax > vmin ? vmax - vmin : 1.0;

    std::ostringstream os;
    header(os, width, height);
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">" << escape(map.title)
       << "</text>\n";
    if (!map.subtitle.empty())
        os << "<text x=\"" << width / 2 << "\" y=\"40\" text-anchor=\"middle\" font-size=\"10\" fill=\"#666\">"
           << escape(map.subtitle) << "</text>\n";
    const double cw = side / map.nx, ch = side / map.ny;
    os << "<g shape-rendering=\"crispEdges\">\n";
    for (int iy = 0; iy < map.ny; ++iy)
        for (int ix = 0; ix < map.nx; ++ix) {
            int r, g, b;
            colormap((map.values[static_cast<std::size_t>(iy) * map.nx + ix] - vmin) / span, r, g, b);
            char fill[8];
            std::snprintf(fill, sizeof fill, "#%02x%02x%02x", r, g, b);
            os << "<rect x=\"" << num(left + ix * cw) << "\" y=\"" << num(top + side - (iy + 1) * ch) << "\" width=\""
               << num(cw + 0.05) << "\" height=\"" << num(ch + 0.05) << "\" fill=\"" << fill << "\"/>\n";
        }
    os << "</g>\n";
    auto px = [&](double x) { return left + (x - map.x0) / (map.x1 - map.x0) * side; };
    auto py = [&](double y) { return top + side - (y - map.y0) / (map.y1 - map.y0) * side; };
    for (const auto& m : map.markers) {
        if (m.x < map.x0 || m.x > map.x1 || m.y < map.y0 || m.y > map.y1) continue;
        os << "<circle cx=\"" << num(px(m.x)) << "\" cy=\"" << num(py(m.y)) << "\" r=\"3\" fill=\"none\" stroke=\"white\"/>";
        if (!m.label.empty())
            os << "<text x=\"" << num(px(m.x) + 5) << "\" y=\"" << num(py(m.y) - 5) << "\" font-size=\"10\" fill=\"white\">"
               << escape(m.label) << "</text>";
        os << "\n";
    }
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << side << "\" height=\"" << side
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : nice_ticks(map.x0, map.x1))
        os << "<text x=\"" << num(px(v)) << "\" y=\"" << top + side + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << label(v) << "</text>\n";
    for (double v : nice_ticks(map.y0, map.y1))
        os << "<text x=\"" << left - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
           << label(v) << "</text>\n";
    os << "<text x=\"" << left + side / 2 << "\" y=\"" << top + side + 36
       << "\" text-anchor=\"middle\" font-size=\"13\">x [wavelengths]</text>\n";
    os << "<text transform=\"translate(18," << top + side / 2
       << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">y [wavelengths]</text>\n";
    const double bx = left + side + 20;
    for (int i = 0; i < 64; ++i) {
        int r, g, b;
        colormap(i / 63.0, r, g, b);
        char fill[8];
        std::snprintf(fill, sizeof fill, "#%02x%02x%02x", r, g, b);
        os << "<rect x=\"" << bx << "\" y=\"" << num(top + side - (i + 1) * side / 64) << "\" width=\"16\" height=\""
           << num(side / 64 + 0.5) << "\" fill=\"" << fill << "\"/>\n";
    }
    os << "<text x=\"" << bx + 20 << "\" y=\"" << top + 10 << "\" font-size=\"10\">" << label(vmax) << "</text>\n";
    os << "<text x=\"" << bx + 20 << "\" y=\"" << top + side << "\" font-size=\"10\">" << label(vmin) << "</text>\n";
    os << "<text transform=\"translate(" << bx + 50 << "," << top + side / 2
       << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(map.colorbar_label) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace labyrinth::svg
