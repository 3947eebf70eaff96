#pragma once

// Minimal SVG emitter for line plots, scatter plots and histograms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "phimc/csv.hpp"
#include "phimc/stats.hpp"

namespace phimc::svg {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    bool markers = false;  ///< scatter instead of polyline
};

struct Marker {
    double x = 0.0;
    std::string label;
};

struct Plot {
    Plot(std::string t, std::string xl, std::string yl)
        : title(std::move(t)), x_label(std::move(xl)), y_label(std::move(yl)) {}

    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<Marker> vertical_markers;
    bool log_y = false;
    double width = 640.0;
    double height = 420.0;
};

namespace detail {

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string n(double v) { return csv::number(v, 6); }

struct Frame {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    double w = 640, h = 420;
    bool log_y = false;
    double left = 70, right = 20, top = 40, bottom = 50;

    Frame(double xa, double xb, double ya, double yb) : x0(xa), x1(xb), y0(ya), y1(yb) {}

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
    double py(double y) const {
        const double v = log_y ? std::log10(std::max(y, 1e-300)) : y;
        return h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom);
    }
};

inline void pad(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
}

inline std::string axes(const Frame& f, const std::string& title, const std::string& xl, const std::string& yl) {
    std::string s;
    s += "<rect x=\"0\" y=\"0\" width=\"" + n(f.w) + "\" height=\"" + n(f.h) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + n(f.w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
    const double bx = f.left, by = f.h - f.bottom, tx = f.w - f.right, ty = f.top;
    s += "<polyline fill=\"none\" stroke=\"black\" points=\"" + n(bx) + "," + n(ty) + " " + n(bx) + "," + n(by) + " " +
         n(tx) + "," + n(by) + "\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
        const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        const double X = f.px(xv), Y = by - (by - ty) * i / 4.0;
        s += "<line x1=\"" + n(X) + "\" y1=\"" + n(by) + "\" x2=\"" + n(X) + "\" y2=\"" + n(by + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + n(X) + "\" y=\"" + n(by + 18) + "\" text-anchor=\"middle\" font-size=\"11\">" + n(xv) + "</text>\n";
        s += "<line x1=\"" + n(bx - 5) + "\" y1=\"" + n(Y) + "\" x2=\"" + n(bx) + "\" y2=\"" + n(Y) + "\" stroke=\"black\"/>\n";
        const std::string label = f.log_y ? "1e" + n(yv) : n(yv);
        s += "<text x=\"" + n(bx - 8) + "\" y=\"" + n(Y + 4) + "\" text-anchor=\"end\" font-size=\"11\">" + label + "</text>\n";
    }
    s += "<text x=\"" + n((bx + tx) / 2) + "\" y=\"" + n(f.h - 12) + "\" text-anchor=\"middle\" font-size=\"12\">" +
         escape(xl) + "</text>\n";
    s += "<text x=\"16\" y=\"" + n((by + ty) / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
         n((by + ty) / 2) + ")\">" + escape(yl) + "</text>\n";
    return s;
}

inline std::string open(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + n(w) + "\" height=\"" + n(h) + "\" viewBox=\"0 0 " +
           n(w) + " " + n(h) + "\">\n";
}

}  // namespace detail

inline std::string render(const Plot& p) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : p.series)
        for (auto [x, y] : s.points) {
            if (p.log_y) {
                if (!(y > 0.0)) continue;
                y = std::log10(y);
            }
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    detail::pad(x0, x1);
    detail::pad(y0, y1);
    const double margin = 0.05 * (y1 - y0);
    detail::Frame f{x0, x1, y0 - margin, y1 + margin};
    f.w = p.width;
    f.h = p.height;
    f.log_y = p.log_y;

    std::string s = detail::open(p.width, p.height) + detail::axes(f, p.title, p.x_label, p.y_label);
    for (const auto& m : p.vertical_markers) {
        const double X = f.px(m.x);
        s += "<line x1=\"" + detail::n(X) + "\" y1=\"" + detail::n(f.top) + "\" x2=\"" + detail::n(X) + "\" y2=\"" +
             detail::n(f.h - f.bottom) + "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
        s += "<text x=\"" + detail::n(X + 3) + "\" y=\"" + detail::n(f.top + 12) + "\" font-size=\"10\" fill=\"gray\">" +
             detail::escape(m.label) + "</text>\n";
    }
    double legend_y = f.top + 4;
    for (const auto& series : p.series) {
        if (series.markers) {
            for (const auto& [x, y] : series.points) {
                if (p.log_y && !(y > 0.0)) continue;
                s += "<circle cx=\"" + detail::n(f.px(x)) + "\" cy=\"" + detail::n(f.py(y)) + "\" r=\"2\" fill=\"" +
                     series.color + "\"/>\n";
            }
        } else {
            s += "<polyline fill=\"none\" stroke=\"" + series.color + "\" stroke-width=\"1.5\" points=\"";
            bool first = true;
            for (const auto& [x, y] : series.points) {
                if (p.log_y && !(y > 0.0)) continue;
                s += (first ? "" : " ") + detail::n(f.px(x)) + "," + detail::n(f.py(y));
                first = false;
            }
            s += "\"/>\n";
        }
        if (!series.label.empty()) {
            s += "<text x=\"" + detail::n(f.w - f.right - 4) + "\" y=\"" + detail::n(legend_y + 10) +
                 "\" text-anchor=\"end\" font-size=\"11\" fill=\"" + series.color + "\">" +
                 detail::escape(series.label) + "</text>\n";
            legend_y += 14;
        }
    }
    return s + "</svg>\n";
}

inline std::string render_histogram(const stats::Histogram& h, const std::string& title, const std::string& x_label) {
    std::size_t top = 1;
    for (auto c : h.counts) top = std::max(top, c);
    detail::Frame f{h.lo, h.hi, 0.0, static_cast<double>(top) * 1.05};
    f.w = 640;
    f.h = 420;
    std::string s = detail::open(f.w, f.h) + detail::axes(f, title, x_label, "count");
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double xa = f.px(h.lo + i * h.bin_width()), xb = f.px(h.lo + (i + 1) * h.bin_width());
        const double ya = f.py(static_cast<double>(h.counts[i])), yb = f.py(0.0);
        s += "<rect x=\"" + detail::n(xa) + "\" y=\"" + detail::n(ya) + "\" width=\"" + detail::n(std::max(xb - xa - 1, 0.5)) +
             "\" height=\"" + detail::n(yb - ya) + "\" fill=\"#4c72b0\"/>\n";
    }
    return s + "</svg>\n";
}

}  // namespace phimc::svg
