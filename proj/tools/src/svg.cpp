// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda_app/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace coda::app {

namespace {

constexpr double kLeft = 60, kRight = 20, kTop = 36, kBottom = 48;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_text(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

// Roughly five ticks at 1/2/5 multiples.
std::vector<double> ticks(double lo, double hi)
{
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
    return out;
}

} // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, double width, double height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)), width_(width), height_(height)
{
}

void SvgPlot::set_x_range(double lo, double hi)
{
    xlo_ = lo;
    xhi_ = hi;
    x_fixed_ = true;
}

void SvgPlot::set_y_range(double lo, double hi)
{
    ylo_ = lo;
    yhi_ = hi;
    y_fixed_ = true;
}

void SvgPlot::add_scatter(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                          double radius, double opacity)
{
    scatters_.push_back({xs, ys, color, radius, opacity});
}

void SvgPlot::add_line(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                       const std::string& label, const std::string& css_class)
{
    lines_.push_back({xs, ys, color, label, css_class});
}

void SvgPlot::add_marker(double x, double y, const std::string& color, const std::string& label)
{
    markers_.push_back({x, y, color, label});
}

void SvgPlot::fit_ranges(double& xlo, double& xhi, double& ylo, double& yhi) const
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    double ax = inf, bx = -inf, ay = inf, by = -inf;
    auto take = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
        for (double x : xs) ax = std::min(ax, x), bx = std::max(bx, x);
        for (double y : ys) ay = std::min(ay, y), by = std::max(by, y);
    };
    for (const auto& s : scatters_) take(s.xs, s.ys);
    for (const auto& l : lines_) take(l.xs, l.ys);
    for (const auto& m : markers_) take({m.x}, {m.y});
    if (!x_fixed_) {
        xlo = std::isfinite(ax) ? ax : 0.0;
        xhi = std::isfinite(bx) ? bx : 1.0;
        if (xhi - xlo < 1e-9) xhi = xlo + 1.0;
    }
    if (!y_fixed_) {
        ylo = std::isfinite(ay) ? ay : 0.0;
        yhi = std::isfinite(by) ? by : 1.0;
        const double pad = 0.05 * std::max(yhi - ylo, 1e-9);
        ylo -= pad;
        yhi += pad;
    }
}

double SvgPlot::px(double x) const { return kLeft + (x - xlo_) / (xhi_ - xlo_) * (width_ - kLeft - kRight); }
double SvgPlot::py(double y) const { return height_ - kBottom - (y - ylo_) / (yhi_ - ylo_) * (height_ - kTop - kBottom); }

std::string SvgPlot::render() const
{
    fit_ranges(xlo_, xhi_, ylo_, yhi_);

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + num(width_ / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + escape(title_) + "</text>\n";

    const double x0 = kLeft, x1 = width_ - kRight, y0 = height_ - kBottom, y1 = kTop;
    o += "<g class=\"axes\" stroke=\"#444\" fill=\"none\">\n";
    o += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) + "\" height=\"" + num(y0 - y1) + "\"/>\n";
    o += "</g>\n<g class=\"ticks\" fill=\"#222\">\n";
    for (double t : ticks(xlo_, xhi_)) {
        o += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px(t)) + "\" y2=\"" + num(y0 + 4) +
             "\" stroke=\"#444\"/>";
        o += "<text x=\"" + num(px(t)) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\">" + tick_text(t) + "</text>\n";
    }
    for (double t : ticks(ylo_, yhi_)) {
        o += "<line x1=\"" + num(x0 - 4) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(py(t)) +
             "\" stroke=\"#444\"/>";
        o += "<text x=\"" + num(x0 - 7) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" + tick_text(t) + "</text>\n";
    }
    o += "</g>\n";
    o += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(height_ - 10) + "\" text-anchor=\"middle\">" + escape(x_label_) +
         "</text>\n";
    o += "<text transform=\"translate(14," + num((y0 + y1) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(y_label_) + "</text>\n";

    for (const auto& s : scatters_) {
        o += "<g class=\"scatter\" fill=\"" + s.color + "\" fill-opacity=\"" + num(s.opacity) + "\">\n";
        for (std::size_t k = 0; k < s.xs.size(); ++k)
            o += "<circle cx=\"" + num(px(s.xs[k])) + "\" cy=\"" + num(py(s.ys[k])) + "\" r=\"" + num(s.radius) + "\"/>\n";
        o += "</g>\n";
    }
    for (const auto& l : lines_) {
        o += "<polyline class=\"" + l.css_class + "\" fill=\"none\" stroke=\"" + l.color +
             "\" stroke-width=\"1.6\" points=\"";
        for (std::size_t k = 0; k < l.xs.size(); ++k) o += (k ? " " : "") + num(px(l.xs[k])) + "," + num(py(l.ys[k]));
        o += "\"/>\n";
    }
    for (const auto& m : markers_) {
        o += "<circle class=\"marker\" cx=\"" + num(px(m.x)) + "\" cy=\"" + num(py(m.y)) + "\" r=\"4\" fill=\"" + m.color +
             "\"/>\n";
    }

    // Legend, top-right.
    double ly = y1 + 14;
    auto legend = [&](const std::string& color, const std::string& label) {
        if (label.empty()) return;
        o += "<rect x=\"" + num(x1 - 130) + "\" y=\"" + num(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>";
        o += "<text x=\"" + num(x1 - 115) + "\" y=\"" + num(ly + 1) + "\">" + escape(label) + "</text>\n";
        ly += 15;
    };
    o += "<g class=\"legend\">\n";
    for (const auto& l : lines_) legend(l.color, l.label);
    for (const auto& m : markers_) legend(m.color, m.label);
    o += "</g>\n</svg>\n";
    return o;
}

} // namespace coda::app
