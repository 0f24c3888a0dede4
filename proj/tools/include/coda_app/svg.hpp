// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace coda::app {

/// Minimal line/scatter chart rendered straight to SVG text.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label, double width = 480, double height = 380);

    void set_x_range(double lo, double hi);
    void set_y_range(double lo, double hi);

    void add_scatter(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                     double radius = 1.5, double opacity = 0.35);
    /// Polyline series; `css_class` lets tooling count series in the output.
    void add_line(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                  const std::string& label, const std::string& css_class = "series");
    void add_marker(double x, double y, const std::string& color, const std::string& label);

    std::string render() const;

private:
    struct Scatter {
        std::vector<double> xs, ys;
        std::string color;
        double radius, opacity;
    };
    struct Line {
        std::vector<double> xs, ys;
        std::string color, label, css_class;
    };
    struct Marker {
        double x, y;
        std::string color, label;
    };

    double px(double x) const;
    double py(double y) const;
    void fit_ranges(double& xlo, double& xhi, double& ylo, double& yhi) const;

    std::string title_, x_label_, y_label_;
    double width_, height_;
    bool x_fixed_ = false, y_fixed_ = false;
    mutable double xlo_ = 0, xhi_ = 1, ylo_ = 0, yhi_ = 1; // resolved at render time
    std::vector<Scatter> scatters_;
    std::vector<Line> lines_;
    std::vector<Marker> markers_;
};

} // namespace coda::app
