#pragma once

#include <string>
#include <vector>

#include "implctl/harness.hpp"

namespace implctl::svg {

struct Rect {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
};

struct Box {
    std::string label;
    std::string color;
    Stats stats;
};

/// Accumulates SVG elements; `finish` wraps them in a document.
class Canvas {
public:
    Canvas(double width, double height);

    /// Error-vs-abscissa panel: one polyline per series, dashed markers at `junctions`.
    void error_vs_s(const Rect& area, const std::string& title, const std::vector<Series>& series,
                    const std::vector<double>& junctions);
    /// Box plot of quartiles with whiskers at 0 and max.
    void boxplot(const Rect& area, const std::string& title, const std::vector<Box>& boxes);
    /// Median curve over s_h with a shaded q25..q75 band and the argmin marked.
    void sweep_curve(const Rect& area, const std::string& title, const SweepResult& sweep);

    /// Complete document. `command_line` is embedded as a comment and as metadata.
    std::string finish(const std::string& command_line) const;

private:
    double width_;
    double height_;
    std::string body_;
};

/// Two stacked error panels (rear, front) and a box-plot panel.
std::string figure4(const ComparisonTable& table, const std::string& command_line);
/// Median |e_I| against horizon with the interquartile band.
std::string figure6(const SweepResult& sweep, const std::string& command_line);

/// Escapes &, <, >, and quotes for text and attribute content.
std::string escape_xml(const std::string& s);
/// Makes arbitrary text safe inside <!-- -->: no "--" and no trailing '-'.
std::string comment_safe(const std::string& s);

}  // namespace implctl::svg
