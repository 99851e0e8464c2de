#include "implctl/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace implctl::svg {

namespace {

constexpr double kMarginLeft = 56.0;
constexpr double kMarginRight = 12.0;
constexpr double kMarginTop = 24.0;
constexpr double kMarginBottom = 36.0;

std::string fmt(double v) {
    // Coordinates only need two decimals.
    const double r = std::round(v * 100.0) / 100.0;
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, r == 0.0 ? 0.0 : r);
    return std::string(buf, res.ptr);
}

std::string label_num(double v) {
    std::ostringstream os;
    os.precision(3);
    os << (std::abs(v) < 1e-12 ? 0.0 : v);
    return os.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-9) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

std::vector<double> ticks(const Range& r, int target = 5) {
    const double raw = (r.hi - r.lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (const double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step) {
        out.push_back(t);
    }
    return out;
}

struct Frame {
    Rect plot;
    Range xr;
    Range yr;
    double px(double x) const { return plot.x + (x - xr.lo) / (xr.hi - xr.lo) * plot.w; }
    double py(double y) const { return plot.y + plot.h - (y - yr.lo) / (yr.hi - yr.lo) * plot.h; }
};

Frame make_frame(const Rect& area, Range xr, Range yr) {
    xr.settle();
    yr.settle();
    return {{area.x + kMarginLeft, area.y + kMarginTop, area.w - kMarginLeft - kMarginRight,
             area.h - kMarginTop - kMarginBottom},
            xr,
            yr};
}

void axes(std::ostringstream& os, const Frame& f, const std::string& title,
          const std::string& xlabel, const std::string& ylabel, bool xticks = true) {
    const Rect& p = f.plot;
    os << "<rect x=\"" << fmt(p.x) << "\" y=\"" << fmt(p.y) << "\" width=\"" << fmt(p.w)
       << "\" height=\"" << fmt(p.h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << fmt(p.x + p.w / 2) << "\" y=\"" << fmt(p.y - 8)
       << "\" text-anchor=\"middle\" font-size=\"13\">" << escape_xml(title) << "</text>\n";
    for (const double t : ticks(f.yr)) {
        os << "<line x1=\"" << fmt(p.x) << "\" y1=\"" << fmt(f.py(t)) << "\" x2=\"" << fmt(p.x + p.w)
           << "\" y2=\"" << fmt(f.py(t)) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << fmt(p.x - 4) << "\" y=\"" << fmt(f.py(t) + 4)
           << "\" text-anchor=\"end\" font-size=\"10\">" << label_num(t) << "</text>\n";
    }
    if (xticks) {
        for (const double t : ticks(f.xr)) {
            os << "<text x=\"" << fmt(f.px(t)) << "\" y=\"" << fmt(p.y + p.h + 14)
               << "\" text-anchor=\"middle\" font-size=\"10\">" << label_num(t) << "</text>\n";
        }
    }
    os << "<text x=\"" << fmt(p.x + p.w / 2) << "\" y=\"" << fmt(p.y + p.h + 30)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << escape_xml(xlabel) << "</text>\n";
    os << "<text x=\"" << fmt(p.x - 42) << "\" y=\"" << fmt(p.y + p.h / 2)
       << "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 " << fmt(p.x - 42)
       << ' ' << fmt(p.y + p.h / 2) << ")\">" << escape_xml(ylabel) << "</text>\n";
}

void legend(std::ostringstream& os, const Frame& f, const std::vector<std::pair<std::string, std::string>>& items) {
    double y = f.plot.y + 12;
    for (const auto& [label, color] : items) {
        const double x = f.plot.x + f.plot.w - 150;
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y - 4) << "\" x2=\"" << fmt(x + 18)
           << "\" y2=\"" << fmt(y - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt(x + 22) << "\" y=\"" << fmt(y) << "\" font-size=\"10\">"
           << escape_xml(label) << "</text>\n";
        y += 14;
    }
}

std::string method_color(Method m) {
    switch (m) {
        case Method::Optimal: return "#1f77b4";
        case Method::Backstepping: return "#d62728";
        case Method::LateralServoing: return "#2ca02c";
    }
    return "#000";
}

}  // namespace

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string comment_safe(const std::string& s) {
    std::string out;
    for (const char c : s) {
        if (c == '-' && !out.empty() && out.back() == '-') {
            out += ' ';
        }
        out += c;
    }
    if (!out.empty() && out.back() == '-') out += ' ';
    return out;
}

Canvas::Canvas(double width, double height) : width_(width), height_(height) {}

void Canvas::error_vs_s(const Rect& area, const std::string& title, const std::vector<Series>& series,
                        const std::vector<double>& junctions) {
    Range xr, yr;
    for (const auto& s : series) {
        for (const double x : s.x) xr.add(x);
        for (const double y : s.y) yr.add(y);
    }
    yr.add(0.0);
    const Frame f = make_frame(area, xr, yr);
    std::ostringstream os;
    axes(os, f, title, "curvilinear abscissa s [m]", "implement error [m]");
    for (const double j : junctions) {
        if (j < f.xr.lo || j > f.xr.hi) continue;
        os << "<line x1=\"" << fmt(f.px(j)) << "\" y1=\"" << fmt(f.plot.y) << "\" x2=\""
           << fmt(f.px(j)) << "\" y2=\"" << fmt(f.plot.y + f.plot.h)
           << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
    std::vector<std::pair<std::string, std::string>> items;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        const std::size_t n = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            os << fmt(f.px(s.x[i])) << ',' << fmt(f.py(s.y[i])) << ' ';
        }
        os << "\"/>\n";
        items.emplace_back(s.label, s.color);
    }
    legend(os, f, items);
    body_ += os.str();
}

void Canvas::boxplot(const Rect& area, const std::string& title, const std::vector<Box>& boxes) {
    Range xr{0.0, static_cast<double>(std::max<std::size_t>(boxes.size(), 1))};
    Range yr;
    yr.add(0.0);
    for (const auto& b : boxes) yr.add(b.stats.max);
    const Frame f = make_frame(area, xr, yr);
    std::ostringstream os;
    axes(os, f, title, "configuration", "|implement error| [m]", false);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        const double cx = f.px(static_cast<double>(i) + 0.5);
        const double half = 0.3 * f.plot.w / static_cast<double>(boxes.size());
        os << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(f.py(0.0)) << "\" x2=\"" << fmt(cx)
           << "\" y2=\"" << fmt(f.py(b.stats.max)) << "\" stroke=\"" << b.color << "\"/>\n";
        os << "<rect x=\"" << fmt(cx - half) << "\" y=\"" << fmt(f.py(b.stats.q75)) << "\" width=\""
           << fmt(2 * half) << "\" height=\"" << fmt(f.py(b.stats.q25) - f.py(b.stats.q75))
           << "\" fill=\"white\" stroke=\"" << b.color << "\"/>\n";
        os << "<line x1=\"" << fmt(cx - half) << "\" y1=\"" << fmt(f.py(b.stats.median))
           << "\" x2=\"" << fmt(cx + half) << "\" y2=\"" << fmt(f.py(b.stats.median))
           << "\" stroke=\"" << b.color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(f.plot.y + f.plot.h + 14)
           << "\" text-anchor=\"middle\" font-size=\"9\">" << escape_xml(b.label) << "</text>\n";
    }
    body_ += os.str();
}

void Canvas::sweep_curve(const Rect& area, const std::string& title, const SweepResult& sweep) {
    Range xr, yr;
    yr.add(0.0);
    for (const auto& p : sweep.points) {
        xr.add(p.params.s_h);
        yr.add(p.summary.abs_e_I.q75);
    }
    const Frame f = make_frame(area, xr, yr);
    std::ostringstream os;
    axes(os, f, title, "prediction horizon s_h [m]", "median |implement error| [m]");

    std::vector<const SweepPoint*> ok;
    for (const auto& p : sweep.points) {
        if (std::isfinite(p.summary.abs_e_I.median)) ok.push_back(&p);
    }
    if (!ok.empty()) {
        os << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (const auto* p : ok) {
            os << fmt(f.px(p->params.s_h)) << ',' << fmt(f.py(p->summary.abs_e_I.q75)) << ' ';
        }
        for (auto it = ok.rbegin(); it != ok.rend(); ++it) {
            os << fmt(f.px((*it)->params.s_h)) << ',' << fmt(f.py((*it)->summary.abs_e_I.q25)) << ' ';
        }
        os << "\"/>\n<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
        for (const auto* p : ok) {
            os << fmt(f.px(p->params.s_h)) << ',' << fmt(f.py(p->summary.abs_e_I.median)) << ' ';
        }
        os << "\"/>\n";
        for (const auto* p : ok) {
            os << "<circle cx=\"" << fmt(f.px(p->params.s_h)) << "\" cy=\""
               << fmt(f.py(p->summary.abs_e_I.median)) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        }
    }
    for (const auto& p : sweep.points) {
        if (p.params.s_h != sweep.argmin_s_h || !std::isfinite(p.summary.abs_e_I.median)) continue;
        const double x = f.px(p.params.s_h);
        const double y = f.py(p.summary.abs_e_I.median);
        os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y)
           << "\" r=\"6\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
        os << "<text id=\"argmin\" x=\"" << fmt(x) << "\" y=\"" << fmt(y + 20)
           << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#d62728\">argmin s_h = "
           << label_num(sweep.argmin_s_h) << " m</text>\n";
        break;
    }
    body_ += os.str();
}

std::string Canvas::finish(const std::string& command_line) const {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<!-- generated by: " << comment_safe(command_line) << " -->\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_) << "\" height=\""
       << fmt(height_) << "\" viewBox=\"0 0 " << fmt(width_) << ' ' << fmt(height_)
       << "\" font-family=\"sans-serif\">\n"
       << "<metadata>" << escape_xml(command_line) << "</metadata>\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << body_ << "</svg>\n";
    return os.str();
}

std::string figure4(const ComparisonTable& table, const std::string& command_line) {
    constexpr double kWidth = 820.0;
    constexpr double kPanel = 260.0;
    Canvas canvas(kWidth, 3 * kPanel);
    double top = 0.0;
    std::vector<Box> boxes;
    for (const char* placement : {"rear", "front"}) {
        std::vector<Series> series;
        std::vector<double> junctions;
        for (const auto& e : table.entries) {
            if (e.placement != placement) continue;
            Series s{to_string(e.method), method_color(e.method), {}, {}};
            // Every 10th sample keeps the file small without visible loss.
            for (std::size_t i = 0; i < e.log.records.size(); i += 10) {
                s.x.push_back(e.log.records[i].s);
                s.y.push_back(e.log.records[i].e_I_exact);
            }
            series.push_back(std::move(s));
            junctions = e.log.junctions;
            boxes.push_back({std::string(placement) + " " + to_string(e.method),
                             method_color(e.method), e.summary.abs_e_I});
        }
        if (series.empty()) continue;
        canvas.error_vs_s({0, top, kWidth, kPanel}, std::string(placement) + " implement",
                          series, junctions);
        top += kPanel;
    }
    canvas.boxplot({0, top, kWidth, kPanel}, "|implement error| after convergence", boxes);
    return canvas.finish(command_line);
}

std::string figure6(const SweepResult& sweep, const std::string& command_line) {
    Canvas canvas(640.0, 400.0);
    canvas.sweep_curve({0, 0, 640.0, 400.0}, "implement error against prediction horizon", sweep);
    return canvas.finish(command_line);
}

}  // namespace implctl::svg
