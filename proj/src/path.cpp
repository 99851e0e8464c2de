#include "implctl/path.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "implctl/errors.hpp"

namespace implctl {

namespace {

constexpr double kG1Tolerance = 1e-9;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Candidate {
    double s;
    double distance;
};

}  // namespace

double wrap_angle(double a) {
    if (a > -std::numbers::pi && a <= std::numbers::pi) {
        return a;
    }
    a = std::remainder(a, kTwoPi);
    if (a <= -std::numbers::pi) {
        a += kTwoPi;
    }
    return a;
}

Vec2 PathSegment::point(double ds) const {
    if (kind == SegmentKind::Line) {
        return start_point + ds * unit(start_heading);
    }
    const double r = 1.0 / curvature;
    const double h = start_heading + curvature * ds;
    return start_point + Vec2{r * (std::sin(h) - std::sin(start_heading)),
                              r * (std::cos(start_heading) - std::cos(h))};
}

ReferencePath::ReferencePath(std::vector<PathSegment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) {
        throw ConfigError("path has no segments", "segment");
    }
    cumulative_.reserve(segments_.size() + 1);
    cumulative_.push_back(0.0);
    int lines = 0;
    int arcs = 0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& seg = segments_[i];
        if (!(seg.length > 0.0) || !std::isfinite(seg.length)) {
            throw ConfigError("segment " + std::to_string(i) + ": length must be > 0", "length_m");
        }
        if (seg.kind == SegmentKind::Line && seg.curvature != 0.0) {
            throw ConfigError("segment " + std::to_string(i) + ": line must have zero curvature",
                              "curvature_per_m");
        }
        if (seg.kind == SegmentKind::Arc && !(std::abs(seg.curvature) > 0.0)) {
            throw ConfigError("segment " + std::to_string(i) + ": arc must have non-zero curvature",
                              "curvature_per_m");
        }
        if (i > 0) {
            const auto& prev = segments_[i - 1];
            const double dp = (prev.end_point() - seg.start_point).norm();
            const double dh = std::abs(wrap_angle(prev.end_heading() - seg.start_heading));
            if (dp > kG1Tolerance || dh > kG1Tolerance) {
                std::ostringstream msg;
                msg << "G1 discontinuity at junction " << i << " (between segments " << i - 1
                    << " and " << i << "): position gap " << dp << " m, heading gap " << dh
                    << " rad";
                throw ConfigError(msg.str(), "segment");
            }
        }
        cumulative_.push_back(cumulative_.back() + seg.length);
        labels_.push_back(seg.kind == SegmentKind::Line ? "L" + std::to_string(++lines)
                                                        : "C" + std::to_string(++arcs));
    }
}

void ReferencePath::check_range(double s) const {
    if (!(s >= 0.0 && s <= total_length())) {
        std::ostringstream msg;
        msg << "abscissa " << s << " outside [0, " << total_length() << "]";
        throw RangeError(msg.str());
    }
}

std::size_t ReferencePath::segment_index(double s) const {
    check_range(s);
    // First cumulative entry strictly greater than s marks the end of the containing segment.
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    const auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
    return std::min(idx, segments_.size() - 1);
}

PathPoint ReferencePath::point_at(double s) const {
    const auto i = segment_index(s);
    const auto& seg = segments_[i];
    const double ds = s - cumulative_[i];
    return {seg.point(ds), wrap_angle(seg.heading(ds)), seg.curvature};
}

double ReferencePath::curvature_at(double s) const { return segments_[segment_index(s)].curvature; }

double ReferencePath::curvature_clamped(double s) const {
    return curvature_at(std::clamp(s, 0.0, total_length()));
}

std::vector<double> ReferencePath::curvature_junctions() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < segments_.size(); ++i) {
        if (segments_[i].curvature != segments_[i - 1].curvature) {
            out.push_back(cumulative_[i]);
        }
    }
    return out;
}

double ReferencePath::min_arc_radius() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& seg : segments_) {
        if (seg.kind == SegmentKind::Arc) {
            r = std::min(r, 1.0 / std::abs(seg.curvature));
        }
    }
    return r;
}

std::string ReferencePath::segment_label(std::size_t index) const { return labels_.at(index); }

Projection ReferencePath::project(Vec2 p, double heading) const {
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& seg = segments_[i];
        const double s0 = cumulative_[i];
        auto add = [&](double ds) {
            ds = std::clamp(ds, 0.0, seg.length);
            candidates.push_back({s0 + ds, (p - seg.point(ds)).norm()});
        };
        add(0.0);
        add(seg.length);
        if (seg.kind == SegmentKind::Line) {
            const double t = (p - seg.start_point).dot(unit(seg.start_heading));
            if (t > 0.0 && t < seg.length) {
                add(t);
            }
            continue;
        }
        const double r = 1.0 / seg.curvature;
        const Vec2 center = seg.start_point + r * Vec2{-std::sin(seg.start_heading),
                                                       std::cos(seg.start_heading)};
        const Vec2 w = p - center;
        if (w.norm() == 0.0) {
            continue;  // every arc point is equidistant; endpoints already cover it
        }
        // Tangent heading at the foot point; left arcs sit at angle h - π/2 around the center.
        const double phi = std::atan2(w.y, w.x);
        const double h_foot = seg.curvature > 0.0 ? phi + std::numbers::pi / 2.0
                                                  : phi - std::numbers::pi / 2.0;
        const double base = wrap_angle(h_foot - seg.start_heading) / seg.curvature;
        const double period = kTwoPi / std::abs(seg.curvature);
        for (double ds = base - period * std::ceil(base / period); ds < seg.length; ds += period) {
            if (ds > 0.0) {
                add(ds);
            }
        }
    }

    auto best = candidates.front();
    for (const auto& c : candidates) {
        if (c.distance < best.distance || (c.distance == best.distance && c.s < best.s)) {
            best = c;
        }
    }
    Projection out;
    const double tie_tol = 1e-12 * (1.0 + best.distance);
    for (const auto& c : candidates) {
        if (std::abs(c.distance - best.distance) <= tie_tol && std::abs(c.s - best.s) > 1e-9) {
            out.ambiguous = true;
            best.s = std::min(best.s, c.s);
        }
    }

    const PathPoint pp = point_at(best.s);
    const Vec2 d = p - pp.position;
    const Vec2 t = unit(pp.heading);
    if ((best.s == 0.0 && d.dot(t) < -1e-12) || (best.s == total_length() && d.dot(t) > 1e-12)) {
        out.clamped = true;
    }
    out.frenet.s = best.s;
    out.frenet.y = t.cross(d);
    out.frenet.theta_tilde = wrap_angle(heading - pp.heading);
    out.distance = d.norm();
    return out;
}

ReferencePath build_path(const PathSpec& spec) {
    std::vector<PathSegment> segs;
    Vec2 pos = spec.start_point;
    double heading = spec.start_heading_rad;
    for (std::size_t i = 0; i < spec.segments.size(); ++i) {
        const auto& d = spec.segments[i];
        PathSegment seg;
        seg.kind = d.kind;
        seg.length = d.length_m;
        seg.curvature = d.curvature_per_m;
        if (d.has_start_pose) {
            seg.start_point = d.start_point;
            seg.start_heading = d.start_heading_rad;
        } else {
            seg.start_point = pos;
            seg.start_heading = heading;
        }
        segs.push_back(seg);
        if (seg.length > 0.0 && std::isfinite(seg.length)) {
            pos = seg.end_point();
            heading = wrap_angle(seg.end_heading());
        }
    }
    return ReferencePath(std::move(segs));
}

namespace {

SegmentDescriptor line(double length) {
    SegmentDescriptor d;
    d.kind = SegmentKind::Line;
    d.length_m = length;
    return d;
}

SegmentDescriptor arc(double radius, double sweep_rad, bool left) {
    SegmentDescriptor d;
    d.kind = SegmentKind::Arc;
    d.length_m = radius * sweep_rad;
    d.curvature_per_m = (left ? 1.0 : -1.0) / radius;
    return d;
}

}  // namespace

PathSpec path_preset(const std::string& name) {
    constexpr double kQuarter = std::numbers::pi / 2.0;
    PathSpec spec;
    if (name == "exp1") {
        spec.segments = {line(20.0), arc(10.0, kQuarter, true), arc(8.0, kQuarter, false)};
    } else if (name == "exp2") {
        spec.segments = {line(10.0),
                         arc(10.0, kQuarter, true),
                         line(10.0),
                         arc(8.0, kQuarter, false),
                         arc(12.0, std::numbers::pi / 3.0, true),
                         line(10.0)};
    } else {
        throw ConfigError("unknown path preset '" + name + "'", "preset");
    }
    return spec;
}

ReferencePath build_experiment_path(const std::string& preset) { return build_path(path_preset(preset)); }

}  // namespace implctl
