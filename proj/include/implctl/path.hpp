#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace implctl {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

/// Wraps an angle to (-π, π].
double wrap_angle(double a);

inline Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }

enum class SegmentKind { Line, Arc };

/// One constant-curvature piece of the reference path. Positive curvature turns left.
struct PathSegment {
    SegmentKind kind = SegmentKind::Line;
    Vec2 start_point;
    double start_heading = 0.0;
    double length = 0.0;
    double curvature = 0.0;

    Vec2 point(double ds) const;
    double heading(double ds) const { return start_heading + curvature * ds; }
    Vec2 end_point() const { return point(length); }
    double end_heading() const { return heading(length); }
};

/// Descriptor used to assemble a path. An explicit start pose is optional;
/// when present it must match the previous segment's end pose (G1).
struct SegmentDescriptor {
    SegmentKind kind = SegmentKind::Line;
    double length_m = 0.0;
    double curvature_per_m = 0.0;
    bool has_start_pose = false;
    Vec2 start_point;
    double start_heading_rad = 0.0;
};

struct PathSpec {
    Vec2 start_point;
    double start_heading_rad = 0.0;
    std::vector<SegmentDescriptor> segments;
};

struct PathPoint {
    Vec2 position;
    double heading = 0.0;
    double curvature = 0.0;
};

struct FrenetState {
    double s = 0.0;
    double y = 0.0;            ///< lateral deviation, positive left of the tangent
    double theta_tilde = 0.0;  ///< heading minus tangent heading, wrapped
};

/// Result of a world-to-path projection. `ambiguous` is set when two distinct
/// abscissae are equally close (smallest s is returned); `clamped` when the
/// foot point lies beyond either path end.
struct Projection {
    FrenetState frenet;
    double distance = 0.0;
    bool ambiguous = false;
    bool clamped = false;
};

/// Immutable piecewise line/arc path. All queries are pure.
class ReferencePath {
public:
    /// Validates segment invariants and G1 continuity; throws ConfigError naming the
    /// offending segment or junction.
    explicit ReferencePath(std::vector<PathSegment> segments);

    std::span<const PathSegment> segments() const { return segments_; }
    /// cumulative_lengths()[i] is the abscissa where segment i starts; the last
    /// entry is total_length().
    std::span<const double> cumulative_lengths() const { return cumulative_; }
    double total_length() const { return cumulative_.back(); }

    /// Segment containing s. A junction abscissa belongs to the later segment.
    std::size_t segment_index(double s) const;

    PathPoint point_at(double s) const;
    double curvature_at(double s) const;
    /// Curvature with s clamped into [0, total_length]; used for horizon lookups.
    double curvature_clamped(double s) const;

    /// Abscissae of curvature discontinuities (interior junctions whose
    /// curvatures differ).
    std::vector<double> curvature_junctions() const;

    /// Smallest |1/c| over arc segments, +inf for a path of lines only.
    double min_arc_radius() const;

    /// Label "L<k>" or "C<k>" numbering lines and arcs separately, 1-based.
    std::string segment_label(std::size_t index) const;

    Projection project(Vec2 position, double heading) const;

private:
    void check_range(double s) const;

    std::vector<PathSegment> segments_;
    std::vector<double> cumulative_;
    std::vector<std::string> labels_;
};

/// Chains descriptors from the start pose. Throws ConfigError on invalid
/// segment values or a G1 break ("junction <i>").
ReferencePath build_path(const PathSpec& spec);

/// Named presets: "exp1" (straight, left arc, right arc) and "exp2"
/// (three straights and three arcs including an arc-to-arc junction).
PathSpec path_preset(const std::string& name);
ReferencePath build_experiment_path(const std::string& preset);

}  // namespace implctl
